"""Structured tensor grids over D x G x (-T, T) and the discrete calculus on them.

The spatial box D (n axes), the cube G = {max_j |y_j| < L} (m axes) and the
time interval (-T, T) are discretized with uniform nodes that include all
boundary faces and t = 0 exactly.  Everything downstream (weights, operators,
evolution, weighted quadratures) computes on the lattice defined here.

Axis convention for value arrays: the first n axes are x, the next m are y,
the last axis is t, so for n = m = 1 a field has shape (nx, ny, nt).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "ComplexField",
    "Region",
    "integrate",
    "gradient",
    "laplacian",
    "normal_derivative",
    "write_field",
    "read_field",
]


def _as_tuple(v, length):
    if np.isscalar(v):
        return (float(v),) * length
    t = tuple(float(c) for c in v)
    if len(t) != length:
        raise ValueError(f"expected {length} components, got {len(t)}")
    return t


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid for D x G x (-T, T).

    ``x_min``/``x_max`` give the per-axis extents of the box D, ``L`` the
    half-width of the cube G and ``T`` the time horizon.  ``nx``/``ny``/``nt``
    count nodes per axis; ``nt`` must be odd so t = 0 is a node.
    """

    n: int
    m: int
    x_min: tuple
    x_max: tuple
    L: float
    T: float
    nx: int
    ny: int
    nt: int

    def __post_init__(self):
        object.__setattr__(self, "x_min", _as_tuple(self.x_min, self.n))
        object.__setattr__(self, "x_max", _as_tuple(self.x_max, self.n))
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be >= 1")
        for lo, hi in zip(self.x_min, self.x_max):
            if not hi > lo:
                raise ValueError("x_max must exceed x_min on every axis")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if min(self.nx, self.ny, self.nt) < 3:
            raise ValueError("all resolutions must be >= 3")
        if self.nt % 2 == 0:
            raise ValueError("nt must be odd so that t = 0 is a grid node")

    # -- layout -----------------------------------------------------------

    @property
    def ndim(self):
        return self.n + self.m + 1

    @property
    def shape(self):
        return (self.nx,) * self.n + (self.ny,) * self.m + (self.nt,)

    @property
    def x_axes(self):
        return tuple(range(self.n))

    @property
    def y_axes(self):
        return tuple(range(self.n, self.n + self.m))

    @property
    def t_axis(self):
        return self.n + self.m

    @property
    def t_index0(self):
        """Index of the t = 0 node."""
        return (self.nt - 1) // 2

    @cached_property
    def coords(self):
        """Per-axis node coordinate arrays, in grid-axis order."""
        cs = [np.linspace(self.x_min[i], self.x_max[i], self.nx) for i in range(self.n)]
        cs += [np.linspace(-self.L, self.L, self.ny) for _ in range(self.m)]
        cs.append(np.linspace(-self.T, self.T, self.nt))
        return tuple(cs)

    @cached_property
    def spacings(self):
        return tuple((c[-1] - c[0]) / (len(c) - 1) for c in self.coords)

    @property
    def dt(self):
        return self.spacings[self.t_axis]

    def axis_size(self, axis):
        return self.shape[axis]

    def expand(self, values_1d, axis):
        """Reshape a per-axis 1D array so it broadcasts along ``axis``."""
        sh = [1] * self.ndim
        sh[axis] = len(values_1d)
        return np.asarray(values_1d).reshape(sh)

    def coord_grid(self, axis):
        """Axis coordinates broadcast to a rank-``ndim`` array."""
        return self.expand(self.coords[axis], axis)

    # -- regions ----------------------------------------------------------

    def omega(self):
        """The full box D x G x (-T, T) as a volume region."""
        return Region(tuple(slice(0, s) for s in self.shape))

    def box(self, bounds):
        """Volume sub-region from per-axis value bounds.

        ``bounds`` maps axis index -> (lo, hi); nodes with lo <= coord <= hi
        (up to round-off slack) are selected.  Omitted axes span fully.
        """
        slices = []
        for a in range(self.ndim):
            if a in bounds:
                lo, hi = bounds[a]
                c = self.coords[a]
                tol = 1e-9 * max(1.0, abs(c[-1] - c[0]))
                idx = np.nonzero((c >= lo - tol) & (c <= hi + tol))[0]
                if idx.size == 0:
                    raise ValueError("empty integration region")
                slices.append(slice(int(idx[0]), int(idx[-1]) + 1))
            else:
                slices.append(slice(0, self.shape[a]))
        return Region(tuple(slices))

    def face(self, axis, side, bounds=None):
        """Boundary face of the box on ``axis`` (``side`` in {'low','high'}).

        The face axis carries no quadrature measure; remaining axes may be
        clipped with ``bounds`` as in :meth:`box`.
        """
        if axis >= self.t_axis:
            raise ValueError("faces are spatial; the time axis has no face region")
        base = self.box(bounds or {})
        idx = 0 if side == "low" else self.shape[axis] - 1
        slices = list(base.slices)
        slices[axis] = slice(idx, idx + 1)
        return Region(tuple(slices), face_axes=(axis,))

    def time_slice(self, index):
        """Single-time-slice region (no dt measure)."""
        slices = [slice(0, s) for s in self.shape]
        slices[self.t_axis] = slice(index, index + 1)
        return Region(tuple(slices), face_axes=(self.t_axis,))

    def interior_mask(self):
        """Boolean mask of nodes interior along every axis."""
        mask = np.ones(self.shape, dtype=bool)
        for a in range(self.ndim):
            sl = [slice(None)] * self.ndim
            for edge in (0, -1):
                sl[a] = edge
                mask[tuple(sl)] = False
        return mask

    # -- nested refinement and extraction ---------------------------------

    def refined(self, factor=2):
        """Grid with every spacing divided by ``factor`` (nodes nested)."""
        return GridSpec(
            self.n, self.m, self.x_min, self.x_max, self.L, self.T,
            (self.nx - 1) * factor + 1,
            (self.ny - 1) * factor + 1,
            (self.nt - 1) * factor + 1,
        )

    def y_subgrid(self, half_width):
        """Sub-grid with the y cube clipped to {max_j |y_j| <= half_width}.

        ``half_width`` must land on grid nodes; x and t extents are kept.
        Returns (subgrid, index_slices) where the slices cut fields defined on
        this grid down to the sub-grid.
        """
        c = self.coords[self.y_axes[0]]
        h = self.spacings[self.y_axes[0]]
        k = (self.L - half_width) / h
        if abs(k - round(k)) > 1e-9:
            raise ValueError("y sub-grid half-width must be grid aligned")
        k = int(round(k))
        ny_sub = self.ny - 2 * k
        if ny_sub < 3:
            raise ValueError("y sub-grid too small")
        sub = GridSpec(self.n, self.m, self.x_min, self.x_max,
                       float(c[self.ny - 1 - k]), self.T, self.nx, ny_sub, self.nt)
        slices = [slice(None)] * self.ndim
        for a in self.y_axes:
            slices[a] = slice(k, self.ny - k)
        return sub, tuple(slices)


@dataclass(frozen=True)
class Region:
    """Product-of-ranges index region; ``face_axes`` carry no measure."""

    slices: tuple
    face_axes: tuple = field(default=())

    def subshape(self):
        return tuple(sl.stop - sl.start for sl in self.slices)


@dataclass(frozen=True)
class ComplexField:
    """Complex grid function with provenance label; immutable after creation."""

    grid: GridSpec
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"value shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite values in field {self.label!r}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values, label=None):
        return ComplexField(self.grid, values, self.label if label is None else label)

    def restrict(self, subgrid, slices, label=None):
        return ComplexField(subgrid, self.values[slices],
                            self.label if label is None else label)

    def abs2(self):
        return np.abs(self.values) ** 2


def _trapezoid_weights(npts, h):
    w = np.full(npts, h)
    w[0] = w[-1] = 0.5 * h
    return w


def integrate(values, grid=None, region=None):
    """Trapezoidal quadrature of a grid function over a region.

    ``values`` may be a :class:`ComplexField` or an array shaped like the full
    grid or like the region's sub-box.  Face axes contribute surface measure
    (weight one); every other axis gets trapezoid weights with the half rule
    at range ends, so the rule is exact for per-axis-affine integrands.
    Returns the real part as a float.
    """
    if isinstance(values, ComplexField):
        grid = values.grid
        values = values.values
    if grid is None:
        raise ValueError("grid required when integrating a bare array")
    region = region or grid.omega()
    v = np.asarray(values)
    if v.shape == grid.shape:
        v = v[region.slices]
    elif v.shape != region.subshape():
        raise ValueError("values match neither the grid nor the region sub-box")
    total = v
    for w in _axis_weights(grid, region):
        total = np.tensordot(total, w, axes=([0], [0]))
    return float(np.real(total))


def _axis_weights(grid, region):
    ws = []
    for a, npts in enumerate(region.subshape()):
        if npts == 0:
            raise ValueError("empty integration region")
        if a in region.face_axes:
            ws.append(np.ones(npts))
        else:
            if npts < 2:
                raise ValueError("empty integration region")
            ws.append(_trapezoid_weights(npts, grid.spacings[a]))
    return ws


def _diff1_axis(v, h, axis):
    """Second-order first derivative along ``axis``: central interior, one-sided ends."""
    v = np.asarray(v)
    if v.shape[axis] < 3:
        raise ValueError("need at least 3 points along axis for differencing")
    g = np.empty_like(v, dtype=complex if np.iscomplexobj(v) else float)
    sl = lambda s: tuple(s if k == axis else slice(None) for k in range(v.ndim))
    g[sl(slice(1, -1))] = (v[sl(slice(2, None))] - v[sl(slice(0, -2))]) / (2 * h)
    g[sl(slice(0, 1))] = (-3 * v[sl(slice(0, 1))] + 4 * v[sl(slice(1, 2))]
                          - v[sl(slice(2, 3))]) / (2 * h)
    g[sl(slice(-1, None))] = (3 * v[sl(slice(-1, None))] - 4 * v[sl(slice(-2, -1))]
                              + v[sl(slice(-3, -2))]) / (2 * h)
    return g


def _diff2_axis(v, h, axis):
    """Second-order second derivative along ``axis``: 3-point interior, 4-point ends."""
    v = np.asarray(v)
    if v.shape[axis] < 4:
        raise ValueError("need at least 4 points along axis for second differencing")
    g = np.empty_like(v, dtype=complex if np.iscomplexobj(v) else float)
    sl = lambda s: tuple(s if k == axis else slice(None) for k in range(v.ndim))
    h2 = h * h
    g[sl(slice(1, -1))] = (v[sl(slice(2, None))] - 2 * v[sl(slice(1, -1))]
                           + v[sl(slice(0, -2))]) / h2
    g[sl(slice(0, 1))] = (2 * v[sl(slice(0, 1))] - 5 * v[sl(slice(1, 2))]
                          + 4 * v[sl(slice(2, 3))] - v[sl(slice(3, 4))]) / h2
    g[sl(slice(-1, None))] = (2 * v[sl(slice(-1, None))] - 5 * v[sl(slice(-2, -1))]
                              + 4 * v[sl(slice(-3, -2))] - v[sl(slice(-4, -3))]) / h2
    return g


def _group_axes(grid, group):
    if group == "x":
        return grid.x_axes
    if group == "y":
        return grid.y_axes
    if group == "t":
        return (grid.t_axis,)
    raise ValueError(f"unknown axis group {group!r}")


def gradient(fld, group):
    """Per-axis first derivatives over an axis group ('x' or 'y').

    Returns a list of ComplexField, one per axis in the group.
    """
    out = []
    for a in _group_axes(fld.grid, group):
        out.append(fld.with_values(_diff1_axis(fld.values, fld.grid.spacings[a], a)))
    return out


def laplacian(fld, group):
    """Sum of per-axis second derivatives over an axis group.

    Interior nodes use the 3-point stencil; boundary planes carry the
    second-order one-sided value so the result stays finite everywhere.
    Residual-style norms should restrict to interior nodes.
    """
    acc = None
    for a in _group_axes(fld.grid, group):
        d2 = _diff2_axis(fld.values, fld.grid.spacings[a], a)
        acc = d2 if acc is None else acc + d2
    return fld.with_values(acc)


def time_diff(fld, order=1):
    """First or second time derivative by stencils on the stored slices."""
    axis = fld.grid.t_axis
    h = fld.grid.dt
    fn = _diff1_axis if order == 1 else _diff2_axis
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    return fld.with_values(fn(fld.values, h, axis))


def normal_derivative(fld, faces):
    """Outward normal derivative on box faces of D.

    ``faces`` is an iterable of (axis, side); each entry yields an array over
    the face (the differentiated axis keeps length one so the result matches
    the face region's sub-box).  Returns a list aligned with ``faces``.
    """
    faces = list(faces)
    if not faces:
        raise ValueError("empty boundary set")
    v = fld.values
    nd = v.ndim
    out = []
    for axis, side in faces:
        h = fld.grid.spacings[axis]
        sl = lambda s: tuple(s if k == axis else slice(None) for k in range(nd))
        if side == "high":
            tr = (3 * v[sl(slice(-1, None))] - 4 * v[sl(slice(-2, -1))]
                  + v[sl(slice(-3, -2))]) / (2 * h)
        elif side == "low":
            # outward normal points toward decreasing coordinate
            tr = (3 * v[sl(slice(0, 1))] - 4 * v[sl(slice(1, 2))]
                  + v[sl(slice(2, 3))]) / (2 * h)
        else:
            raise ValueError(f"unknown face side {side!r}")
        out.append(tr)
    return out


# -- serialization ---------------------------------------------------------
#
# Byte-exact CSV layout (n = m = 1 only):
#   line 1: n,m,nx,ny,nt,x_min,x_max,L,T        (floats printed with %.17g)
#   then one row per node, t fastest, then y, then x:
#   ix,iy,it,re,im                              (%.17g for re and im)


def _fmt(x):
    return f"{x:.17g}"


def write_field(fld, path):
    """Serialize a field (n = m = 1) in the documented CSV layout."""
    g = fld.grid
    if g.n != 1 or g.m != 1:
        raise ValueError("field serialization is defined for n = m = 1 grids")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        head = [str(g.n), str(g.m), str(g.nx), str(g.ny), str(g.nt),
                _fmt(g.x_min[0]), _fmt(g.x_max[0]), _fmt(g.L), _fmt(g.T)]
        fh.write(",".join(head) + "\n")
        v = fld.values
        for ix in range(g.nx):
            for iy in range(g.ny):
                row = v[ix, iy, :]
                for it in range(g.nt):
                    z = row[it]
                    fh.write(f"{ix},{iy},{it},{_fmt(z.real)},{_fmt(z.imag)}\n")


def read_field(path, label=""):
    """Inverse of :func:`write_field`."""
    with open(path, "r", encoding="ascii") as fh:
        head = fh.readline().strip().split(",")
        n, m, nx, ny, nt = (int(c) for c in head[:5])
        x_min, x_max, L, T = (float(c) for c in head[5:])
        if n != 1 or m != 1:
            raise ValueError("field serialization is defined for n = m = 1 grids")
        grid = GridSpec(n, m, (x_min,), (x_max,), L, T, nx, ny, nt)
        vals = np.zeros(grid.shape, dtype=complex)
        for line in fh:
            ix, iy, it, re, im = line.strip().split(",")
            vals[int(ix), int(iy), int(it)] = complex(float(re), float(im))
    return ComplexField(grid, vals, label)
