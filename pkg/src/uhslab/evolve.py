"""Implicit trapezoidal time integration of the mixed-signature evolution.

The model i dt u = H u + f R with H = lap_x - lap_y + p is stepped with the
Cayley scheme

    (I + i dt/2 H) u_{k+1} = (I - i dt/2 H) u_k - i dt f R_{k+1/2},

which is unconditionally stable and exactly norm-preserving for real
symmetric H (the spatial operator here is symmetric indefinite, so explicit
schemes are not an option).  Time runs both ways from the t = 0 data plane:
the backward sweep reuses the same scheme with negative dt, which swaps the
two Cayley factors, so each direction costs one factorization.

Homogeneous Dirichlet data are imposed on the whole spatial boundary; the
unknowns are the interior nodes.  For a single x and a single y axis the
system is solved by a direct sparse factorization; higher axis counts fall
back to a Krylov iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from uhslab.grid import ComplexField, gradient, laplacian, time_diff, integrate

__all__ = [
    "EvolutionProblem",
    "Trajectory",
    "build_hamiltonian",
    "step_scheme",
    "solve",
    "time_derivatives",
    "apriori_M",
]

_KRYLOV_TOL = 1e-12


def _spatial_shape(grid):
    return grid.shape[:-1]


def _interior_view(grid):
    return tuple(slice(1, -1) for _ in _spatial_shape(grid))


def build_hamiltonian(grid, p):
    """Sparse H = lap_x - lap_y + p on interior spatial nodes (Dirichlet).

    Returns (H, interior_shape).  ``p`` may be real or complex with the
    spatial shape of the grid.
    """
    p = np.asarray(p)
    if p.shape != _spatial_shape(grid):
        raise ValueError(f"potential shape {p.shape} does not match spatial grid")
    sizes = [s - 2 for s in _spatial_shape(grid)]
    if min(sizes) < 1:
        raise ValueError("grid too small for interior unknowns")

    def d2(nint, h):
        return sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(nint, nint)) / h**2

    def embed(op, axis):
        mats = [sp.identity(sizes[k], format="csr") for k in range(len(sizes))]
        mats[axis] = op
        out = mats[0]
        for mmat in mats[1:]:
            out = sp.kron(out, mmat, format="csr")
        return out

    H = sp.csr_matrix((int(np.prod(sizes)), int(np.prod(sizes))), dtype=complex)
    for i, a in enumerate(grid.x_axes):
        H = H + embed(d2(sizes[a], grid.spacings[a]), a)
    for a in grid.y_axes:
        H = H - embed(d2(sizes[a], grid.spacings[a]), a)
    p_int = p[_interior_view(grid)].reshape(-1)
    H = H + sp.diags(p_int.astype(complex))
    return H.tocsc(), tuple(sizes)


class _CayleySolver:
    """Factorized (I +/- i dt/2 H) pair with direct or Krylov back ends."""

    def __init__(self, grid, p, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.dt = dt
        H, self.int_shape = build_hamiltonian(grid, p)
        n = H.shape[0]
        eye = sp.identity(n, format="csc")
        self.A_plus = (eye + 0.5j * dt * H).tocsc()
        self.A_minus = (eye - 0.5j * dt * H).tocsc()
        self.direct = grid.n == 1 and grid.m == 1
        if self.direct:
            self._lu_plus = spla.splu(self.A_plus)
            self._lu_minus = spla.splu(self.A_minus)

    def _solve(self, mat, lu, rhs):
        if self.direct:
            return lu.solve(rhs)
        x, info = spla.gmres(mat, rhs, rtol=_KRYLOV_TOL, atol=0.0, maxiter=2000)
        if info != 0:
            raise RuntimeError(f"Krylov solve failed to converge (info={info})")
        return x

    def step(self, u_vals, source_mid, direction):
        """One trapezoidal step; ``direction`` +1 forward, -1 backward."""
        iv = _interior_view(self.grid)
        u_int = u_vals[iv].reshape(-1)
        s_int = (np.zeros_like(u_int) if source_mid is None
                 else np.asarray(source_mid)[iv].reshape(-1))
        h = direction * self.dt
        if direction > 0:
            rhs = self.A_minus @ u_int - 1j * h * s_int
            out = self._solve(self.A_plus, self._lu_plus if self.direct else None, rhs)
            res = np.linalg.norm(self.A_plus @ out - rhs)
        else:
            rhs = self.A_plus @ u_int - 1j * h * s_int
            out = self._solve(self.A_minus, self._lu_minus if self.direct else None, rhs)
            res = np.linalg.norm(self.A_minus @ out - rhs)
        nrm = np.linalg.norm(rhs)
        rel = res / nrm if nrm > 0 else res
        nxt = np.zeros_like(u_vals)
        nxt[iv] = out.reshape(self.int_shape)
        return nxt, float(rel)


def step_scheme(u_k, grid, p, source_mid, dt, direction=1):
    """Single implicit step on a spatial slice (boundary rows kept at zero)."""
    solver = _CayleySolver(grid, p, dt)
    nxt, _ = solver.step(np.asarray(u_k, dtype=complex), source_mid, direction)
    return nxt


@dataclass(frozen=True)
class EvolutionProblem:
    """Forward problem data: potential, t = 0 slice, separable source f R."""

    grid: object
    p: np.ndarray
    initial: np.ndarray
    f: np.ndarray | None = None
    R: np.ndarray | None = None
    span: str = "both"

    def __post_init__(self):
        g = self.grid
        init = np.array(self.initial, dtype=complex)
        if init.shape != _spatial_shape(g):
            raise ValueError("initial slice shape does not match spatial grid")
        # tolerate round-off from analytic data, then pin exact zeros
        tol = 1e-12 * max(1.0, float(np.max(np.abs(init))))
        for a in range(g.ndim - 1):
            sl = [slice(None)] * (g.ndim - 1)
            for edge in (0, -1):
                sl[a] = edge
                if np.max(np.abs(init[tuple(sl)])) > tol:
                    raise ValueError("initial data must vanish on the spatial boundary")
                init[tuple(sl)] = 0.0
        object.__setattr__(self, "initial", init)
        if (self.f is None) != (self.R is None):
            raise ValueError("source requires both f and R")
        if self.R is not None and np.asarray(self.R).shape != g.shape:
            raise ValueError("R must live on the full grid")
        if self.f is not None and np.asarray(self.f).shape != _spatial_shape(g):
            raise ValueError("f must be a spatial field")
        if self.span not in ("both", "forward", "backward"):
            raise ValueError(f"unknown span {self.span!r}")


@dataclass(frozen=True)
class Trajectory:
    """Solved trajectory with per-step solver diagnostics."""

    u: ComplexField
    step_residuals: np.ndarray
    mass_history: np.ndarray

    @property
    def grid(self):
        return self.u.grid


def _mass(grid, slab):
    w = 1.0
    for a in range(grid.ndim - 1):
        w *= grid.spacings[a]
    return float(w * np.sum(np.abs(slab) ** 2))


def solve(problem):
    """Integrate from the t = 0 plane to both horizon ends.

    The scheme is time-reversible, so the backward sweep is the forward
    scheme with negative dt.  Dirichlet boundary values stay exactly zero.
    """
    g = problem.grid
    solver = _CayleySolver(g, np.asarray(problem.p), g.dt)
    vals = np.zeros(g.shape, dtype=complex)
    mid = g.t_index0
    t_slice = [slice(None)] * g.ndim

    def put(k, slab):
        t_slice[g.t_axis] = k
        vals[tuple(t_slice)] = slab

    def src_mid(k_lo):
        if problem.f is None:
            return None
        R = np.asarray(problem.R)
        t_slice[g.t_axis] = k_lo
        r_lo = R[tuple(t_slice)]
        t_slice[g.t_axis] = k_lo + 1
        r_hi = R[tuple(t_slice)]
        return np.asarray(problem.f) * 0.5 * (r_lo + r_hi)

    init = np.asarray(problem.initial, dtype=complex)
    put(mid, init)
    residuals = []
    current = init
    if problem.span in ("both", "forward"):
        for k in range(mid, g.nt - 1):
            current, rel = solver.step(current, src_mid(k), +1)
            residuals.append(rel)
            put(k + 1, current)
    if problem.span in ("both", "backward"):
        current = init
        for k in range(mid, 0, -1):
            current, rel = solver.step(current, src_mid(k - 1), -1)
            residuals.append(rel)
            put(k - 1, current)

    mass = np.empty(g.nt)
    for k in range(g.nt):
        t_slice[g.t_axis] = k
        mass[k] = _mass(g, vals[tuple(t_slice)])
    fld = ComplexField(g, vals, "trajectory")
    return Trajectory(fld, np.asarray(residuals), mass)


def time_derivatives(trajectory, k):
    """k-th time derivative field of the trajectory, k in {1, 2}.

    Centered stencils inside, second-order one-sided stencils at the
    horizon ends; k = 2 uses the direct 3-point second difference.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    u = getattr(trajectory, "u", trajectory)
    if u.grid.nt < 5:
        raise ValueError("trajectory must span at least 5 time slices")
    out = time_diff(u, order=k)
    return out.with_values(out.values, f"dt^{k} {u.label}".strip())


def _h2_norm_sq(fld):
    g = fld.grid
    total = integrate(fld.abs2(), g)
    grads = gradient(fld, "x") + gradient(fld, "y")
    for gr in grads:
        total += integrate(np.abs(gr.values) ** 2, g)
    for group in ("x", "y"):
        total += integrate(np.abs(laplacian(fld, group).values) ** 2, g)
    # mixed second derivative per x/y axis pair
    for gx in gradient(fld, "x"):
        for gxy in gradient(gx, "y"):
            total += integrate(np.abs(gxy.values) ** 2, g)
    return total


def apriori_M(trajectory):
    """Empirical regularity budget: the larger H2-style norm of dt u, dt^2 u.

    The norm gathers the field, first spatial derivatives and (pure plus
    mixed) second spatial derivatives, all in L2 over the full space-time
    box.
    """
    vals = []
    for k in (1, 2):
        d = time_derivatives(trajectory, k)
        vals.append(np.sqrt(_h2_norm_sq(d)))
    return float(max(vals))
