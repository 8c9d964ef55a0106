"""Exponential weight machinery: phase, derivatives, geometry and cut-off.

The weight is phi = exp(gamma * psi) with the quadratic phase

    psi(x, y, t) = |x - x0|^2 - alpha |y - y0|^2 - beta t^2,

anchored at a point x0 outside the closure of D.  This module evaluates psi
and phi with all derivatives in closed form, certifies the pointwise
convexity condition and the sign conditions the inverse pipeline relies on,
runs the parameter-selection chain (alpha, rho, delta, admissible y0 radius),
identifies the illuminated part of the D-boundary, and builds the smooth
cut-off in (y, t) with exact derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from uhslab.grid import ComplexField, GridSpec

__all__ = [
    "WeightParams",
    "WeightDerivatives",
    "SignConditionReport",
    "SelectedParameters",
    "Cutoff",
    "box_distance_range",
    "psi",
    "phi",
    "analytic_derivatives",
    "d1_d2",
    "check_pseudoconvexity",
    "pseudoconvexity_margins",
    "boundary_plus",
    "select_parameters",
    "sign_condition_report",
    "cutoff_chi",
    "cutoff_with_derivatives",
]


def box_distance_range(x_min, x_max, x0):
    """Exact (min, max) of |x - x0| over the closed box [x_min, x_max]."""
    x_min = np.atleast_1d(np.asarray(x_min, dtype=float))
    x_max = np.atleast_1d(np.asarray(x_max, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    lo2 = hi2 = 0.0
    for a, b, c in zip(x_min, x_max, x0):
        lo2 += max(a - c, c - b, 0.0) ** 2
        hi2 += max(abs(a - c), abs(b - c)) ** 2
    return float(np.sqrt(lo2)), float(np.sqrt(hi2))


@dataclass(frozen=True)
class WeightParams:
    """Weight anchor points and shape parameters, with derived geometry.

    ``r`` and ``r_tilde`` are the exact min/max of |x - x0| over the closed
    box D; construction only checks basic bounds (alpha, beta in (0,1),
    x0 outside D) because several diagnostics are legitimately run on
    parameter sets that fail the full selection chain.  Use
    :meth:`feasibility_violations` / :meth:`assert_admissible` to enforce the
    chain (ratio bound, alpha window, y0 radius, delta margin).
    """

    x0: tuple
    y0: tuple
    alpha: float
    beta: float
    gamma: float
    epsilon: float
    delta: float
    rho: float
    L: float
    r: float
    r_tilde: float

    @classmethod
    def for_box(cls, x_min, x_max, x0, y0, alpha, beta, gamma, epsilon,
                delta, rho, L):
        x0t = tuple(np.atleast_1d(np.asarray(x0, dtype=float)))
        y0t = tuple(np.atleast_1d(np.asarray(y0, dtype=float)))
        r, r_tilde = box_distance_range(x_min, x_max, x0t)
        return cls(x0t, y0t, float(alpha), float(beta), float(gamma),
                   float(epsilon), float(delta), float(rho), float(L),
                   r, r_tilde)

    @classmethod
    def for_grid(cls, grid, x0, y0, alpha, beta, gamma, epsilon, delta, rho,
                 L=None):
        return cls.for_box(grid.x_min, grid.x_max, x0, y0, alpha, beta,
                           gamma, epsilon, delta, rho,
                           grid.L if L is None else L)

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.r > 0:
            raise ValueError("x0 must lie outside the closed box D")
        if not self.L > 0:
            raise ValueError("L must be positive")

    def feasibility_violations(self):
        """Selection-chain inequalities that fail, as human-readable strings."""
        bad = []
        a, L, r, rt, rho = self.alpha, self.L, self.r, self.r_tilde, self.rho
        if not rt / r < rho:
            bad.append(f"ratio bound fails: r_tilde/r = {rt / r:.6g} >= rho = {rho:.6g}")
        if not a * L**2 / rho**2 < r**2:
            bad.append("inner window fails: alpha L^2 / rho^2 >= r^2")
        if not rt**2 < a * L**2:
            bad.append("outer window fails: r_tilde^2 >= alpha L^2")
        if not r**2 > a**2 * L**2:
            bad.append("quadratic window fails: r^2 <= alpha^2 L^2")
        if not L > rt / np.sqrt(a):
            bad.append("aperture fails: L <= r_tilde / sqrt(alpha)")
        y0n = float(np.linalg.norm(self.y0))
        if not y0n <= L - L / rho - self.epsilon:
            bad.append(f"y0 radius fails: |y0| = {y0n:.6g} > L - L/rho - epsilon")
        if not L / rho < L - 2 * self.delta:
            bad.append("delta margin fails: L/rho >= L - 2 delta")
        return bad

    def assert_admissible(self):
        bad = self.feasibility_violations()
        if bad:
            raise ValueError("weight parameters inadmissible: " + "; ".join(bad))

    @property
    def kappa1(self):
        return float(np.exp(-self.gamma * self.epsilon))

    @property
    def kappa2(self):
        return float(np.exp(self.gamma * self.epsilon))

    @property
    def kappa(self):
        return self.kappa2 - self.kappa1


def _dist2(coords, centers):
    """Sum of squared offsets; coords is a list of broadcastable arrays."""
    return reduce(np.add, (np.square(c - c0) for c, c0 in zip(coords, centers)))


def psi(params, x, y, t):
    """Quadratic phase at a point (or broadcastable arrays of points)."""
    xc = _components(x, len(params.x0))
    yc = _components(y, len(params.y0))
    t = np.asarray(t, dtype=float)
    return (_dist2(xc, params.x0) - params.alpha * _dist2(yc, params.y0)
            - params.beta * np.square(t))


def _components(v, k):
    """Split a point/array argument into k per-axis arrays."""
    if isinstance(v, (list, tuple)):
        if len(v) != k:
            raise ValueError(f"expected {k} components, got {len(v)}")
        return [np.asarray(c, dtype=float) for c in v]
    if k != 1:
        raise ValueError(f"expected {k} components, got a scalar argument")
    return [np.asarray(v, dtype=float)]


def phi(params, x, y, t):
    """Exponential weight exp(gamma psi)."""
    return np.exp(params.gamma * psi(params, x, y, t))


def d1_d2(params, x, y, t):
    """Closed forms d1 = -2 alpha m - 2 n and d2 = 4 alpha^2 |y-y0|^2 - 4 |x-x0|^2."""
    n, m = len(params.x0), len(params.y0)
    xc = _components(x, n)
    yc = _components(y, m)
    d1 = -2.0 * params.alpha * m - 2.0 * n
    d2 = (4.0 * params.alpha**2 * _dist2(yc, params.y0)
          - 4.0 * _dist2(xc, params.x0))
    if np.ndim(d2) == 0:
        return float(d1), float(d2)
    return np.full_like(d2, d1), d2


def _grid_point_fields(params, grid):
    """Broadcast per-axis offsets on a grid: returns (x offsets, y offsets, t)."""
    n, m = len(params.x0), len(params.y0)
    if n != grid.n or m != grid.m:
        raise ValueError("weight anchor dimensions do not match the grid")
    xs = [grid.coord_grid(a) for a in grid.x_axes]
    ys = [grid.coord_grid(a) for a in grid.y_axes]
    tt = grid.coord_grid(grid.t_axis)
    return xs, ys, tt


def psi_on_grid(params, grid):
    xs, ys, tt = _grid_point_fields(params, grid)
    return (_dist2(xs, params.x0) - params.alpha * _dist2(ys, params.y0)
            - params.beta * np.square(tt))


def phi_on_grid(params, grid):
    return np.exp(params.gamma * psi_on_grid(params, grid))


@dataclass(frozen=True)
class WeightDerivatives:
    """phi and its closed-form derivatives, broadcast over a grid."""

    phi: np.ndarray
    dt_phi: np.ndarray
    grad_x: list
    grad_y: list
    lap_x: np.ndarray
    lap_y: np.ndarray
    dt_grad_x: list
    dt_grad_y: list
    grad_x_sq: np.ndarray
    grad_y_sq: np.ndarray

    @property
    def lap_gap(self):
        """lap_y - lap_x, the zero-order coefficient of the skew part."""
        return self.lap_y - self.lap_x


def analytic_derivatives(params, grid):
    """Evaluate the weight-derivative table on the grid, no differencing.

    grad psi_x = 2 (x - x0), grad psi_y = -2 alpha (y - y0) and psi_t = -2
    beta t give every entry in closed form:

        dt phi            = -2 gamma beta t phi
        grad phi          = gamma phi grad psi            (x and y groups)
        lap phi           = gamma phi (lap psi + gamma |grad psi|^2)
        dt grad phi       = -2 gamma^2 beta t phi grad psi
    """
    g, a = params.gamma, params.alpha
    xs, ys, tt = _grid_point_fields(params, grid)
    psi_x = [2.0 * (c - c0) for c, c0 in zip(xs, params.x0)]
    psi_y = [-2.0 * a * (c - c0) for c, c0 in zip(ys, params.y0)]
    gx2 = reduce(np.add, (np.square(p) for p in psi_x))
    gy2 = reduce(np.add, (np.square(p) for p in psi_y))
    ph = np.exp(g * (_dist2(xs, params.x0) - a * _dist2(ys, params.y0)
                     - params.beta * np.square(tt)))
    lap_psix = 2.0 * grid.n
    lap_psiy = -2.0 * a * grid.m
    dt_fac = -2.0 * g * params.beta * tt
    full = lambda arr: np.broadcast_to(np.asarray(arr), grid.shape)
    return WeightDerivatives(
        phi=full(ph),
        dt_phi=full(dt_fac * ph),
        grad_x=[full(g * ph * p) for p in psi_x],
        grad_y=[full(g * ph * p) for p in psi_y],
        lap_x=full(g * ph * (lap_psix + g * gx2)),
        lap_y=full(g * ph * (lap_psiy + g * gy2)),
        dt_grad_x=[full(g * dt_fac * ph * p) for p in psi_x],
        dt_grad_y=[full(g * dt_fac * ph * p) for p in psi_y],
        grad_x_sq=full((g * ph) ** 2 * gx2),
        grad_y_sq=full((g * ph) ** 2 * gy2),
    )


def pseudoconvexity_margins(params, grid):
    """Grid minima of the convexity expression, literal and y0-shifted.

    Literal form: |x-x0|^2 - alpha^2 |y|^2 - beta^2 t^2.  The shifted variant
    replaces |y| by |y - y0| (the form entering the d2 chain).  Both minima
    are reported so the user can judge either reading.
    """
    xs, ys, tt = _grid_point_fields(params, grid)
    base = _dist2(xs, params.x0) - params.beta**2 * np.square(tt)
    lit = base - params.alpha**2 * _dist2(ys, (0.0,) * grid.m)
    shf = base - params.alpha**2 * _dist2(ys, params.y0)
    return float(np.min(lit)), float(np.min(shf))


def check_pseudoconvexity(params, grid):
    """Largest delta0 >= 0 with the literal convexity expression > delta0^2.

    Returns sqrt of the grid minimum; raises if the minimum is not positive,
    naming the offending node.
    """
    xs, ys, tt = _grid_point_fields(params, grid)
    expr = (_dist2(xs, params.x0)
            - params.alpha**2 * _dist2(ys, (0.0,) * grid.m)
            - params.beta**2 * np.square(tt))
    expr = np.broadcast_to(expr, grid.shape)
    k = np.unravel_index(np.argmin(expr), grid.shape)
    lo = float(expr[k])
    if lo <= 0.0:
        pt = tuple(float(grid.coords[a][k[a]]) for a in range(grid.ndim))
        raise ValueError(f"pseudoconvexity violated: min {lo:.6g} at node {pt}")
    return float(np.sqrt(lo))


def boundary_plus(grid, x0):
    """Faces of the box D where (x - x0) . nu >= 0 (the illuminated part).

    For an axis-aligned box every face is uniformly in or out, so the subset
    is returned as a tuple of (axis, side) pairs.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    faces = []
    for i, a in enumerate(grid.x_axes):
        if x0[i] - grid.x_min[i] >= 0.0:
            faces.append((a, "low"))
        if grid.x_max[i] - x0[i] >= 0.0:
            faces.append((a, "high"))
    return tuple(faces)


@dataclass(frozen=True)
class SelectedParameters:
    alpha: float
    rho: float
    delta: float
    y0_radius: float


def select_parameters(x_min, x_max, x0, L, epsilon):
    """Deterministic choice of (alpha, rho, delta, y0 radius) for a geometry.

    alpha is the geometric mean of its feasible window
    (r_tilde^2/L^2, min(r/L, 1)); rho sits 10% above its lower bound
    max(r_tilde/r, sqrt(alpha) L / r); delta takes a quarter of the
    (L - L/rho) margin.  Raises "infeasible geometry" when the alpha window
    is empty or the y0 radius closes.
    """
    r, r_tilde = box_distance_range(x_min, x_max, np.atleast_1d(x0))
    if r <= 0:
        raise ValueError("x0 must lie outside the closed box D")
    lo = r_tilde**2 / L**2
    hi = min(r / L, 1.0)
    if not lo < hi:
        raise ValueError(
            f"infeasible geometry: alpha window ({lo:.6g}, {hi:.6g}) is empty")
    alpha = float(np.sqrt(lo * hi))
    rho = 1.1 * max(r_tilde / r, np.sqrt(alpha) * L / r)
    delta = (L - L / rho) / 4.0
    y0_radius = L - L / rho - epsilon
    if y0_radius <= 0:
        raise ValueError("infeasible geometry: admissible y0 radius is empty")
    sel = SelectedParameters(alpha, float(rho), float(delta), float(y0_radius))
    return sel


@dataclass(frozen=True)
class SignConditionReport:
    """Margins (positive means the strict inequality holds) and booleans.

    Conditions, in order: phase negative on the |y - y0| = L shell at the
    time endpoints (c_endcap) and at all times (c_shell); phase positive at
    t = 0 on the inner cylinder |y - y0| <= L/rho (c_core); phase below
    -epsilon on the outer t and y bands of width 2 delta (c_bands); phase
    above +epsilon near t = 0 on the inner cylinder (c_center).  ``delta`` is
    the largest dyadic band width that passes.
    """

    margin_endcap: float
    margin_shell: float
    margin_core: float
    margin_bands: float
    margin_center: float
    delta: float
    passed_endcap: bool
    passed_shell: bool
    passed_core: bool
    passed_bands: bool
    passed_center: bool

    @property
    def all_passed(self):
        return (self.passed_endcap and self.passed_shell and self.passed_core
                and self.passed_bands and self.passed_center)


def _band_margins(params, grid, delta, psi_grid, ydist, tabs):
    """(bands margin, center margin) for a candidate delta, grid-evaluated."""
    L, T, eps = params.L, grid.T, params.epsilon
    inner = ydist <= L
    band_t = (tabs >= T - 2 * delta) & inner
    band_y = (ydist >= L - 2 * delta) & inner
    in_bands = band_t | band_y
    m_bands = (-eps - float(np.max(psi_grid[in_bands]))) if np.any(in_bands) else np.inf
    center = (tabs < delta) & (ydist <= L / params.rho)
    m_center = (float(np.min(psi_grid[center])) - eps) if np.any(center) else np.inf
    return m_bands, m_center


def sign_condition_report(params, grid):
    """Evaluate the phase sign conditions on grid nodes and search delta.

    Regions follow the inverse pipeline: the shell |y - y0| >= L bounds the
    phase from above by r_tilde^2 - alpha L^2 < 0; the inner cylinder at
    t = 0 is bounded below by r^2 - alpha L^2 / rho^2 > 0.  The band width
    delta descends dyadically from min(T, L)/8; the largest width for which
    the band and center conditions hold together with L/rho < L - 2 delta is
    reported.  Failures are reported, never raised.
    """
    psi_grid = np.broadcast_to(psi_on_grid(params, grid), grid.shape)
    xs, ys, tt = _grid_point_fields(params, grid)
    ydist = np.sqrt(np.broadcast_to(_dist2(ys, params.y0), grid.shape))
    tabs = np.abs(np.broadcast_to(tt, grid.shape))
    L, T = params.L, grid.T
    half_dt = 0.5 * grid.dt

    shell = ydist >= L - 1e-12 * L
    endcap = shell & (tabs > T - half_dt)
    m_endcap = -float(np.max(psi_grid[endcap])) if np.any(endcap) else np.inf
    m_shell = -float(np.max(psi_grid[shell])) if np.any(shell) else np.inf

    core = (ydist <= L / params.rho) & (tabs < half_dt)
    m_core = float(np.min(psi_grid[core])) if np.any(core) else np.inf

    delta = min(T, L) / 8.0
    m_bands = m_center = -np.inf
    found = None
    for _ in range(24):
        ok13 = L / params.rho < L - 2 * delta
        if ok13 and T - 2 * delta > 0 and L - 2 * delta > 0:
            mb, mc = _band_margins(params, grid, delta, psi_grid, ydist, tabs)
            if mb > 0 and mc > 0:
                found, m_bands, m_center = delta, mb, mc
                break
        delta *= 0.5
    if found is None:
        # report the margins at the starting width for diagnosis
        delta = min(T, L) / 8.0
        m_bands, m_center = _band_margins(params, grid, delta, psi_grid, ydist, tabs)
        found = delta

    return SignConditionReport(
        margin_endcap=m_endcap,
        margin_shell=m_shell,
        margin_core=m_core,
        margin_bands=m_bands,
        margin_center=m_center,
        delta=float(found),
        passed_endcap=m_endcap > 0,
        passed_shell=m_shell > 0,
        passed_core=m_core > 0,
        passed_bands=m_bands > 0,
        passed_center=m_center > 0,
    )


# -- cut-off ----------------------------------------------------------------

def _ramp(s):
    """C^4 polynomial ramp on [0, 1]: value 0 -> 1, four vanishing end derivatives."""
    s = np.clip(s, 0.0, 1.0)
    return s**5 * (70.0 * s**4 - 315.0 * s**3 + 540.0 * s**2 - 420.0 * s + 126.0)


def _ramp_d1(s):
    s = np.clip(s, 0.0, 1.0)
    return s**4 * (630.0 * s**4 - 2520.0 * s**3 + 3780.0 * s**2 - 2520.0 * s + 630.0)


def _ramp_d2(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (5040.0 * s**4 - 17640.0 * s**3 + 22680.0 * s**2 - 12600.0 * s
                   + 2520.0)


def _profile(dist, inner, outer):
    """1 below ``inner``, 0 above ``outer``, ramped in between; with d/d(dist)."""
    width = outer - inner
    s = (outer - dist) / width
    val = np.where(dist <= inner, 1.0, np.where(dist >= outer, 0.0, _ramp(s)))
    d1 = np.where((dist > inner) & (dist < outer), -_ramp_d1(s) / width, 0.0)
    d2 = np.where((dist > inner) & (dist < outer), _ramp_d2(s) / width**2, 0.0)
    return val, d1, d2


@dataclass(frozen=True)
class Cutoff:
    """chi(y, t) = chi0(|t|) chi0(|y - y0|) with exact derivative fields."""

    chi: ComplexField
    dt: np.ndarray
    grad_y: list
    lap_y: np.ndarray


def cutoff_with_derivatives(params, grid):
    """Build the cut-off and its time / y derivatives on the grid.

    chi is identically 1 for |t| <= T - 2 delta and |y - y0| <= L - 2 delta,
    identically 0 once |t| >= T - delta or |y - y0| >= L - delta, and ramps
    with the C^4 profile in between, so dt chi, grad_y chi and lap_y chi are
    continuous with supports confined to the transition bands.
    """
    d, L, T = params.delta, params.L, grid.T
    if not d > 0:
        raise ValueError("cut-off band degenerate: delta must be positive")
    if T - 2 * d <= 0 or L - 2 * d <= 0:
        raise ValueError("cut-off band degenerate: delta too large for T or L")
    xs, ys, tt = _grid_point_fields(params, grid)
    tabs = np.abs(tt)
    yoff = [c - c0 for c, c0 in zip(ys, params.y0)]
    ydist = np.sqrt(reduce(np.add, (np.square(c) for c in yoff)))

    ct, ct_d1, _ = _profile(tabs, T - 2 * d, T - d)
    dchi_t = ct_d1 * np.sign(tt)

    cy, cy_d1, cy_d2 = _profile(ydist, L - 2 * d, L - d)
    safe = np.where(ydist > 0, ydist, 1.0)
    grad_y = [cy_d1 * (c / safe) * ct * np.ones(grid.shape) for c in yoff]
    m = grid.m
    lap_cy = cy_d2 + np.where(ydist > 0, cy_d1 * (m - 1) / safe, 0.0)

    chi_vals = np.broadcast_to(ct * cy, grid.shape)
    return Cutoff(
        chi=ComplexField(grid, chi_vals.astype(complex), "chi"),
        dt=dchi_t * cy * np.ones(grid.shape),
        grad_y=grad_y,
        lap_y=lap_cy * ct * np.ones(grid.shape),
    )


def cutoff_chi(params, grid):
    """The cut-off field alone; see :func:`cutoff_with_derivatives`."""
    return cutoff_with_derivatives(params, grid).chi
