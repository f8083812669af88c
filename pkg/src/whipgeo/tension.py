"""Tension boundary-value solves and Green functions along a curve.

The wave system for an inextensible curve closes with a scalar tension
``sigma`` solving ``sigma'' - |eta_ss|^2 sigma = -|eta_st|^2`` with
``sigma(+-1) = 0`` on the fixed-free grid, or the same equation around the
circle.  The solution operator is the Green function of ``d^2/ds^2 - q`` with
``q = |eta_ss|^2 >= 0``, which is what makes tensions nonnegative for
nonnegative sources.

All solves here go through one LAPACK banded factorization per call (the
periodic case adds a Sherman-Morrison rank-one correction for the seam), so a
solve costs O(n) and is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from .errors import FlatCurve, SolveFailure
from .grid_curves import (
    BoundaryKind,
    Curve,
    Grid,
    VectorField,
    derivative,
    quadrature_weights,
    tangency_project,
)

__all__ = [
    "TensionField",
    "GreenMatrix",
    "curvature_potential",
    "green_matrix",
    "green_bounds_check",
    "solve_tension_fixed_free",
    "solve_tension_periodic",
    "orthogonal_project",
    "periodic_phi",
    "solve_tension_free_length",
]

_FLAT_TOL = 1e-8  # max |eta''| below this counts as a straight (flat) curve


@dataclass(frozen=True)
class TensionField:
    """Scalar tension at the nodes; ``constant`` carries the free-length C."""

    grid: Grid
    sigma: np.ndarray
    constant: float | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.sigma, dtype=float, copy=True)
        arr.setflags(write=False)
        self.grid.check_values(arr)
        object.__setattr__(self, "sigma", arr)


@dataclass(frozen=True)
class GreenMatrix:
    """Dense nodal Green function G[i, j] ~ G(s_i, x_j) with its quadrature.

    ``entries @ (weights * f)`` is the discrete integral operator applied to
    nodal source values f, and it reproduces the direct banded solve exactly
    because both invert the same tridiagonal operator.
    """

    grid: Grid
    entries: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        ent = np.array(self.entries, dtype=float, copy=True)
        ent.setflags(write=False)
        m = self.grid.num_nodes
        if ent.shape != (m, m):
            raise ValueError(f"expected ({m}, {m}) Green entries, got {ent.shape}")
        w = np.array(self.weights, dtype=float, copy=True)
        w.setflags(write=False)
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "weights", w)

    def apply(self, source: np.ndarray) -> np.ndarray:
        return self.entries @ (self.weights * np.asarray(source, dtype=float))


def curvature_potential(curve: Curve) -> np.ndarray:
    """q = |eta''|^2 at the nodes (fd second derivative)."""
    a = derivative(curve.points, curve.grid, 2)
    return np.sum(a * a, axis=1)


# ---------------------------------------------------------------------------
# core banded solves
# ---------------------------------------------------------------------------


def _check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise SolveFailure(f"{what} produced non-finite values")
    return x


def dirichlet_solve(
    q: np.ndarray, rhs: np.ndarray, grid: Grid, ell2: float = 1.0
) -> np.ndarray:
    """Solve ell2 * u'' - q u = rhs with u(-1) = u(1) = 0 on the fixed-free grid.

    ``rhs`` may be (m,) or (m, k) for several right-hand sides at once; the
    boundary rows of the result are exactly zero.
    """
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("dirichlet_solve needs the fixed-free grid")
    q = np.asarray(q, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    grid.check_values(q)
    grid.check_values(rhs)
    h2 = grid.spacing**2
    m = grid.num_nodes - 2  # interior unknowns
    ab = np.zeros((3, m))
    ab[0, 1:] = ell2 / h2
    ab[1, :] = -2.0 * ell2 / h2 - q[1:-1]
    ab[2, :-1] = ell2 / h2
    b = rhs[1:-1]
    try:
        interior = solve_banded((1, 1), ab, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - lapack guard
        raise SolveFailure(str(exc)) from exc
    _check_finite(interior, "dirichlet solve")
    out = np.zeros_like(rhs)
    out[1:-1] = interior
    return out


def cyclic_solve(q: np.ndarray, rhs: np.ndarray, grid: Grid) -> np.ndarray:
    """Solve u'' - q u = rhs around the circle (Sherman-Morrison seam fix).

    Needs q > 0 somewhere; the pure-Laplacian case is singular and raises
    :class:`FlatCurve` upstream.
    """
    if grid.kind is not BoundaryKind.PERIODIC:
        raise ValueError("cyclic_solve needs the periodic grid")
    q = np.asarray(q, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    grid.check_values(q)
    grid.check_values(rhs)
    h2 = grid.spacing**2
    m = grid.num_nodes
    a = 1.0 / h2  # constant off-diagonal, also the two seam corners
    d = -2.0 / h2 - q
    gamma = -d[0]
    dmod = d.copy()
    dmod[0] = d[0] - gamma
    dmod[-1] = d[-1] - a * a / gamma
    ab = np.zeros((3, m))
    ab[0, 1:] = a
    ab[1, :] = dmod
    ab[2, :-1] = a
    u = np.zeros(m)
    u[0] = gamma
    u[-1] = a
    single = rhs.ndim == 1
    b = rhs[:, None] if single else rhs
    stacked = np.concatenate([b, u[:, None]], axis=1)
    try:
        sol = solve_banded((1, 1), ab, stacked)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - lapack guard
        raise SolveFailure(str(exc)) from exc
    y, z = sol[:, :-1], sol[:, -1]
    # v = e_0 + (a/gamma) e_{m-1}
    denom = 1.0 + z[0] + (a / gamma) * z[-1]
    if abs(denom) < 1e-300:
        raise SolveFailure("cyclic solve lost its Sherman-Morrison pivot")
    factor = (y[0, :] + (a / gamma) * y[-1, :]) / denom
    x = y - z[:, None] * factor[None, :]
    _check_finite(x, "cyclic solve")
    return x[:, 0] if single else x


# ---------------------------------------------------------------------------
# Green matrices and bounds
# ---------------------------------------------------------------------------


def green_matrix(curve: Curve) -> GreenMatrix:
    """Nodal Green function of d^2/ds^2 - |eta''|^2 for the curve's grid.

    Fixed-free grids get the Dirichlet Green function (zero boundary rows and
    columns); periodic grids get the circle Green function and require a
    curve with somewhere-nonzero curvature.
    """
    grid = curve.grid
    q = curvature_potential(curve)
    h = grid.spacing
    m = grid.num_nodes
    if grid.kind is BoundaryKind.FIXED_FREE_ODD:
        rhs = np.zeros((m, m - 2))
        rhs[1:-1, :] = -np.eye(m - 2) / h
        cols = dirichlet_solve(q, rhs, grid)
        entries = np.zeros((m, m))
        entries[:, 1:-1] = cols
    else:
        if float(np.max(np.abs(q))) < _FLAT_TOL**2:
            raise FlatCurve("periodic Green function needs nonzero curvature")
        entries = cyclic_solve(q, -np.eye(m) / h, grid)
    return GreenMatrix(grid, entries, quadrature_weights(grid))


def half_interval_rho(q: np.ndarray, grid: Grid) -> float:
    """Trapezoid integral of (1 - s) q(s) over [0, 1] (fixed-free grids)."""
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("half_interval_rho needs the fixed-free grid")
    c = grid.center_index
    s = grid.nodes[c:]
    vals = (1.0 - s) * np.asarray(q, dtype=float)[c:]
    h = grid.spacing
    return float(h * (np.sum(vals) - 0.5 * vals[0] - 0.5 * vals[-1]))


def green_bounds_check(curve: Curve, gm: GreenMatrix | None = None) -> dict:
    """Audit a Green matrix against its structural bounds.

    Checks symmetry, entrywise nonnegativity, the symmetrized upper bound
    Gbar(s,x) <= min(1-|s|, 1-|x|), and the lower bound
    G(s,x) >= (1/2)(1-|s|)(1-|x|) e^-rho / (1+rho) with
    rho = integral_0^1 (1-s)|eta''|^2 ds.  The half factor is what the
    zero-potential closed form attains with equality on opposite-sign pairs.
    Margins are signed minima; nonnegative margins mean the bound holds.
    """
    if curve.grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("green_bounds_check needs the fixed-free grid")
    if gm is None:
        gm = green_matrix(curve)
    G = gm.entries
    s = curve.grid.nodes
    one_minus = 1.0 - np.abs(s)
    q = curvature_potential(curve)
    rho = half_interval_rho(q, curve.grid)
    gbar = 0.5 * (G + G[:, ::-1])
    upper = np.minimum.outer(one_minus, one_minus)
    lower = 0.5 * math.exp(-rho) / (1.0 + rho) * np.outer(one_minus, one_minus)
    return {
        "symmetry_err": float(np.max(np.abs(G - G.T))),
        "min_entry": float(np.min(G)),
        "upper_margin": float(np.min(upper - gbar)),
        "lower_margin": float(np.min(G - lower)),
        "rho": rho,
    }


# ---------------------------------------------------------------------------
# tension solves
# ---------------------------------------------------------------------------


def solve_tension_fixed_free(curve: Curve, source: np.ndarray) -> TensionField:
    """sigma'' - |eta''|^2 sigma = -source, sigma(+-1) = 0."""
    q = curvature_potential(curve)
    sigma = dirichlet_solve(q, -np.asarray(source, dtype=float), curve.grid)
    return TensionField(curve.grid, sigma)


def solve_tension_periodic(curve: Curve, source: np.ndarray) -> TensionField:
    """sigma'' - |eta''|^2 sigma = -source around the circle."""
    q = curvature_potential(curve)
    if float(np.max(np.abs(q))) < _FLAT_TOL**2:
        raise FlatCurve("periodic tension solve needs nonzero curvature")
    sigma = cyclic_solve(q, -np.asarray(source, dtype=float), curve.grid)
    return TensionField(curve.grid, sigma)


def orthogonal_project(curve: Curve, z: VectorField) -> VectorField:
    """Project a field onto the tangent space of the arc manifold at the curve.

    Solves sigma'' - |eta''|^2 sigma = <z', eta'> (right side with no sign
    flip) and returns z - (sigma eta')'.  On periodic grids the solve wraps
    around the seam instead of using boundary values.  A final least-norm
    nudge, one power of h below the scheme's own truncation error, lands the
    output exactly on the discrete tangent space, so tangency holds to
    round-off and reapplying the projection is a near no-op.
    """
    if curve.grid != z.grid:
        raise ValueError("curve and field live on different grids")
    grid = curve.grid
    q = curvature_potential(curve)
    gv = derivative(curve.points, grid, 1)
    zv = derivative(z.values, grid, 1)
    rhs = np.sum(gv * zv, axis=1)
    if grid.kind is BoundaryKind.FIXED_FREE_ODD:
        sigma = dirichlet_solve(q, rhs, grid)
    else:
        if float(np.max(np.abs(q))) < _FLAT_TOL**2:
            raise FlatCurve("periodic projection needs nonzero curvature")
        sigma = cyclic_solve(q, rhs, grid)
    correction = (
        derivative(sigma, grid, 1)[:, None] * gv
        + sigma[:, None] * derivative(curve.points, grid, 2)
    )
    out = tangency_project(z.values - correction, gv, grid)
    return VectorField(grid, out, z.symmetry)


# ---------------------------------------------------------------------------
# periodic fundamental solution phi
# ---------------------------------------------------------------------------


def periodic_phi(kappa: np.ndarray, grid: Grid) -> tuple[np.ndarray, dict]:
    """Seam-jump solution of phi'' = kappa^2 phi on the circle.

    phi satisfies phi(0) = phi(1) and phi'(0) + 1 = phi'(1); it is assembled
    from the fundamental pair phi1(0)=1, phi1'(0)=0 and phi2(0)=0, phi2'(0)=1
    integrated across one period with a dense high-order integrator.  Returns
    nodal phi plus a report with rho = loop integral of kappa^2 and the
    e^(-rho/2)/rho lower and 1 + 1/(4 pi^2) upper bounds (the upper one is
    meaningful for closed unit-length loops, where rho >= 4 pi^2).
    """
    if grid.kind is not BoundaryKind.PERIODIC:
        raise ValueError("periodic_phi needs the periodic grid")
    kappa = np.asarray(kappa, dtype=float)
    grid.check_values(kappa)
    if float(np.max(np.abs(kappa))) < _FLAT_TOL:
        raise FlatCurve("phi undefined for identically flat curvature")
    ksq = kappa * kappa
    nodes = grid.nodes
    ext_s = np.concatenate([nodes, [1.0]])
    ext_k = np.concatenate([ksq, [ksq[0]]])
    spline = CubicSpline(ext_s, ext_k, bc_type="periodic")

    def rhs(s, y):
        k2 = spline(s % 1.0)
        return [y[1], k2 * y[0], y[3], k2 * y[2]]

    sol = solve_ivp(
        rhs,
        (0.0, 1.0),
        [1.0, 0.0, 0.0, 1.0],
        t_eval=ext_s,
        rtol=1e-11,
        atol=1e-12,
        dense_output=False,
        method="DOP853",
    )
    if not sol.success:
        raise SolveFailure(f"fundamental-pair integration failed: {sol.message}")
    phi1, dphi1, phi2, dphi2 = sol.y
    mat = np.array([[phi1[-1] - 1.0, phi2[-1]], [dphi1[-1], dphi2[-1] - 1.0]])
    try:
        coef = np.linalg.solve(mat, np.array([0.0, 1.0]))
    except np.linalg.LinAlgError as exc:
        raise SolveFailure("fundamental pair is degenerate at this curvature") from exc
    phi = coef[0] * phi1[:-1] + coef[1] * phi2[:-1]
    _check_finite(phi, "periodic phi")
    rho = float(np.sum(ksq) * grid.spacing)
    report = {
        "rho": rho,
        "lower_bound": math.exp(-0.5 * rho) / rho,
        "upper_bound": 1.0 + 1.0 / (4.0 * math.pi**2),
        "min_phi": float(np.min(phi)),
        "max_phi": float(np.max(phi)),
    }
    return phi, report


# ---------------------------------------------------------------------------
# free boundary length
# ---------------------------------------------------------------------------


def solve_tension_free_length(
    eta: Curve, eta_t: VectorField, ell: float
) -> TensionField:
    """Tension for a whip whose length may change, speed |eta'| = ell.

    Solves ell^2 sigma'' - |eta''|^2 sigma + |eta_t'|^2 = C with
    sigma(+-1) = 0 and the zero-mean condition integral(sigma) = 0, which
    fixes the scalar C = (double integral G |eta_t'|^2) / (double integral G).
    The returned field carries C in ``constant``.
    """
    if eta.grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("free-length solve needs the fixed-free grid")
    if eta.grid != eta_t.grid:
        raise ValueError("curve and field live on different grids")
    if ell <= 0:
        raise ValueError("speed ell must be positive")
    grid = eta.grid
    q = curvature_potential(eta)
    vt = derivative(eta_t.values, grid, 1)
    src = np.sum(vt * vt, axis=1)
    ell2 = ell * ell
    ones = np.ones(grid.num_nodes)
    # sigma = C * a - b with L a = 1, L b = src; zero mean fixes C
    pair = dirichlet_solve(q, np.stack([ones, src], axis=1), grid, ell2=ell2)
    a, b = pair[:, 0], pair[:, 1]
    w = quadrature_weights(grid)
    denom = float(np.dot(w, a))
    if abs(denom) < 1e-300:
        raise SolveFailure("free-length scalar solve degenerated")
    c = float(np.dot(w, b)) / denom
    sigma = c * a - b
    return TensionField(grid, sigma, constant=c)
