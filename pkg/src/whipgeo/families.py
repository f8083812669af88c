"""Deterministic curve and field families for scenarios and tests.

Everything here is seeded: the same rng seed always produces byte-identical
data.  Two levels of fidelity are provided:

* chart families (``random_smooth_curve``, ``chart_tangent_field``) satisfy
  the arc-space constraints to O(n^-2), the natural accuracy of the trapezoid
  chart; good enough for Green-function and curvature studies.
* polished families (``polish_unit_speed``, ``exact_tangent_field``) drive
  the discrete constraints |d1 eta| = 1 and <d1 w, d1 eta> = 0 to round-off,
  which is what the geodesic integrator's strict compatibility gate expects
  of initial data.
"""

from __future__ import annotations

import numpy as np

from .grid_curves import (
    BoundaryKind,
    Curve,
    Grid,
    Symmetry,
    VectorField,
    cumulative_from_center,
    d1_matrix,
    derivative,
    enforce_odd,
    perp,
    integrate,
    tangency_project,
    theta_to_curve,
)

__all__ = [
    "straight_rod",
    "rod_state",
    "rotating_rod_exact",
    "rod_tension_exact",
    "circle_curve",
    "circle_state",
    "rotating_circle_exact",
    "random_even_theta",
    "random_smooth_curve",
    "chart_tangent_field",
    "polish_unit_speed",
    "exact_tangent_field",
    "random_state",
    "perturbed_circle",
    "periodic_state",
]


# ---------------------------------------------------------------------------
# closed-form presets
# ---------------------------------------------------------------------------


def straight_rod(grid: Grid) -> Curve:
    """The straight segment eta(s) = (s, 0)."""
    s = grid.nodes
    pts = np.stack([s, np.zeros_like(s)], axis=1)
    return Curve(grid, pts, Symmetry.ODD)


def rod_state(grid: Grid, omega: float) -> tuple[Curve, VectorField]:
    """Rigidly rotating rod at t = 0: eta = (s, 0), eta_t = (0, omega s)."""
    s = grid.nodes
    gamma = straight_rod(grid)
    w = VectorField(grid, np.stack([np.zeros_like(s), omega * s], axis=1), Symmetry.ODD)
    return gamma, w


def rotating_rod_exact(grid: Grid, omega: float, t: float) -> np.ndarray:
    """Closed-form rod position (s cos wt, s sin wt) at the nodes."""
    s = grid.nodes
    return np.stack([s * np.cos(omega * t), s * np.sin(omega * t)], axis=1)


def rod_tension_exact(grid: Grid, omega: float) -> np.ndarray:
    """Closed-form rod tension omega^2 (1 - s^2) / 2 at the nodes."""
    return 0.5 * omega**2 * (1.0 - grid.nodes**2)


def circle_curve(grid: Grid) -> Curve:
    """Unit-length circle traversed once: eta = (cos 2 pi s, sin 2 pi s)/(2 pi)."""
    if grid.kind is not BoundaryKind.PERIODIC:
        raise ValueError("circle_curve needs the periodic grid")
    s = grid.nodes
    pts = np.stack([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s)], axis=1) / (2 * np.pi)
    return Curve(grid, pts, Symmetry.PERIODIC)


def circle_state(grid: Grid, omega: float) -> tuple[Curve, VectorField]:
    """Circle rotating in place: eta_t = omega eta' (pure reparametrization drift)."""
    gamma = circle_curve(grid)
    s = grid.nodes
    w = omega * np.stack([-np.sin(2 * np.pi * s), np.cos(2 * np.pi * s)], axis=1)
    return gamma, VectorField(grid, w, Symmetry.PERIODIC)


def rotating_circle_exact(grid: Grid, omega: float, t: float) -> np.ndarray:
    """Closed-form rotating circle eta(t, s) = circle(s + omega t)."""
    s = grid.nodes + omega * t
    return np.stack([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s)], axis=1) / (2 * np.pi)


# ---------------------------------------------------------------------------
# random chart families
# ---------------------------------------------------------------------------


def random_even_theta(
    rng: np.random.Generator, grid: Grid, modes: int = 4, amplitude: float = 0.8
) -> np.ndarray:
    """Smooth even direction angle theta(s) = sum a_k cos(k pi s), decaying in k."""
    s = grid.nodes
    theta = np.zeros_like(s)
    for k in range(modes + 1):
        a = amplitude * rng.standard_normal() / (1.0 + k) ** 2
        theta += a * np.cos(k * np.pi * s)
    return theta


def random_smooth_curve(
    rng: np.random.Generator, grid: Grid, modes: int = 4, amplitude: float = 0.8
) -> Curve:
    """Random odd unit-speed curve from the angular chart (O(n^-2) residuals)."""
    return theta_to_curve(random_even_theta(rng, grid, modes, amplitude), grid)


def chart_tangent_field(
    rng: np.random.Generator,
    curve: Curve,
    modes: int = 4,
    amplitude: float = 0.6,
) -> VectorField:
    """Tangent field integral_0^s beta (eta')^perp with a random even beta.

    Chart-level tangency only; run it through :func:`exact_tangent_field`
    when the strict integrator gate matters.
    """
    grid = curve.grid
    s = grid.nodes
    beta = np.zeros_like(s)
    for k in range(modes + 1):
        a = amplitude * rng.standard_normal() / (1.0 + k) ** 2
        beta += a * np.cos(k * np.pi * s)
    t = derivative(curve.points, grid, 1)
    vals = cumulative_from_center(beta[:, None] * perp(t), grid)
    return VectorField(grid, vals, Symmetry.ODD)


# ---------------------------------------------------------------------------
# polished families (round-off-level discrete constraints)
# ---------------------------------------------------------------------------


def polish_unit_speed(curve: Curve, max_iter: int = 12, tol: float = 1e-12) -> Curve:
    """Gauss-Newton projection onto |d1 eta| = 1 at every node, exactly odd.

    Free unknowns are the nodes right of center; the left half is the odd
    mirror and the center stays pinned at the origin.  Minimum-norm steps keep
    the polished curve O(n^-2)-close to the input, so chart curves polish in a
    couple of iterations.
    """
    grid = curve.grid
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("polish_unit_speed needs the fixed-free grid")
    c = grid.center_index
    m = grid.num_nodes
    D = d1_matrix(grid)
    # fold the odd mirror into columns for the free right-half nodes
    fold = np.zeros((m, m - c - 1))
    for j in range(c + 1, m):
        fold[j, j - c - 1] += 1.0
        fold[m - 1 - j, j - c - 1] += -1.0
    S = D @ fold  # velocity rows as a function of free nodes

    def unpack(x: np.ndarray) -> np.ndarray:
        half = x.reshape(-1, 2)
        pts = np.zeros((m, 2))
        pts[c + 1 :] = half
        pts[:c] = -half[::-1]
        return pts

    x = curve.points[c + 1 :].copy().reshape(-1)
    rows = list(range(c, m))  # independent constraints (mirror covers the rest)
    for _ in range(max_iter):
        pts = unpack(x)
        v = D @ pts
        r = np.sum(v[rows] ** 2, axis=1) - 1.0
        if float(np.max(np.abs(r))) < tol:
            break
        J = np.zeros((len(rows), len(x)))
        J[:, 0::2] = 2.0 * v[rows, 0:1] * S[rows]
        J[:, 1::2] = 2.0 * v[rows, 1:2] * S[rows]
        step, *_ = np.linalg.lstsq(J, r, rcond=None)
        x = x - step
    pts = unpack(x)
    return Curve(grid, pts, Symmetry.ODD)


def exact_tangent_field(curve: Curve, w: VectorField) -> VectorField:
    """Least-norm correction of w onto <d1 w, d1 eta> = 0 at every node.

    The constraints are linear, so one least-squares solve lands on the
    discrete tangent space to round-off; the odd projection afterward does
    not disturb it when the curve itself is exactly odd.
    """
    grid = curve.grid
    if grid != w.grid:
        raise ValueError("curve and field live on different grids")
    t = d1_matrix(grid) @ curve.points
    vals = tangency_project(w.values, t, grid)
    return enforce_odd(VectorField(grid, vals, Symmetry.ODD))


def random_state(
    rng: np.random.Generator,
    grid: Grid,
    modes: int = 4,
    curve_amplitude: float = 0.7,
    speed: float = 0.8,
) -> tuple[Curve, VectorField]:
    """Random polished initial state passing the strict compatibility gate."""
    gamma = polish_unit_speed(random_smooth_curve(rng, grid, modes, curve_amplitude))
    raw = chart_tangent_field(rng, gamma, modes, speed)
    w = exact_tangent_field(gamma, raw)
    return gamma, w


# ---------------------------------------------------------------------------
# periodic families
# ---------------------------------------------------------------------------


def perturbed_circle(
    rng: np.random.Generator, grid: Grid, modes: int = 3, amplitude: float = 0.5
) -> Curve:
    """Closed near-unit-speed loop: winding-one angle plus smooth wobble.

    The wobbled angle is corrected by a first-harmonic term, solved by Newton
    iteration, so the discrete tangent sum vanishes and the loop closes with
    only round-off left for the mean shift; speed error then stays at the
    O(h^2) discretization level instead of O(amplitude).
    """
    if grid.kind is not BoundaryKind.PERIODIC:
        raise ValueError("perturbed_circle needs the periodic grid")
    s = grid.nodes
    theta = 2 * np.pi * s
    for k in range(1, modes + 1):
        a = amplitude * rng.standard_normal() / (1.0 + k) ** 2
        phase = rng.uniform(0, 2 * np.pi)
        theta = theta + a * np.sin(2 * np.pi * k * s + phase)
    # closure: pick c = (c1, c2) so that sum_j exp(i theta_j) = 0 with
    # theta_j += c1 cos(2 pi s_j) + c2 sin(2 pi s_j)
    basis = np.stack([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s)], axis=1)
    c = np.zeros(2)
    for _ in range(40):
        th = theta + basis @ c
        z = np.stack([np.cos(th), np.sin(th)], axis=1)
        res = z.sum(axis=0)
        if np.max(np.abs(res)) < 1e-13 * grid.n:
            break
        perp = np.stack([-np.sin(th), np.cos(th)], axis=1)
        jac = np.empty((2, 2))
        jac[:, 0] = perp.T @ basis[:, 0]
        jac[:, 1] = perp.T @ basis[:, 1]
        c = c - np.linalg.solve(jac, res)
    else:
        raise ValueError("closure iteration for the perturbed loop stalled")
    theta = theta + basis @ c
    tangent = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    h = grid.spacing
    inc = 0.5 * h * (tangent + np.roll(tangent, -1, axis=0))
    inc = inc - np.mean(inc, axis=0)  # round-off-level closure shift
    pts = np.concatenate([[np.zeros(2)], np.cumsum(inc[:-1], axis=0)])
    pts = pts - np.mean(pts, axis=0)
    return Curve(grid, pts, Symmetry.PERIODIC)


def periodic_state(
    rng: np.random.Generator,
    grid: Grid,
    modes: int = 3,
    amplitude: float = 0.3,
    speed: float = 0.3,
    horizontal: bool = False,
) -> tuple[Curve, VectorField]:
    """Perturbed loop with a constraint-tangent velocity field.

    The raw field is a wobbled normal-direction profile; alternating the
    tangency correction with removal of the net tangential drift (itself a
    legal tangent direction) converges in a few sweeps, leaving both
    residuals at round-off when ``horizontal`` is set.
    """
    gamma = perturbed_circle(rng, grid, modes, amplitude)
    gv = d1_matrix(grid) @ gamma.points
    nrm = np.stack([-gv[:, 1], gv[:, 0]], axis=1)
    s = grid.nodes
    prof = np.zeros_like(s)
    for k in range(1, modes + 1):
        a = rng.standard_normal() / (1.0 + k)
        phase = rng.uniform(0, 2 * np.pi)
        prof = prof + a * np.sin(2 * np.pi * k * s + phase)
    scale = np.max(np.abs(prof))
    if scale > 0:
        prof = prof * (speed / scale)
    vals = prof[:, None] * nrm
    tangential = np.sum(gv * gv, axis=1)
    denom = integrate(tangential, grid)
    for _ in range(4):
        vals = tangency_project(vals, gv, grid)
        if horizontal:
            drift = integrate(np.sum(vals * gv, axis=1), grid)
            vals = vals - (drift / denom) * gv
    return gamma, VectorField(grid, vals, Symmetry.PERIODIC)
