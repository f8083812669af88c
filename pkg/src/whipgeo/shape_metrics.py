"""Metrics on the space of unit-speed planar curves and the MM geodesic flow.

Three inner products on tangent fields (flat L2, the normal-projection
Michor-Mumford form, and the derivative-based H1dot form), the unit-speed
reparametrization submersion with its differential, a parametrization-
invariant two-term metric on immersions, polygonal path lengths, and an
intrinsic integrator for Michor-Mumford geodesics in the variables
(kappa, a, b, omega) with curve reconstruction through the angular chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CflViolation, DegenerateImmersion, LengthMismatch
from .grid_curves import (
    BoundaryKind,
    Curve,
    Grid,
    Symmetry,
    VectorField,
    cumulative_from_center,
    curve_to_theta,
    derivative,
    enforce_odd,
    integrate,
    perp,
    signed_curvature,
    theta_to_curve,
)
from .tension import orthogonal_project

_DEGENERATE_SPEED = 1e-10
_LENGTH_SLACK = 0.02
_CFL_FACTOR = 0.5
_DRIFT_BUDGET = 0.5
_STATE_RESIDUAL_TOL = 1e-6


class MetricKind(Enum):
    """The three Riemannian structures compared on arc space."""

    L2 = "L2"
    MICHOR_MUMFORD = "MichorMumford"
    H1DOT = "H1dot"


def metric_inner(kind: MetricKind, gamma: Curve, u: VectorField, v: VectorField) -> float:
    """Inner product of two tangent fields at a unit-speed curve.

    L2 integrates <u, v>, MichorMumford integrates the product of normal
    components <u, gamma'^perp><v, gamma'^perp>, and H1dot integrates
    <u', v'>.
    """
    grid = gamma.grid
    if u.grid != grid or v.grid != grid:
        raise ValueError("curve and fields live on different grids")
    if kind is MetricKind.L2:
        return float(integrate(np.sum(u.values * v.values, axis=1), grid))
    if kind is MetricKind.MICHOR_MUMFORD:
        nor = perp(derivative(gamma.points, grid, 1))
        un = np.sum(u.values * nor, axis=1)
        vn = np.sum(v.values * nor, axis=1)
        return float(integrate(un * vn, grid))
    du = derivative(u.values, grid, 1)
    dv = derivative(v.values, grid, 1)
    return float(integrate(np.sum(du * dv, axis=1), grid))


def _speed_of(eta: Curve) -> np.ndarray:
    vel = derivative(eta.points, eta.grid, 1)
    speed = np.hypot(vel[:, 0], vel[:, 1])
    if float(np.min(speed)) < _DEGENERATE_SPEED:
        raise DegenerateImmersion(
            f"speed dips to {float(np.min(speed)):.3e}; curve is not immersed"
        )
    return speed


def reparametrize_unit_speed(eta: Curve) -> Curve:
    """Unit-speed representative eta o h^{-1} with h the arc length from 0.

    The node images and the inverse of h are both taken through cubic
    splines, so the output lives on the same grid.  Total length must be
    2 within 1 percent.
    """
    grid = eta.grid
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("reparametrize_unit_speed expects the fixed-free grid")
    speed = _speed_of(eta)
    harc = cumulative_from_center(speed, grid)
    length = float(harc[-1] - harc[0])
    if abs(length - 2.0) > _LENGTH_SLACK:
        raise LengthMismatch(f"total length {length:.6f} is not 2 within 1%")
    sx = CubicSpline(grid.nodes, eta.points[:, 0])
    sy = CubicSpline(grid.nodes, eta.points[:, 1])
    hinv = CubicSpline(harc, grid.nodes)
    uu = np.clip(hinv(grid.nodes), -1.0, 1.0)
    pts = np.stack([sx(uu), sy(uu)], axis=1)
    return Curve(grid, enforce_odd(pts), Symmetry.ODD)


def dphi(eta: Curve, w: VectorField) -> VectorField:
    """Differential of the reparametrization map applied to w.

    Subtracts from w the tangential transport that the moving arc-length
    frame absorbs, then carries the remainder to the unit-speed
    parametrization.  Fields along the velocity direction are flattened
    to zero.
    """
    grid = eta.grid
    if w.grid != grid:
        raise ValueError("curve and field live on different grids")
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("dphi expects the fixed-free grid")
    speed = _speed_of(eta)
    vel = derivative(eta.points, grid, 1)
    tang = vel / speed[:, None]
    dw = derivative(w.values, grid, 1)
    slide = cumulative_from_center(np.sum(dw * tang, axis=1), grid)
    beta = w.values - slide[:, None] * tang
    harc = cumulative_from_center(speed, grid)
    hinv = CubicSpline(harc, grid.nodes)
    uu = np.clip(hinv(grid.nodes), -1.0, 1.0)
    bx = CubicSpline(grid.nodes, beta[:, 0])
    by = CubicSpline(grid.nodes, beta[:, 1])
    vals = np.stack([bx(uu), by(uu)], axis=1)
    return VectorField(grid, enforce_odd(vals), Symmetry.ODD)


def modified_invariant_inner(eta: Curve, w: VectorField) -> float:
    """Two-term parametrization-invariant quadratic form on immersions.

    First term: squared pairing of w against the unnormalized rotated
    velocity, weighted by 1/speed.  Second term: speed-weighted square of
    the accumulated tangential stretch of w.  Both change variables
    cleanly under odd reparametrizations.
    """
    grid = eta.grid
    if w.grid != grid:
        raise ValueError("curve and field live on different grids")
    speed = _speed_of(eta)
    vel = derivative(eta.points, grid, 1)
    first = integrate(np.sum(w.values * perp(vel), axis=1) ** 2 / speed, grid)
    dw = derivative(w.values, grid, 1)
    stretch = cumulative_from_center(
        np.sum(dw * vel, axis=1) / speed, grid
    )
    second = integrate(speed * stretch * stretch, grid)
    return float(first + second)


def chord_lower_bound(gamma1: Curve, gamma2: Curve) -> float:
    """Distance floor (1/sqrt 2) int |gamma2 - gamma1| ds."""
    if gamma1.grid != gamma2.grid:
        raise ValueError("curves live on different grids")
    gap = gamma2.points - gamma1.points
    return float(integrate(np.hypot(gap[:, 0], gap[:, 1]), gamma1.grid) / math.sqrt(2.0))


def path_length(path: list[Curve], kind: MetricKind) -> float:
    """Polygonal length of a curve path under the chosen metric.

    Each segment is measured at the averaged midpoint curve with the
    difference field projected to its tangent space, so the sum is the
    Riemann approximation of int sqrt(<<eta_t, eta_t>>) dt.
    """
    if len(path) < 2:
        raise ValueError("a path needs at least two curves")
    total = 0.0
    for g1, g2 in zip(path, path[1:]):
        if g1.grid != g2.grid:
            raise ValueError("path curves live on different grids")
        mid = Curve(g1.grid, 0.5 * (g1.points + g2.points))
        dv = VectorField(g1.grid, g2.points - g1.points)
        dv = orthogonal_project(mid, dv)
        total += math.sqrt(max(metric_inner(kind, mid, dv, dv), 0.0))
    return total


# ---------------------------------------------------------------------------
# Michor-Mumford geodesics in intrinsic variables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MMGeodesicState:
    """One snapshot (kappa, a, b, omega, anchor) of the intrinsic flow.

    kappa and a are odd, b is odd with b(0) = 0, omega is even, and the
    anchor is the tangent angle at the center node.  b and omega must be
    the stored reconstructions b = int_0^s kappa a and omega = a_s +
    kappa b of the same snapshot.
    """

    grid: Grid
    kappa: np.ndarray
    a: np.ndarray
    b: np.ndarray
    omega: np.ndarray
    anchor: float
    time: float = 0.0

    def __post_init__(self) -> None:
        for name in ("kappa", "a", "b", "omega"):
            arr = np.asarray(getattr(self, name), dtype=float)
            self.grid.check_values(arr)
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.a[0] != 0.0 or self.a[-1] != 0.0:
            raise ValueError("a must vanish exactly at the endpoints")
        mid = self.grid.n // 2
        if abs(float(self.b[mid])) > 1e-12:
            raise ValueError("b must vanish at the center node")
        res_b = float(
            np.max(np.abs(self.b - cumulative_from_center(self.kappa * self.a, self.grid)))
        )
        res_omega = float(
            np.max(
                np.abs(
                    self.omega
                    - (derivative(self.a, self.grid, 1) + self.kappa * self.b)
                )
            )
        )
        if max(res_b, res_omega) > _STATE_RESIDUAL_TOL:
            raise ValueError(
                f"stored fields break the stationary relations "
                f"(b residual {res_b:.3e}, omega residual {res_omega:.3e})"
            )


@dataclass
class MMGeodesicTrajectory:
    """Saved intrinsic states with reconstructed curves and diagnostics.

    ``failure`` is None for a clean run; a halted run keeps the partial
    trajectory and names the reason here instead of raising.
    """

    states: list[MMGeodesicState] = field(default_factory=list)
    curves: list[Curve] = field(default_factory=list)
    records: list[dict] = field(default_factory=list)
    failure: str | None = None
    dt: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def final(self) -> MMGeodesicState:
        return self.states[-1]


def _mm_rhs(grid: Grid, kappa: np.ndarray, a: np.ndarray):
    b = cumulative_from_center(kappa * a, grid)
    omega = derivative(a, grid, 1) + kappa * b
    a_t = 0.5 * kappa * a * a + b * derivative(a, grid, 1)
    a_t[0] = 0.0
    a_t[-1] = 0.0
    kappa_t = derivative(omega, grid, 1)
    return kappa_t, a_t, b, omega


def _mm_state(grid: Grid, kappa, a, anchor, time) -> MMGeodesicState:
    b = cumulative_from_center(kappa * a, grid)
    omega = derivative(a, grid, 1) + kappa * b
    return MMGeodesicState(grid, kappa, a, b, omega, anchor, time)


def _mm_curve(state: MMGeodesicState) -> Curve:
    theta = state.anchor + cumulative_from_center(state.kappa, state.grid)
    return theta_to_curve(theta, state.grid)


def _mm_record(state: MMGeodesicState, curve: Curve) -> dict:
    drift = float(np.max(np.abs(signed_curvature(curve) - state.kappa)))
    return {
        "time": state.time,
        "energy": float(integrate(state.a * state.a, state.grid)),
        "recon_drift": drift,
        "max_abs_a": float(np.max(np.abs(state.a))),
        "max_abs_b": float(np.max(np.abs(state.b))),
    }


def mm_geodesic_integrate(
    gamma0: Curve,
    a0: np.ndarray,
    T: float,
    dt: float,
    store_every: int = 1,
    cfl_factor: float = _CFL_FACTOR,
    drift_budget: float = _DRIFT_BUDGET,
) -> MMGeodesicTrajectory:
    """Advance the intrinsic system a_t = kappa a^2/2 + b a_s, kappa_t = omega_s.

    Per step b is rebuilt as the centered integral of kappa a and omega as
    a_s + kappa b; the endpoint values of a stay pinned to zero.  Curves
    are reconstructed from kappa through the angular chart at every saved
    state, transporting the center angle with omega.  A reconstruction
    drift beyond ``drift_budget`` halts the run and returns the partial
    trajectory with ``failure`` set rather than raising.
    """
    grid = gamma0.grid
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("mm_geodesic_integrate runs on the fixed-free grid")
    a = np.asarray(a0, dtype=float).copy()
    grid.check_values(a)
    ends = max(abs(float(a[0])), abs(float(a[-1])))
    if ends > 1e-12:
        raise ValueError(f"a0 must vanish at the endpoints (got {ends:.3e})")
    a[0] = 0.0
    a[-1] = 0.0
    odd_part = np.max(np.abs(a + a[::-1]))
    if odd_part > 1e-10:
        raise ValueError(f"a0 must be odd (even part {odd_part:.3e})")
    kappa = signed_curvature(gamma0)
    vel = derivative(gamma0.points, grid, 1)
    mid = grid.n // 2
    anchor = float(math.atan2(vel[mid, 1], vel[mid, 0]))

    traj = MMGeodesicTrajectory(dt=dt)
    state = _mm_state(grid, kappa, a, anchor, 0.0)
    curve = _mm_curve(state)
    traj.states.append(state)
    traj.curves.append(curve)
    traj.records.append(_mm_record(state, curve))

    n_steps = max(1, int(np.ceil(T / dt - 1e-12)))
    t = 0.0
    for k in range(1, n_steps + 1):
        step = dt if k < n_steps else T - (n_steps - 1) * dt
        speed = float(np.max(np.abs(a)) + np.max(np.abs(cumulative_from_center(kappa * a, grid))))
        limit = cfl_factor * grid.spacing / (speed + 1e-9)
        if step > limit:
            raise CflViolation(
                f"dt={step:g} exceeds the transport limit {limit:g} at t={t:.6g}"
            )
        k1k, k1a, _, w1 = _mm_rhs(grid, kappa, a)
        k2k, k2a, _, w2 = _mm_rhs(grid, kappa + 0.5 * step * k1k, a + 0.5 * step * k1a)
        k3k, k3a, _, w3 = _mm_rhs(grid, kappa + 0.5 * step * k2k, a + 0.5 * step * k2a)
        k4k, k4a, _, w4 = _mm_rhs(grid, kappa + step * k3k, a + step * k3a)
        kappa = kappa + (step / 6.0) * (k1k + 2.0 * k2k + 2.0 * k3k + k4k)
        a = a + (step / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        anchor = anchor + (step / 6.0) * (
            w1[mid] + 2.0 * w2[mid] + 2.0 * w3[mid] + w4[mid]
        )
        t += step
        if k % store_every == 0 or k == n_steps:
            state = _mm_state(grid, kappa, a, anchor, t)
            curve = _mm_curve(state)
            record = _mm_record(state, curve)
            traj.states.append(state)
            traj.curves.append(curve)
            traj.records.append(record)
            if record["recon_drift"] > drift_budget:
                traj.failure = (
                    f"reconstruction drift {record['recon_drift']:.3e} exceeded "
                    f"the {drift_budget:g} budget at t={t:.6g}"
                )
                break
    return traj


# ---------------------------------------------------------------------------
# degenerate-vs-nondegenerate distance experiment
# ---------------------------------------------------------------------------


def zigzag_experiment(
    gamma1: Curve,
    gamma2: Curve,
    frequencies: list[int],
    amplitude: float = 1.2,
    steps: int = 40,
) -> list[dict]:
    """Crumpled-homotopy length table for a pair of unit-speed curves.

    For each frequency f the straight homotopy between the tangent-angle
    charts is modulated by amplitude * sin(pi tau) * cos(2 pi f s), every
    intermediate curve is rebuilt at unit speed from its angle, and the
    MichorMumford and L2 path lengths are reported next to the chord
    floor.  The modulation is scaled down with the chart distance of the
    endpoints, so equal endpoints give the constant path.
    """
    grid = gamma1.grid
    if gamma2.grid != grid:
        raise ValueError("curves live on different grids")
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("zigzag_experiment expects the fixed-free grid")
    if steps < 2:
        raise ValueError("need at least two homotopy steps")
    th1 = curve_to_theta(gamma1).theta
    th2 = curve_to_theta(gamma2).theta
    scale = amplitude * min(1.0, float(np.max(np.abs(th2 - th1))))
    chord = chord_lower_bound(gamma1, gamma2)
    taus = np.linspace(0.0, 1.0, steps + 1)
    rows = []
    for freq in frequencies:
        crumple = np.cos(2.0 * math.pi * freq * grid.nodes)
        path = []
        for tau in taus:
            theta = th1 + tau * (th2 - th1)
            theta = theta + scale * math.sin(math.pi * tau) * crumple
            path.append(theta_to_curve(theta, grid))
        rows.append(
            {
                "freq": int(freq),
                "mm_length": path_length(path, MetricKind.MICHOR_MUMFORD),
                "l2_length": path_length(path, MetricKind.L2),
                "chord": chord,
            }
        )
    return rows
