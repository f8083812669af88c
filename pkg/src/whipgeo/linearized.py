"""Linearized flow along a geodesic: Jacobi fields, the finite-difference
derivative of the exponential map, and conjugate-point probes.

The variation (xi, phi) rides along a stored base trajectory and obeys

    xi_tt = d_s(sigma xi_s) + d_s(phi eta_s),
    phi'' - |eta''|^2 phi = 2 <eta'', xi''> sigma - 2 <eta_t', xi_t'>,

with phi vanishing at both ends, xi(0) = 0 and xi_t(0) = y.  Along the
rotating segment the system diagonalizes over derivative-of-odd-Legendre
profiles, which gives closed-form mode amplitudes and conjugate times used
throughout the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import Legendre

from .dynamics import (
    GeodesicTrajectory,
    WhipState,
    _acceleration,
    _cfl_limit,
    _solve_tension,
    exp_map,
    integrate_geodesic,
)
from .errors import CflViolation
from .families import exact_tangent_field
from .grid_curves import (
    BoundaryKind,
    Curve,
    Grid,
    Symmetry,
    VectorField,
    d1_matrix,
    derivative,
    enforce_odd,
    integrate,
    perp,
    quadrature_weights,
)
from .tension import curvature_potential, dirichlet_solve

__all__ = [
    "JacobiState",
    "ModeRecord",
    "conjugate_time",
    "critical_omega",
    "dexp_fd",
    "min_singular_dexp",
    "mode_amplitude_series",
    "mode_seed",
    "rotating_rod_mode",
    "solve_jacobi",
]


@dataclass(frozen=True)
class JacobiState:
    """Variation snapshot: field xi, its velocity, and the linearized tension."""

    xi: VectorField
    xi_t: VectorField
    phi: np.ndarray
    time: float


@dataclass(frozen=True)
class ModeRecord:
    """One rotating-segment mode: index, frequency, closed-form amplitude."""

    n: int
    alpha: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("mode index starts at 1")
        if self.alpha < 0:
            raise ValueError("mode frequency must be nonnegative")

    @classmethod
    def from_omega(cls, omega: float, n: int) -> "ModeRecord":
        if n < 1:
            raise ValueError("mode index starts at 1")
        return cls(n, omega * np.sqrt((2 * n + 1) * (n - 1)))

    def amplitude(self, t: float) -> float:
        if self.alpha == 0.0:
            return float(t)
        return float(np.sin(self.alpha * t) / self.alpha)


def rotating_rod_mode(omega: float, n: int, t: float) -> float:
    """Closed-form mode amplitude sin(alpha_n t)/alpha_n; the n=1 limit is t."""
    return ModeRecord.from_omega(omega, n).amplitude(t)


def conjugate_time(omega: float, n: int):
    """First zero pi/alpha_n of mode n, or None for the rigid n=1 mode."""
    if omega <= 0:
        raise ValueError("angular speed must be positive")
    if n < 1:
        raise ValueError("mode index starts at 1")
    if n == 1:
        return None
    return float(np.pi / (omega * np.sqrt((2 * n + 1) * (n - 1))))


def critical_omega(n: int) -> float:
    """Rotation rate that places mode n's first conjugate point at t = 1.

    Solving pi/(omega sqrt((2n+1)(n-1))) = 1 gives omega = pi/sqrt(...);
    at this rate the mode-n response sin(alpha_n)/alpha_n vanishes and the
    derivative of the exponential map acquires a kernel direction.
    """
    if n < 2:
        raise ValueError("only modes n >= 2 have conjugate points")
    return float(np.pi / np.sqrt((2 * n + 1) * (n - 1)))


def mode_seed(grid: Grid, n: int) -> VectorField:
    """Odd seed whose s-derivative profile is P'_{2n-1}: values (0, P_{2n-1})."""
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("mode seeds live on the fixed-free grid")
    if n < 1:
        raise ValueError("mode index starts at 1")
    prof = Legendre.basis(2 * n - 1)(grid.nodes)
    vals = np.stack([np.zeros_like(prof), prof], axis=1)
    return VectorField(grid, vals, Symmetry.ODD)


def _linear_phi(
    eta: Curve, vel: np.ndarray, xi: np.ndarray, xi_t: np.ndarray,
    sigma: np.ndarray
) -> np.ndarray:
    grid = eta.grid
    q = curvature_potential(eta)
    dde = derivative(eta.points, grid, 2)
    ddx = derivative(xi, grid, 2)
    dve = derivative(vel, grid, 1)
    dvx = derivative(xi_t, grid, 1)
    rhs = 2.0 * np.sum(dde * ddx, axis=1) * sigma - 2.0 * np.sum(dve * dvx, axis=1)
    return dirichlet_solve(q, rhs, grid)


def solve_jacobi(
    trajectory: GeodesicTrajectory,
    y: VectorField,
    cfl_factor: float = 0.5,
) -> list[JacobiState]:
    """Integrate the variation equations along a densely stored trajectory.

    The base state is re-advanced step by step from the trajectory's initial
    data so every RK4 stage sees base and variation at matching times; the
    stored spacing supplies dt, so the run must keep every step
    (store_every=1).
    """
    times = trajectory.times
    if len(times) < 2:
        raise ValueError("trajectory too short to define a time step")
    dt = float(trajectory.dt)
    if np.max(np.abs(np.diff(times) - dt)) > 1e-12:
        raise ValueError("trajectory must be stored at every step (store_every=1)")
    state = trajectory.states[0]
    grid = state.eta.grid
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("the variation solver runs on the fixed-free grid")
    if y.grid != grid:
        raise ValueError("seed lives on a different grid")

    def stage(pts, vel, xi, xid):
        eta = Curve(grid, pts, Symmetry.ODD)
        tension = _solve_tension(eta, vel)
        sigma = tension.sigma
        acc = _acceleration(eta, sigma)
        phi = _linear_phi(eta, vel, xi, xid, sigma)
        axi = _acceleration(Curve(grid, xi, Symmetry.ODD), sigma) \
            + _acceleration(eta, phi)
        return vel, acc, xid, axi, sigma, phi

    p0 = state.eta.points
    v0 = state.eta_t.values
    x0 = np.zeros_like(p0)
    u0 = y.values.copy()
    _, _, _, _, sigma0, phi0 = stage(p0, v0, x0, u0)
    out = [
        JacobiState(
            VectorField(grid, x0.copy(), Symmetry.ODD),
            VectorField(grid, u0.copy(), Symmetry.ODD),
            phi0,
            float(times[0]),
        )
    ]
    t = float(times[0])
    for _ in range(len(times) - 1):
        k1p, k1v, k1x, k1u, sigma, _ = stage(p0, v0, x0, u0)
        limit = _cfl_limit(grid, sigma, cfl_factor)
        if dt > limit:
            raise CflViolation(
                f"dt={dt:g} exceeds the wave-speed limit {limit:g}"
            )
        k2p, k2v, k2x, k2u, _, _ = stage(
            p0 + 0.5 * dt * k1p, v0 + 0.5 * dt * k1v,
            x0 + 0.5 * dt * k1x, u0 + 0.5 * dt * k1u)
        k3p, k3v, k3x, k3u, _, _ = stage(
            p0 + 0.5 * dt * k2p, v0 + 0.5 * dt * k2v,
            x0 + 0.5 * dt * k2x, u0 + 0.5 * dt * k2u)
        k4p, k4v, k4x, k4u, _, _ = stage(
            p0 + dt * k3p, v0 + dt * k3v, x0 + dt * k3x, u0 + dt * k3u)
        p0 = p0 + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        v0 = v0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        x0 = x0 + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        u0 = u0 + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        eta = enforce_odd(Curve(grid, p0, Symmetry.ODD))
        p0 = eta.points
        v0 = enforce_odd(VectorField(grid, v0, Symmetry.ODD)).values
        x0 = enforce_odd(VectorField(grid, x0, Symmetry.ODD)).values
        u0 = enforce_odd(VectorField(grid, u0, Symmetry.ODD)).values
        t += dt
        _, _, _, _, _, phi = stage(p0, v0, x0, u0)
        out.append(
            JacobiState(
                VectorField(grid, x0.copy(), Symmetry.ODD),
                VectorField(grid, u0.copy(), Symmetry.ODD),
                phi,
                t,
            )
        )
    return out


def mode_amplitude_series(
    states: list[JacobiState], omega: float, n: int
) -> np.ndarray:
    """Project each xi(t) onto the rotating mode profile P_{2n-1} e_perp(t)."""
    if not states:
        raise ValueError("empty variation series")
    grid = states[0].xi.grid
    prof = Legendre.basis(2 * n - 1)(grid.nodes)
    denom = integrate(prof * prof, grid)
    amps = np.empty(len(states))
    for i, st in enumerate(states):
        e = np.array([-np.sin(omega * st.time), np.cos(omega * st.time)])
        amps[i] = integrate(st.xi.values @ e * prof, grid) / denom
    return amps


def dexp_fd(
    gamma: Curve,
    w: VectorField,
    y: VectorField,
    eps: float = 1e-4,
    dt: float = 1e-3,
    project_each: int = 10,
) -> VectorField:
    """Central difference (exp(w + eps y) - exp(w - eps y)) / (2 eps)."""
    if not 1e-6 <= eps <= 1e-2:
        raise ValueError("step eps must lie in [1e-6, 1e-2]")
    grid = gamma.grid
    if y.grid != grid or w.grid != grid:
        raise ValueError("fields live on a different grid")
    up = VectorField(grid, w.values + eps * y.values, w.symmetry)
    dn = VectorField(grid, w.values - eps * y.values, w.symmetry)
    plus = exp_map(gamma, up, dt=dt, project_each=project_each)
    minus = exp_map(gamma, dn, dt=dt, project_each=project_each)
    vals = (plus.points - minus.points) / (2.0 * eps)
    return VectorField(grid, vals, w.symmetry)


def _orthonormal_profiles(grid: Grid, count: int) -> np.ndarray:
    cols = [Legendre.basis(2 * j - 1)(grid.nodes) for j in range(1, count + 1)]
    prof = np.stack(cols, axis=1)
    wts = quadrature_weights(grid)
    gram = prof.T @ (wts[:, None] * prof)
    chol = np.linalg.cholesky(gram)
    return prof @ np.linalg.inv(chol).T


def min_singular_dexp(
    gamma: Curve,
    w: VectorField,
    mode_count: int,
    dt: float = 1e-3,
) -> float:
    """Smallest singular value of the mode-basis response of D exp at t=1.

    One Jacobi solve per orthonormalized odd-Legendre seed; the responses are
    read back in the matching end-time frame, so the map is the identity
    matrix whenever w = 0 and develops a near-kernel column at critical
    rotation rates.
    """
    if not 1 <= mode_count <= 12:
        raise ValueError("mode_count must lie in [1, 12]")
    grid = gamma.grid
    trajectory = integrate_geodesic(
        gamma, w, 1.0, dt, project_each=0, store_every=1)
    if trajectory.failure is not None:
        raise ValueError(f"base geodesic failed: {trajectory.failure}")
    prof = _orthonormal_profiles(grid, mode_count)
    tangent0 = d1_matrix(grid) @ gamma.points
    normal0 = perp(tangent0)
    final = trajectory.final.eta
    tangent1 = d1_matrix(grid) @ final.points
    normal1 = perp(tangent1)
    wts = quadrature_weights(grid)
    mat = np.empty((mode_count, mode_count))
    for k in range(mode_count):
        raw = VectorField(grid, prof[:, k, None] * normal0, Symmetry.ODD)
        seed = exact_tangent_field(gamma, raw)
        xi1 = solve_jacobi(trajectory, seed)[-1].xi.values
        comp = np.sum(xi1 * normal1, axis=1)
        mat[:, k] = prof.T @ (wts * comp)
    return float(np.min(np.linalg.svd(mat, compute_uv=False)))
