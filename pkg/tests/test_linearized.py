"""Variation solver along geodesics: modes, conjugate points, exp-map derivative."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.polynomial.legendre import Legendre

from whipgeo import (
    Symmetry,
    VectorField,
    conjugate_time,
    critical_omega,
    derivative,
    dexp_fd,
    exact_tangent_field,
    integrate,
    integrate_geodesic,
    make_grid,
    min_singular_dexp,
    mode_amplitude_series,
    mode_seed,
    random_state,
    rod_state,
    rotating_rod_mode,
    solve_jacobi,
    straight_rod,
)


@pytest.fixture(scope="module")
def g128():
    return make_grid("fixed_free_odd", 128)


def _zero_field(grid):
    return VectorField(grid, np.zeros((grid.n + 1, 2)), Symmetry.ODD)


# ---------------------------------------------------------------------------
# closed-form scalars
# ---------------------------------------------------------------------------


def test_mode_amplitude_closed_forms():
    # alpha_n^2 = omega^2 (2n+1)(n-1); n=1 is the rigid mode with amplitude t
    assert rotating_rod_mode(2.0, 1, 0.37) == pytest.approx(0.37)
    a2 = np.sqrt(5.0)
    assert rotating_rod_mode(1.0, 2, 0.5) == pytest.approx(np.sin(a2 * 0.5) / a2)
    assert rotating_rod_mode(1.0, 2, np.pi / a2) == pytest.approx(0.0, abs=1e-15)
    a3 = np.sqrt(14.0)
    assert rotating_rod_mode(1.0, 3, 1.0) == pytest.approx(np.sin(a3) / a3)


def test_conjugate_time_values():
    assert conjugate_time(1.0, 2) == pytest.approx(np.pi / np.sqrt(5.0))
    assert conjugate_time(1.0, 2) == pytest.approx(1.40496, abs=1e-5)
    assert conjugate_time(1.0, 1) is None
    assert conjugate_time(2.0, 3) == pytest.approx(np.pi / (2 * np.sqrt(14.0)))
    with pytest.raises(ValueError):
        conjugate_time(-1.0, 2)
    with pytest.raises(ValueError):
        conjugate_time(0.0, 2)


def test_critical_omega_places_zero_at_one():
    for n in (2, 3, 4, 5):
        assert conjugate_time(critical_omega(n), n) == pytest.approx(1.0)
    assert critical_omega(2) == pytest.approx(np.pi / np.sqrt(5.0))
    with pytest.raises(ValueError):
        critical_omega(1)


# ---------------------------------------------------------------------------
# discrete Legendre diagonalization
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("ng", [64, 128, 256])
@pytest.mark.parametrize("mode", [2, 3, 4, 5])
def test_legendre_eigen_identity(ng, mode):
    # d^2/ds^2((1-s^2) P'_{2n-1}) = -2n(2n-1) P'_{2n-1}; the fourth-derivative
    # constant grows steeply with the mode, so the budget scales by mode index
    grid = make_grid("fixed_free_odd", ng)
    s = grid.nodes
    dP = Legendre.basis(2 * mode - 1).deriv()(s)
    lhs = derivative((1 - s**2) * dP, grid, 2)
    rhs = -2 * mode * (2 * mode - 1) * dP
    rel = np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))
    assert rel <= 10.0 / mode**2


def test_legendre_identity_refines_second_order():
    errs = []
    for ng in (64, 256):
        grid = make_grid("fixed_free_odd", ng)
        s = grid.nodes
        dP = Legendre.basis(9).deriv()(s)
        lhs = derivative((1 - s**2) * dP, grid, 2)
        rhs = -2 * 5 * 9 * dP
        errs.append(np.max(np.abs(lhs - rhs)))
    # two refinements: expect close to 16x
    assert errs[0] / errs[1] > 8.0


# ---------------------------------------------------------------------------
# variation solves
# ---------------------------------------------------------------------------


def test_zero_velocity_gives_linear_growth(g128):
    rod = straight_rod(g128)
    traj = integrate_geodesic(rod, _zero_field(g128), 1.0, 1e-2,
                              project_each=0, store_every=1)
    y = mode_seed(g128, 2)
    series = solve_jacobi(traj, y)
    for st in series[:: len(series) // 7]:
        assert np.max(np.abs(st.xi.values - st.time * y.values)) < 1e-12
        assert np.max(np.abs(st.phi)) < 1e-12
    assert series[-1].time == pytest.approx(1.0)


@pytest.mark.parametrize("mode", [2, 3, 4])
def test_rotating_mode_amplitudes(g128, mode):
    gamma, w = rod_state(g128, omega=1.0)
    traj = integrate_geodesic(gamma, w, 1.5, 1e-3, project_each=0, store_every=1)
    series = solve_jacobi(traj, mode_seed(g128, mode))
    amps = mode_amplitude_series(series, 1.0, mode)
    ref = np.array([rotating_rod_mode(1.0, mode, st.time) for st in series])
    assert np.max(np.abs(amps - ref)) < 1e-3


@pytest.mark.parametrize("mode", [2, 3, 4])
def test_conjugate_zero_located_by_sign_change(g128, mode):
    gamma, w = rod_state(g128, omega=1.0)
    dt = 1e-3
    traj = integrate_geodesic(gamma, w, 1.5, dt, project_each=0, store_every=1)
    series = solve_jacobi(traj, mode_seed(g128, mode))
    amps = mode_amplitude_series(series, 1.0, mode)
    times = np.array([st.time for st in series])
    flips = np.where(np.diff(np.sign(amps[1:])) != 0)[0] + 1
    assert len(flips) > 0
    t_first = times[flips[0] + 1]
    assert abs(t_first - conjugate_time(1.0, mode)) <= 2 * dt


def test_solver_is_linear(g128):
    rng = np.random.default_rng(2)
    gamma, w = random_state(rng, g128, curve_amplitude=0.4, speed=0.5)
    traj = integrate_geodesic(gamma, w, 0.3, 1e-3, project_each=0, store_every=1)
    y1 = exact_tangent_field(gamma, mode_seed(g128, 2))
    y2 = exact_tangent_field(gamma, mode_seed(g128, 3))
    a, b = 0.7, -1.3
    comb = VectorField(g128, a * y1.values + b * y2.values, Symmetry.ODD)
    x1 = solve_jacobi(traj, y1)[-1].xi.values
    x2 = solve_jacobi(traj, y2)[-1].xi.values
    xc = solve_jacobi(traj, comb)[-1].xi.values
    assert np.max(np.abs(xc - a * x1 - b * x2)) < 1e-8


def test_constraint_drift_stays_small(g128):
    # <xi_s, eta_s> = 0 rides along without enforcement; moderate data keeps
    # the residual at the discretization level
    gamma, w = rod_state(g128, omega=1.0)
    traj = integrate_geodesic(gamma, w, 1.0, 1e-3, project_each=0, store_every=1)
    series = solve_jacobi(traj, mode_seed(g128, 2))
    final = series[-1]
    ets = derivative(traj.final.eta.points, g128, 1)
    dxi = derivative(final.xi.values, g128, 1)
    assert np.max(np.abs(np.sum(dxi * ets, axis=1))) < 1e-2


def test_solve_jacobi_rejects_sparse_storage(g128):
    gamma, w = rod_state(g128, omega=1.0)
    traj = integrate_geodesic(gamma, w, 0.1, 1e-3, store_every=50)
    with pytest.raises(ValueError, match="store_every=1"):
        solve_jacobi(traj, mode_seed(g128, 2))


# ---------------------------------------------------------------------------
# finite-difference derivative of the exponential map
# ---------------------------------------------------------------------------


def test_dexp_identity_at_zero(g128):
    rod = straight_rod(g128)
    y = mode_seed(g128, 2)
    out = dexp_fd(rod, _zero_field(g128), y, eps=1e-4, project_each=0)
    assert np.max(np.abs(out.values - y.values)) < 1e-3


def test_dexp_eps_validation(g128):
    rod = straight_rod(g128)
    y = mode_seed(g128, 2)
    for bad in (1e-7, 0.5):
        with pytest.raises(ValueError, match="eps"):
            dexp_fd(rod, _zero_field(g128), y, eps=bad)


@pytest.mark.parametrize("seed", [4, 8, 15])
def test_dexp_matches_jacobi(g128, seed):
    rng = np.random.default_rng(seed)
    gamma, w = random_state(rng, g128, curve_amplitude=0.4, speed=0.5)
    rng_y = np.random.default_rng(seed + 100)
    _, y_raw = random_state(rng_y, g128, curve_amplitude=0.4, speed=0.4)
    y = exact_tangent_field(gamma, VectorField(g128, y_raw.values, Symmetry.ODD))
    traj = integrate_geodesic(gamma, w, 1.0, 1e-3, project_each=0, store_every=1)
    xi1 = solve_jacobi(traj, y)[-1].xi.values
    fd = dexp_fd(gamma, w, y, eps=1e-4, project_each=0).values
    assert np.max(np.abs(xi1 - fd)) < max(1e-3, 10 * 1e-4)


def test_dexp_kernel_at_critical_rate(g128):
    rod = straight_rod(g128)
    _, w = rod_state(g128, omega=critical_omega(2))
    y = exact_tangent_field(rod, mode_seed(g128, 2))
    out = dexp_fd(rod, w, y, eps=1e-4, project_each=0)
    scale = np.max(np.abs(y.values))
    assert np.max(np.abs(out.values)) < 1e-2 * scale


# ---------------------------------------------------------------------------
# kernel clustering probe
# ---------------------------------------------------------------------------


def test_min_singular_identity_at_rest(g128):
    rod = straight_rod(g128)
    ms = min_singular_dexp(rod, _zero_field(g128), 6)
    assert ms == pytest.approx(1.0, abs=1e-3)


def test_min_singular_critical_rate(g128):
    rod = straight_rod(g128)
    _, w = rod_state(g128, omega=critical_omega(2))
    assert min_singular_dexp(rod, w, 6) <= 1e-2


def test_min_singular_off_critical(g128):
    rod = straight_rod(g128)
    om = 0.5 * (critical_omega(4) + critical_omega(5))
    ms = min_singular_dexp(rod, w=rod_state(g128, omega=om)[1], mode_count=6)
    alphas = [om * np.sqrt((2 * j + 1) * (j - 1)) for j in range(1, 7)]
    pred = min(1.0 if a == 0 else abs(np.sin(a) / a) for a in alphas)
    assert ms >= 0.1
    assert ms == pytest.approx(pred, abs=1e-2)


def test_min_singular_rejects_bad_count(g128):
    rod = straight_rod(g128)
    with pytest.raises(ValueError, match="mode_count"):
        min_singular_dexp(rod, _zero_field(g128), 13)
