"""Grids, finite differences, weighted norms, and the angular chart."""

from __future__ import annotations

import numpy as np
import pytest

from whipgeo import (
    AngularField,
    Curve,
    DegenerateImmersion,
    OddNodeCount,
    Symmetry,
    VectorField,
    angular_to_velocity,
    check_compatibility,
    cumulative_from_center,
    curve_to_theta,
    d1_matrix,
    derivative,
    energy_norm,
    enforce_odd,
    exp_chart,
    integrate,
    log_chart,
    make_grid,
    odd_violation,
    quadrature_weights,
    rod_state,
    tangency_project,
    theta_to_curve,
    velocity_to_angular,
    weighted_norm,
    weighted_sup,
)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


def test_fixed_free_grid_layout() -> None:
    g = make_grid("fixed_free_odd", 8)
    assert g.num_nodes == 9
    assert g.spacing == pytest.approx(0.25)
    assert g.nodes[0] == -1.0 and g.nodes[-1] == 1.0
    assert g.nodes[g.center_index] == 0.0


def test_periodic_grid_layout() -> None:
    g = make_grid("periodic", 16)
    assert g.num_nodes == 16
    assert g.spacing == pytest.approx(1.0 / 16)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == pytest.approx(15.0 / 16)


def test_grid_rejections() -> None:
    with pytest.raises(OddNodeCount):
        make_grid("fixed_free_odd", 9)
    with pytest.raises(ValueError):
        make_grid("fixed_free_odd", 4)
    with pytest.raises(ValueError):
        make_grid("periodic", 7)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def test_derivative_exact_on_quadratic() -> None:
    g = make_grid("fixed_free_odd", 32)
    s = g.nodes
    f = s**2 + 2.0 * s - 0.5
    assert np.max(np.abs(derivative(f, g, 1) - (2.0 * s + 2.0))) < 1e-12
    assert np.max(np.abs(derivative(f, g, 2) - 2.0)) < 1e-11


def test_second_derivative_exact_on_cubic() -> None:
    # the one-sided end rows are exact through cubics as well
    g = make_grid("fixed_free_odd", 32)
    s = g.nodes
    assert np.max(np.abs(derivative(s**3, g, 2) - 6.0 * s)) < 1e-10


def test_high_orders_compose() -> None:
    g = make_grid("fixed_free_odd", 128)
    s = g.nodes
    f = s**4
    interior = slice(4, -4)
    assert np.max(np.abs(derivative(f, g, 3)[interior] - 24.0 * s[interior])) < 1e-8
    assert np.max(np.abs(derivative(f, g, 4)[interior] - 24.0)) < 1e-7


def test_derivative_order_bounds() -> None:
    g = make_grid("fixed_free_odd", 8)
    with pytest.raises(ValueError):
        derivative(g.nodes, g, 5)
    assert np.array_equal(derivative(g.nodes, g, 0), g.nodes)


def test_periodic_derivative_second_order() -> None:
    errs = []
    for n in (64, 128):
        g = make_grid("periodic", n)
        f = np.sin(2 * np.pi * g.nodes)
        ref = 2 * np.pi * np.cos(2 * np.pi * g.nodes)
        errs.append(np.max(np.abs(derivative(f, g, 1) - ref)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_d1_matrix_matches_derivative() -> None:
    for kind in ("fixed_free_odd", "periodic"):
        g = make_grid(kind, 32)
        f = np.cos(3.0 * g.nodes)
        assert np.max(np.abs(d1_matrix(g) @ f - derivative(f, g, 1))) < 1e-13


# ---------------------------------------------------------------------------
# quadrature and weighted norms
# ---------------------------------------------------------------------------


def test_quadrature_exact_for_linear() -> None:
    g = make_grid("fixed_free_odd", 64)
    assert integrate(np.ones(g.num_nodes), g) == pytest.approx(2.0, abs=1e-14)
    assert integrate(g.nodes, g) == pytest.approx(0.0, abs=1e-14)
    gp = make_grid("periodic", 64)
    assert integrate(np.ones(gp.num_nodes), gp) == pytest.approx(1.0, abs=1e-14)
    assert np.sum(quadrature_weights(g)) == pytest.approx(2.0, abs=1e-14)


def test_weighted_norm_closed_forms() -> None:
    g = make_grid("fixed_free_odd", 128)
    s = g.nodes
    # ||s||_{0,0}^2 = int s^2 = 2/3; ||s||_{2,1}^2 = int (1-s^2)^2 = 16/15
    assert weighted_norm(s, 0, 0, grid=g) == pytest.approx(0.816496580927726, abs=3e-4)
    assert weighted_norm(s, 2, 1, grid=g) == pytest.approx(1.0327955589886444, abs=1e-8)


def test_energy_norm_rod_closed_forms() -> None:
    g = make_grid("fixed_free_odd", 128)
    rod, w = rod_state(g, 1.0)
    zero = VectorField(g, np.zeros_like(w.values), Symmetry.ODD)
    # gamma alone: ||gamma||_{1,1}^2 = int (1-s^2) = 4/3
    assert energy_norm(rod, zero, 0) == pytest.approx(1.1547005383792515, rel=1e-3)
    # m=1 with omega=1 adds 2/3 (w at j=0) and 4/3 (w' at j=1): total 10/3
    assert energy_norm(rod, w, 1) == pytest.approx(1.8257418583505538, rel=1e-3)


def test_weighted_sup_matches_closed_form() -> None:
    g = make_grid("fixed_free_odd", 64)
    s = g.nodes
    # sup (1-s^2)^{1/2} |s| at 1/sqrt(2)
    assert weighted_sup(s, 1, 0, grid=g) == pytest.approx(0.5, abs=1e-3)


def test_log_weight_fixture_bounded_norm_unbounded_sup() -> None:
    # f = ln(1-s^2) (clamped to 0 at the ends): the j=1 weighted norm converges
    # while the unweighted sup grows without bound under refinement
    norms, sups = [], []
    for n in (64, 256, 512):
        g = make_grid("fixed_free_odd", n)
        s = g.nodes
        f = np.zeros_like(s)
        f[1:-1] = np.log(1.0 - s[1:-1] ** 2)
        norms.append(weighted_norm(f, 1, 0, grid=g))
        sups.append(weighted_sup(f, 0, 0, grid=g))
    assert norms[-1] == pytest.approx(0.5575959594133924, abs=2e-3)
    assert abs(norms[-1] - norms[0]) < 0.01
    assert sups[-1] > sups[0] + 1.0  # 4.85 vs 2.79: diverges like ln(n)


@pytest.mark.parametrize("j,k", [(1, 0), (1, 1), (2, 1), (2, 2)])
@pytest.mark.parametrize("n", [64, 128, 256])
def test_weight_ladder_ratio_bounded(n: int, j: int, k: int) -> None:
    # ||f||^2_{j-1,k} <= 2 (||f||^2_{j,k} + ||f||^2_{j+1,k+1}), grid-independent
    g = make_grid("fixed_free_odd", n)
    s = g.nodes
    for f in (s, s**3, np.sin(np.pi * s), s * np.cos(2 * s)):
        lhs = weighted_norm(f, j - 1, k, grid=g) ** 2
        rhs = weighted_norm(f, j, k, grid=g) ** 2 + weighted_norm(f, j + 1, k + 1, grid=g) ** 2
        assert lhs <= 2.0 * rhs


def test_weight_ladder_ratio_stable_under_refinement() -> None:
    vals = []
    for n in (128, 256):
        g = make_grid("fixed_free_odd", n)
        f = np.sin(np.pi * g.nodes)
        lhs = weighted_norm(f, 0, 0, grid=g) ** 2
        rhs = weighted_norm(f, 1, 0, grid=g) ** 2 + weighted_norm(f, 2, 1, grid=g) ** 2
        vals.append(lhs / rhs)
    assert vals[0] == pytest.approx(vals[1], rel=1e-2)


# ---------------------------------------------------------------------------
# oddness helpers
# ---------------------------------------------------------------------------


def test_enforce_odd_idempotent_and_exact() -> None:
    g = make_grid("fixed_free_odd", 32)
    rng = np.random.default_rng(3)
    raw = rng.standard_normal((g.num_nodes, 2))
    w = enforce_odd(VectorField(g, raw, Symmetry.ODD))
    assert odd_violation(w) == 0.0
    again = enforce_odd(w)
    assert np.array_equal(again.values, w.values)


def test_cumulative_from_center_odd_for_even_integrand() -> None:
    g = make_grid("fixed_free_odd", 64)
    F = cumulative_from_center(g.nodes**2, g)
    assert np.max(np.abs(F + F[::-1])) == 0.0
    interior = slice(2, -2)
    assert np.max(np.abs(derivative(F, g, 1)[interior] - g.nodes[interior] ** 2)) < 1e-3


# ---------------------------------------------------------------------------
# angular chart
# ---------------------------------------------------------------------------


def test_velocity_angle_round_trip_exact() -> None:
    g = make_grid("fixed_free_odd", 64)
    rng = np.random.default_rng(12)
    theta = 2.0 * np.cos(np.pi * g.nodes) + 0.3 * rng.standard_normal(g.num_nodes)
    psi = 0.2 * np.sin(np.pi * g.nodes) ** 2
    v = angular_to_velocity(AngularField(g, theta, psi))
    back = velocity_to_angular(v, g, branch_at_zero=theta[g.center_index])
    assert np.max(np.abs(back.theta - theta)) < 1e-10
    assert np.max(np.abs(back.psi - psi)) < 1e-12


def test_branch_choice_shifts_by_full_turns() -> None:
    g = make_grid("fixed_free_odd", 32)
    theta = 0.5 * np.cos(np.pi * g.nodes)
    v = angular_to_velocity(AngularField(g, theta, np.zeros_like(theta)))
    shifted = velocity_to_angular(v, g, branch_at_zero=theta[g.center_index] + 2 * np.pi)
    assert np.max(np.abs(shifted.theta - theta - 2 * np.pi)) < 1e-10


def test_degenerate_velocity_rejected() -> None:
    g = make_grid("fixed_free_odd", 16)
    v = VectorField(g, np.zeros((g.num_nodes, 2)), Symmetry.NONE)
    with pytest.raises(DegenerateImmersion):
        velocity_to_angular(v, g)


def test_clothoid_chart_round_trip() -> None:
    # quarter-turn spiral theta = (pi/2) s^2; curve nodes follow the Fresnel
    # integrals, and theta -> curve -> theta returns at second order
    from scipy.special import fresnel

    for n in (64, 256):
        g = make_grid("fixed_free_odd", n)
        theta = 0.5 * np.pi * g.nodes**2
        crv = theta_to_curve(theta, g)
        ssig, csig = fresnel(g.nodes)
        ref = np.stack([csig, ssig], axis=1)
        assert np.max(np.abs(crv.points - ref)) < 2.0 / n**2
        back = curve_to_theta(crv)
        assert np.max(np.abs(back.theta - theta)) < 5.0 / n**2
        comp = check_compatibility(crv, VectorField(g, np.zeros_like(crv.points), Symmetry.ODD))
        assert comp["unit_speed_err"] < 10.0 / n**2


@pytest.mark.parametrize("n", [64, 128, 256])
def test_exp_log_chart_round_trip_on_curve(n: int) -> None:
    # differentiating and re-integrating are second-order inverses of each
    # other, so the curve-level round trip shrinks like n^-2
    g = make_grid("fixed_free_odd", n)
    theta = 0.8 * np.cos(np.pi * g.nodes)
    af = AngularField(g, theta, np.zeros_like(theta))
    crv = exp_chart(af)
    back = log_chart(crv)
    crv2 = exp_chart(back)
    assert np.max(np.abs(crv2.points - crv.points)) < 3.0 / n**2
    assert np.max(np.abs(back.theta - theta)) < 9.0 / n**2


def test_theta_to_curve_rejects_stretching() -> None:
    g = make_grid("fixed_free_odd", 16)
    af = AngularField(g, np.zeros(g.num_nodes), 0.1 * np.ones(g.num_nodes))
    with pytest.raises(ValueError):
        theta_to_curve(af)


# ---------------------------------------------------------------------------
# compatibility checks and tangency projection
# ---------------------------------------------------------------------------


def test_rod_state_compatibility_exact() -> None:
    g = make_grid("fixed_free_odd", 64)
    rod, w = rod_state(g, 0.9)
    rep = check_compatibility(rod, w)
    assert rep["unit_speed_err"] < 1e-13
    assert rep["tangency_err"] < 1e-13
    assert rep["oddness_err"] == 0.0


def test_tangency_project_removes_residual() -> None:
    g = make_grid("fixed_free_odd", 64)
    rng = np.random.default_rng(4)
    rod, _ = rod_state(g, 1.0)
    t = derivative(rod.points, g, 1)
    vals = tangency_project(rng.standard_normal((g.num_nodes, 2)), t, g)
    resid = np.abs(d1_matrix(g) @ vals[:, 0] * t[:, 0] + d1_matrix(g) @ vals[:, 1] * t[:, 1])
    assert np.max(resid) < 1e-12
