"""Sectional curvature, the second fundamental form weight, and their bounds."""

from __future__ import annotations

import math

import numpy as np
import pytest

from whipgeo import (
    BoundaryKind,
    Curve,
    FlatCurve,
    ParallelSection,
    Symmetry,
    VectorField,
    chart_tangent_field,
    circle_curve,
    conjugate_time,
    curvature_potential,
    curvature_unboundedness_probe,
    d1_matrix,
    exact_tangent_field,
    green_matrix,
    half_interval_rho,
    integrate,
    make_grid,
    periodic_curvature_bound,
    perturbed_circle,
    polish_unit_speed,
    random_smooth_curve,
    second_fundamental_sigma,
    sectional_curvature,
    straight_rod,
    tangency_project,
)


def _legendre_field(grid, k: int) -> VectorField:
    s = grid.nodes
    vals = np.stack(
        [np.zeros_like(s), np.polynomial.legendre.Legendre.basis(k)(s)], axis=1
    )
    return VectorField(grid, vals, Symmetry.ODD)


def _rod_section_K(n: int) -> float:
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, n)
    rod = straight_rod(grid)
    return sectional_curvature(rod, _legendre_field(grid, 1), _legendre_field(grid, 3)).K


def _random_periodic_fields(rng, curve, count: int) -> list[VectorField]:
    grid = curve.grid
    t = d1_matrix(grid) @ curve.points
    s = grid.nodes
    out = []
    for _ in range(count):
        raw = np.zeros((grid.num_nodes, 2))
        for k in range(1, 5):
            amp = rng.standard_normal(4) / (1.0 + k) ** 2
            raw[:, 0] += amp[0] * np.cos(2 * np.pi * k * s) + amp[1] * np.sin(
                2 * np.pi * k * s
            )
            raw[:, 1] += amp[2] * np.cos(2 * np.pi * k * s) + amp[3] * np.sin(
                2 * np.pi * k * s
            )
        out.append(
            VectorField(grid, tangency_project(raw, t, grid), Symmetry.PERIODIC)
        )
    return out


# ---------------------------------------------------------------------------
# second fundamental form weight
# ---------------------------------------------------------------------------


def test_sigma_uu_rod_closed_form():
    # uniformly rotating field on the segment: sigma = omega^2 (1 - s^2)/2
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 256)
    rod = straight_rod(grid)
    s = grid.nodes
    omega = 1.3
    u = VectorField(grid, np.stack([np.zeros_like(s), omega * s], axis=1), Symmetry.ODD)
    sig = second_fundamental_sigma(rod, u, u)
    exact = omega**2 * (1.0 - s * s) / 2.0
    assert np.max(np.abs(sig - exact)) < 1e-12
    assert sig[0] == 0.0 and sig[-1] == 0.0


def test_sigma_zero_field():
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 64)
    rod = straight_rod(grid)
    z = VectorField(grid, np.zeros((grid.num_nodes, 2)))
    assert np.all(second_fundamental_sigma(rod, z, z) == 0.0)


def test_sigma_symmetric_in_arguments():
    rng = np.random.default_rng(11)
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 96)
    gamma = polish_unit_speed(random_smooth_curve(rng, grid, 4, 0.6))
    u = chart_tangent_field(rng, gamma, 4, 0.8)
    v = chart_tangent_field(rng, gamma, 4, 0.8)
    assert np.array_equal(
        second_fundamental_sigma(gamma, u, v), second_fundamental_sigma(gamma, v, u)
    )


def test_sigma_accepts_precomputed_green():
    rng = np.random.default_rng(12)
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 64)
    gamma = polish_unit_speed(random_smooth_curve(rng, grid, 3, 0.5))
    u = chart_tangent_field(rng, gamma, 3, 0.7)
    gm = green_matrix(gamma)
    assert np.array_equal(
        second_fundamental_sigma(gamma, u, u, gm), second_fundamental_sigma(gamma, u, u)
    )


# ---------------------------------------------------------------------------
# sectional curvature on the segment
# ---------------------------------------------------------------------------


def test_rod_section_value_and_extrapolation():
    # K for the ((0,P1),(0,P3)) section on the segment is exactly 15/2;
    # the discrete value converges at second order and its Richardson
    # extrapolant lands within 1e-6.
    k256 = _rod_section_K(256)
    assert abs(k256 - 7.5) < 6e-3
    k512 = _rod_section_K(512)
    k1024 = _rod_section_K(1024)
    assert abs((4.0 * k1024 - k512) / 3.0 - 7.5) < 1e-6
    # clean second-order error
    assert 3.5 < (7.5 - k512) / (7.5 - k1024) < 4.5


def test_rod_section_report_fields():
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 128)
    rod = straight_rod(grid)
    rep = sectional_curvature(rod, _legendre_field(grid, 1), _legendre_field(grid, 3))
    assert rep.K == rep.numerator / rep.denominator
    # straight segment: rho = 0, floor = 1
    assert rep.rho == 0.0
    assert rep.lower_bound == 1.0
    assert rep.K > rep.lower_bound
    # Gram determinant of orthogonal Legendre modes: (2/3)(2/7)
    assert abs(rep.denominator - 4.0 / 21.0) < 5e-4


def test_parallel_section_raises():
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 64)
    rod = straight_rod(grid)
    u = _legendre_field(grid, 3)
    v = VectorField(grid, 2.0 * u.values, Symmetry.ODD)
    with pytest.raises(ParallelSection):
        sectional_curvature(rod, u, v)


@pytest.mark.parametrize("seed", [3, 17, 29])
def test_basis_invariance(seed):
    rng = np.random.default_rng(seed)
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 96)
    gamma = polish_unit_speed(random_smooth_curve(rng, grid, 4, 0.6))
    u = chart_tangent_field(rng, gamma, 4, 0.8)
    v = chart_tangent_field(rng, gamma, 4, 0.8)
    base = sectional_curvature(gamma, u, v).K
    for _ in range(3):
        a, b, c, d = rng.standard_normal(4)
        if abs(a * d - b * c) < 0.2:
            continue
        u2 = VectorField(grid, a * u.values + b * v.values)
        v2 = VectorField(grid, c * u.values + d * v.values)
        assert abs(sectional_curvature(gamma, u2, v2).K - base) < 1e-6 * abs(base)


@pytest.mark.parametrize("seed", [5, 23, 41, 57, 73])
def test_positivity_and_lower_bound(seed):
    # random sections on a random curve: positive curvature above the floor
    rng = np.random.default_rng(seed)
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 128)
    gamma = polish_unit_speed(random_smooth_curve(rng, grid, 4, 0.7))
    q = curvature_potential(gamma)
    rho = half_interval_rho(q, grid)
    floor = math.exp(-rho) / (1.0 + rho)
    gm = green_matrix(gamma)
    for _ in range(6):
        u = chart_tangent_field(rng, gamma, 4, 0.8)
        v = chart_tangent_field(rng, gamma, 4, 0.8)
        rep = sectional_curvature(gamma, u, v, gm)
        assert rep.rho == rho
        assert rep.lower_bound == floor
        assert rep.K > 0.0
        assert rep.K >= rep.lower_bound - 1e-8
        assert rep.denominator > 1e-10


def test_numerator_integrand_nonnegative():
    # symmetrized M(s,x) >= 0 pairwise; checked directly from derivatives
    rng = np.random.default_rng(31)
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 128)
    gamma = polish_unit_speed(random_smooth_curve(rng, grid, 4, 0.7))
    for _ in range(5):
        u = chart_tangent_field(rng, gamma, 4, 0.8)
        v = chart_tangent_field(rng, gamma, 4, 0.8)
        du = d1_matrix(grid) @ u.values
        dv = d1_matrix(grid) @ v.values
        a = np.sum(du * du, axis=1)
        b = np.sum(dv * dv, axis=1)
        c = np.sum(du * dv, axis=1)
        m = np.outer(a, b) + np.outer(b, a) - 2.0 * np.outer(c, c)
        assert np.min(m) >= -1e-12


def test_chart_fields_vs_exact_tangent_projection():
    # running the chart fields through the strict tangent projection moves
    # K by the chart's O(h^2) tangency defect at most
    rng = np.random.default_rng(77)
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 128)
    gamma = polish_unit_speed(random_smooth_curve(rng, grid, 4, 0.7))
    u = chart_tangent_field(rng, gamma, 4, 0.8)
    v = chart_tangent_field(rng, gamma, 4, 0.8)
    k_chart = sectional_curvature(gamma, u, v).K
    k_proj = sectional_curvature(
        gamma, exact_tangent_field(gamma, u), exact_tangent_field(gamma, v)
    ).K
    assert abs(k_chart - k_proj) < 5e-3 * abs(k_chart)


# ---------------------------------------------------------------------------
# unboundedness probe
# ---------------------------------------------------------------------------


def test_probe_matches_exact_table():
    # K(u1, un) = (3/2)(2n+1)(n-1) exactly in the continuum
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 256)
    rows = curvature_unboundedness_probe(straight_rod(grid), 8)
    assert [r["n"] for r in rows] == list(range(2, 9))
    for r in rows:
        exact = 1.5 * (2 * r["n"] + 1) * (r["n"] - 1)
        assert abs(r["K"] - exact) < 7e-2 * exact


def test_probe_monotone_increasing():
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 128)
    rows = curvature_unboundedness_probe(straight_rod(grid), 6)
    ks = [r["K"] for r in rows]
    assert all(b > a for a, b in zip(ks, ks[1:]))
    # every value sits above the flat-segment floor exp(0)/(1+0) = 1
    assert min(ks) > 1.0


def test_probe_extrapolates_to_exact_values():
    r256 = curvature_unboundedness_probe(
        straight_rod(make_grid(BoundaryKind.FIXED_FREE_ODD, 256)), 8
    )
    r512 = curvature_unboundedness_probe(
        straight_rod(make_grid(BoundaryKind.FIXED_FREE_ODD, 512)), 8
    )
    for a, b in zip(r256, r512):
        exact = 1.5 * (2 * a["n"] + 1) * (a["n"] - 1)
        extrap = (4.0 * b["K"] - a["K"]) / 3.0
        assert abs(extrap - exact) < 2e-3 * exact


def test_probe_frequency_identity():
    # K(u1, un) * ||u1||^2 equals the squared oscillation rate whose first
    # zero is the conjugate time: K * (2/3) * t_conj(1, n)^2 = pi^2
    r256 = curvature_unboundedness_probe(
        straight_rod(make_grid(BoundaryKind.FIXED_FREE_ODD, 256)), 6
    )
    r512 = curvature_unboundedness_probe(
        straight_rod(make_grid(BoundaryKind.FIXED_FREE_ODD, 512)), 6
    )
    for a, b in zip(r256, r512):
        k = (4.0 * b["K"] - a["K"]) / 3.0
        t = conjugate_time(1.0, a["n"])
        assert abs(k * (2.0 / 3.0) * t * t - math.pi**2) < 1e-2


def test_probe_validation():
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 64)
    rod = straight_rod(grid)
    with pytest.raises(ValueError, match="2..8"):
        curvature_unboundedness_probe(rod, 9)
    with pytest.raises(ValueError, match="2..8"):
        curvature_unboundedness_probe(rod, 1)
    rng = np.random.default_rng(1)
    bent = polish_unit_speed(random_smooth_curve(rng, grid, 3, 0.6))
    with pytest.raises(ValueError, match="straight"):
        curvature_unboundedness_probe(bent, 4)
    with pytest.raises(ValueError, match="fixed-free"):
        curvature_unboundedness_probe(circle_curve(make_grid(BoundaryKind.PERIODIC, 64)), 4)


# ---------------------------------------------------------------------------
# periodic bound
# ---------------------------------------------------------------------------


def test_circle_bound_value():
    # unit-length loop: rho = 4 pi^2, bound = e^{-2 pi^2}
    grid = make_grid(BoundaryKind.PERIODIC, 128)
    bound = periodic_curvature_bound(circle_curve(grid))
    assert abs(bound - math.exp(-2.0 * math.pi**2)) < 2e-2 * math.exp(
        -2.0 * math.pi**2
    )


def test_periodic_sections_respect_bound():
    rng = np.random.default_rng(47)
    grid = make_grid(BoundaryKind.PERIODIC, 128)
    curves = [
        circle_curve(grid),
        perturbed_circle(np.random.default_rng(5), grid, 3, 0.25),
        perturbed_circle(np.random.default_rng(9), grid, 3, 0.35),
    ]
    for curve in curves:
        bound = periodic_curvature_bound(curve)
        gm = green_matrix(curve)
        fields = _random_periodic_fields(rng, curve, 4)
        rho = float(integrate(curvature_potential(curve), curve.grid))
        for i in range(len(fields)):
            for j in range(i + 1, len(fields)):
                rep = sectional_curvature(curve, fields[i], fields[j], gm)
                assert rep.K > 0.0
                assert rep.K >= bound - 1e-8
                assert rep.lower_bound == bound
                assert rep.rho == rho


def test_periodic_flat_raises():
    grid = make_grid(BoundaryKind.PERIODIC, 64)
    flat = Curve(grid, np.zeros((grid.num_nodes, 2)))
    with pytest.raises(FlatCurve):
        periodic_curvature_bound(flat)


def test_periodic_bound_grid_kind_validation():
    grid = make_grid(BoundaryKind.FIXED_FREE_ODD, 64)
    with pytest.raises(ValueError, match="periodic"):
        periodic_curvature_bound(straight_rod(grid))
