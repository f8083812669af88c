"""Second fundamental form and sectional curvature of the arc space.

The constrained acceleration of the wave system is ``d/ds(sigma_uv eta')``
with a scalar weight obtained from the Green operator, so curvature of the
curve space reduces to double quadrature against the nodal Green matrix.
Both boundary types are covered: fixed-free grids carry the half-interval
weighted bound, periodic grids the circle-space bound.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import FlatCurve, ParallelSection
from .grid_curves import (
    BoundaryKind,
    Curve,
    Symmetry,
    VectorField,
    derivative,
    integrate,
)
from .tension import (
    GreenMatrix,
    curvature_potential,
    green_matrix,
    half_interval_rho,
)

__all__ = [
    "SectionReport",
    "second_fundamental_sigma",
    "sectional_curvature",
    "curvature_unboundedness_probe",
    "periodic_curvature_bound",
]

_FLAT_TOL = 1e-8
_PARALLEL_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class SectionReport:
    """Curvature of one two-dimensional section of the curve space.

    ``K = numerator / denominator``; ``lower_bound`` is the a-priori
    positive floor for the curve (grid-kind dependent) and ``rho`` the
    weighted bending energy that enters it.
    """

    K: float
    numerator: float
    denominator: float
    lower_bound: float
    rho: float


def _derivative_products(
    grid, u: VectorField, v: VectorField
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    du = derivative(u.values, grid, 1)
    dv = derivative(v.values, grid, 1)
    a = np.sum(du * du, axis=1)
    b = np.sum(dv * dv, axis=1)
    c = np.sum(du * dv, axis=1)
    return a, b, c


def second_fundamental_sigma(
    gamma: Curve, u: VectorField, v: VectorField, gm: GreenMatrix | None = None
) -> np.ndarray:
    """Nodal scalar weight of the constrained acceleration for the pair (u, v).

    Applies the Green operator to the pointwise product <u', v'>; the
    result is symmetric in (u, v) by construction and reproduces
    omega^2 (1 - s^2)/2 for uniformly rotating fields on the straight
    segment.
    """
    if gm is None:
        gm = green_matrix(gamma)
    _, _, c = _derivative_products(gamma.grid, u, v)
    return gm.apply(c)


def _lower_bound(gamma: Curve) -> tuple[float, float]:
    grid = gamma.grid
    q = curvature_potential(gamma)
    if grid.kind is BoundaryKind.FIXED_FREE_ODD:
        rho = half_interval_rho(q, grid)
        return math.exp(-rho) / (1.0 + rho), rho
    rho = float(integrate(q, grid))
    if rho <= 0.0:
        raise FlatCurve("periodic curvature bound needs nonzero curvature")
    return 4.0 * math.pi**2 * math.exp(-rho / 2.0) / rho, rho


def sectional_curvature(
    gamma: Curve, u: VectorField, v: VectorField, gm: GreenMatrix | None = None
) -> SectionReport:
    """Curvature of the section spanned by tangent fields u and v.

    Numerator: double quadrature of the Green-weighted antisymmetrized
    derivative products (nonnegative integrand, so K > 0).  Denominator:
    Gram determinant of the plain inner products.  The reported floor is
    exp(-rho)/(1 + rho) on fixed-free grids with the half-interval
    weighted bending energy rho, and 4 pi^2 exp(-rho/2)/rho on periodic
    grids with rho the full bending energy; the sharper derivation of the
    fixed-free floor carries an extra factor lambda_1^2/4 that equals 1,
    so both published forms coincide and one number serves.
    """
    grid = gamma.grid
    if gm is None:
        gm = green_matrix(gamma)
    a, b, c = _derivative_products(grid, u, v)
    m = np.outer(a, b)
    m = m + m.T - 2.0 * np.outer(c, c)
    w = gm.weights
    numerator = float(0.5 * w @ (gm.entries * m) @ w)
    uu = float(integrate(np.sum(u.values * u.values, axis=1), grid))
    vv = float(integrate(np.sum(v.values * v.values, axis=1), grid))
    uv = float(integrate(np.sum(u.values * v.values, axis=1), grid))
    denominator = uu * vv - uv * uv
    if denominator <= _PARALLEL_TOL:
        raise ParallelSection(
            f"section Gram determinant {denominator:.3e} is degenerate"
        )
    lower, rho = _lower_bound(gamma)
    return SectionReport(
        K=numerator / denominator,
        numerator=numerator,
        denominator=denominator,
        lower_bound=lower,
        rho=rho,
    )


def curvature_unboundedness_probe(gamma: Curve, n_max: int = 6) -> list[dict]:
    """Curvatures K(u_1, u_n) of the odd-polynomial sections on a segment.

    The fields are (0, P_{2n-1}) with Legendre polynomials P, exactly
    tangent along the straight segment; the returned table grows like
    (3/2)(2n+1)(n-1), so the sequence certifies that curvature has no
    upper bound.  Rows are dicts with keys ``n`` and ``K`` for n = 2..n_max.
    """
    grid = gamma.grid
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("the probe runs on fixed-free grids")
    if not 2 <= n_max <= 8:
        raise ValueError(f"n_max must be in 2..8, got {n_max}")
    if float(np.max(np.abs(derivative(gamma.points, grid, 2)))) > _FLAT_TOL:
        raise ValueError("the probe expects a straight segment")
    gm = green_matrix(gamma)
    s = grid.nodes
    z = np.zeros_like(s)

    def mode_field(k: int) -> VectorField:
        vals = np.stack([z, np.polynomial.legendre.Legendre.basis(k)(s)], axis=1)
        return VectorField(grid, vals, Symmetry.ODD)

    u1 = mode_field(1)
    rows = []
    for n in range(2, n_max + 1):
        report = sectional_curvature(gamma, u1, mode_field(2 * n - 1), gm)
        rows.append({"n": n, "K": report.K})
    return rows


def periodic_curvature_bound(gamma: Curve) -> float:
    """Positive floor 4 pi^2 exp(-rho/2)/rho for all sections at a loop.

    rho is the loop's full bending energy; a flat loop (synthesized data,
    impossible for an actual closed curve) raises FlatCurve.
    """
    grid = gamma.grid
    if grid.kind is not BoundaryKind.PERIODIC:
        raise ValueError("periodic_curvature_bound needs a periodic grid")
    q = curvature_potential(gamma)
    if float(np.max(np.abs(q))) < _FLAT_TOL**2:
        raise FlatCurve("flat data has no periodic curvature bound")
    bound, _ = _lower_bound(gamma)
    return bound
