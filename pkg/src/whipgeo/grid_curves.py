"""Grids, curves, tangent fields, charts, and weighted norms.

Everything downstream works on one of two uniform grids:

* fixed-free: nodes ``s_i = -1 + 2 i / n`` for ``i = 0..n`` with ``n`` even,
  so ``s = 0`` is a node.  Curves on this grid are odd, ``eta(-s) = -eta(s)``,
  which is how the fixed end at the origin and the two free tips are encoded.
* periodic: nodes ``s_i = i / n`` for ``i = 0..n-1`` on a circle of length 1.

Derivatives are second-order finite differences (centered in the interior,
one-sided at fixed-free endpoints, wraparound on the circle) and integrals are
trapezoid sums with nodal values.  Weight functions ``(1 - s^2)^j`` vanish at
the fixed-free endpoints, which is what makes the one-sided stencils there
harmless for the weighted norms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateImmersion, OddNodeCount

__all__ = [
    "BoundaryKind",
    "Symmetry",
    "Grid",
    "Curve",
    "VectorField",
    "AngularField",
    "make_grid",
    "derivative",
    "d1_matrix",
    "tangency_project",
    "quadrature_weights",
    "integrate",
    "cumulative_from_center",
    "perp",
    "signed_curvature",
    "enforce_odd",
    "odd_violation",
    "weighted_norm",
    "weighted_sup",
    "energy_norm",
    "theta_to_curve",
    "curve_to_theta",
    "log_chart",
    "exp_chart",
    "angular_to_velocity",
    "velocity_to_angular",
    "check_compatibility",
]

_DEGENERATE_SPEED = 1e-8


class BoundaryKind(enum.Enum):
    FIXED_FREE_ODD = "fixed_free_odd"
    PERIODIC = "periodic"


class Symmetry(enum.Enum):
    ODD = "odd"
    PERIODIC = "periodic"
    NONE = "none"


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-1, 1] (fixed-free) or on the unit circle (periodic)."""

    n: int
    kind: BoundaryKind

    def __post_init__(self) -> None:
        if self.kind is BoundaryKind.FIXED_FREE_ODD:
            if self.n % 2 != 0:
                raise OddNodeCount(
                    f"fixed-free grid needs an even interval count, got n={self.n}"
                )
            if self.n < 8:
                raise ValueError(f"fixed-free grid needs n >= 8, got n={self.n}")
        else:
            if self.n < 8:
                raise ValueError(f"periodic grid needs n >= 8, got n={self.n}")

    @property
    def spacing(self) -> float:
        if self.kind is BoundaryKind.FIXED_FREE_ODD:
            return 2.0 / self.n
        return 1.0 / self.n

    @property
    def num_nodes(self) -> int:
        # periodic grids store one value per circle node, no duplicate seam
        if self.kind is BoundaryKind.FIXED_FREE_ODD:
            return self.n + 1
        return self.n

    @property
    def nodes(self) -> np.ndarray:
        if self.kind is BoundaryKind.FIXED_FREE_ODD:
            return np.linspace(-1.0, 1.0, self.n + 1)
        return np.arange(self.n) / self.n

    @property
    def center_index(self) -> int:
        if self.kind is not BoundaryKind.FIXED_FREE_ODD:
            raise ValueError("center index only defined on fixed-free grids")
        return self.n // 2

    def check_values(self, values: np.ndarray, components: int | None = None) -> None:
        if values.shape[0] != self.num_nodes:
            raise ValueError(
                f"expected {self.num_nodes} nodal values, got {values.shape[0]}"
            )
        if components is not None:
            if values.ndim != 2 or values.shape[1] != components:
                raise ValueError(f"expected shape (m, {components}), got {values.shape}")


def make_grid(kind: BoundaryKind | str, n: int) -> Grid:
    """Build a grid, accepting either the enum or its string value."""
    if isinstance(kind, str):
        kind = BoundaryKind(kind)
    return Grid(n=int(n), kind=kind)


def _frozen_array(x) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Curve:
    """Planar curve sampled at grid nodes; value data is immutable."""

    grid: Grid
    points: np.ndarray
    symmetry: Symmetry = Symmetry.NONE

    def __post_init__(self) -> None:
        arr = _frozen_array(self.points)
        self.grid.check_values(arr, components=2)
        object.__setattr__(self, "points", arr)

    def velocity(self) -> np.ndarray:
        return derivative(self.points, self.grid, 1)


@dataclass(frozen=True)
class VectorField:
    """Tangent-space element along a curve: one R^2 value per node."""

    grid: Grid
    values: np.ndarray
    symmetry: Symmetry = Symmetry.NONE

    def __post_init__(self) -> None:
        arr = _frozen_array(self.values)
        self.grid.check_values(arr, components=2)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class AngularField:
    """Log-chart data: direction angle theta and log-speed psi per node.

    Unit-speed curves have ``psi == 0`` identically; theta is stored
    continuously unwrapped, not wrapped to a principal branch.
    """

    grid: Grid
    theta: np.ndarray
    psi: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        th = _frozen_array(self.theta)
        self.grid.check_values(th)
        ps = self.psi
        if ps is None:
            ps = np.zeros_like(th)
        ps = _frozen_array(ps)
        self.grid.check_values(ps)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "psi", ps)


# ---------------------------------------------------------------------------
# finite differences and quadrature
# ---------------------------------------------------------------------------


def _d1_fixed(values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    return out


def _d2_fixed(values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / (h * h)
    out[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / (h * h)
    out[-1] = (
        2.0 * values[-1] - 5.0 * values[-2] + 4.0 * values[-3] - values[-4]
    ) / (h * h)
    return out


def _d1_periodic(values: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2.0 * h)


def _d2_periodic(values: np.ndarray, h: float) -> np.ndarray:
    return (
        np.roll(values, -1, axis=0) - 2.0 * values + np.roll(values, 1, axis=0)
    ) / (h * h)


def derivative(values: np.ndarray, grid: Grid, order: int) -> np.ndarray:
    """Second-order finite-difference derivative of nodal data.

    Orders 1 and 2 use the classic compact stencils; orders 3 and 4 are the
    compositions d1(d2(.)) and d2(d2(.)).  Works on scalar data of shape (m,)
    and vector data of shape (m, 2) alike.
    """
    if order < 0 or order > 4:
        raise ValueError(f"derivative order must be in 0..4, got {order}")
    values = np.asarray(values, dtype=float)
    grid.check_values(values)
    if order == 0:
        return values.copy()
    h = grid.spacing
    if grid.kind is BoundaryKind.FIXED_FREE_ODD:
        d1, d2 = _d1_fixed, _d2_fixed
    else:
        d1, d2 = _d1_periodic, _d2_periodic
    if order == 1:
        return d1(values, h)
    if order == 2:
        return d2(values, h)
    if order == 3:
        return d1(d2(values, h), h)
    return d2(d2(values, h), h)


def d1_matrix(grid: Grid) -> np.ndarray:
    """Dense matrix of the first-derivative stencil used by :func:`derivative`.

    Handy for assembling linear constraints on nodal data; for applying the
    derivative itself prefer :func:`derivative`.
    """
    m = grid.num_nodes
    h = grid.spacing
    M = np.zeros((m, m))
    if grid.kind is BoundaryKind.PERIODIC:
        for i in range(m):
            M[i, (i + 1) % m] = 1.0 / (2 * h)
            M[i, (i - 1) % m] = -1.0 / (2 * h)
        return M
    for i in range(1, m - 1):
        M[i, i - 1] = -1.0 / (2 * h)
        M[i, i + 1] = 1.0 / (2 * h)
    M[0, 0], M[0, 1], M[0, 2] = -3.0 / (2 * h), 4.0 / (2 * h), -1.0 / (2 * h)
    M[-1, -1], M[-1, -2], M[-1, -3] = 3.0 / (2 * h), -4.0 / (2 * h), 1.0 / (2 * h)
    return M


def tangency_project(values: np.ndarray, tangents: np.ndarray, grid: Grid) -> np.ndarray:
    """Least-norm correction of nodal vectors onto <d1 out, tangent> = 0.

    The constraint rows are linear in the nodal values, so one minimum-norm
    least-squares solve removes the full residual; the correction has the
    size of the residual times h, vanishing when the input already satisfies
    the constraints.
    """
    m = grid.num_nodes
    D = d1_matrix(grid)
    A = np.zeros((m, 2 * m))
    A[:, 0::2] = D * tangents[:, 0:1]
    A[:, 1::2] = D * tangents[:, 1:2]
    vec = np.asarray(values, dtype=float).reshape(-1)
    corr, *_ = np.linalg.lstsq(A, A @ vec, rcond=None)
    return (vec - corr).reshape(m, 2)


def quadrature_weights(grid: Grid) -> np.ndarray:
    """Trapezoid weights on the grid nodes (plain h per node on the circle)."""
    h = grid.spacing
    if grid.kind is BoundaryKind.PERIODIC:
        return np.full(grid.num_nodes, h)
    w = np.full(grid.num_nodes, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    return w


def integrate(values: np.ndarray, grid: Grid):
    """Trapezoid integral of nodal data; vector data integrates per component."""
    values = np.asarray(values, dtype=float)
    grid.check_values(values)
    w = quadrature_weights(grid)
    return np.tensordot(w, values, axes=(0, 0))


def cumulative_from_center(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Antiderivative with F(0) = 0 by trapezoid sums outward from s = 0.

    Summation runs symmetrically from the center node in both directions, so
    even integrands produce bitwise-odd antiderivatives.
    """
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("cumulative_from_center needs a fixed-free grid")
    values = np.asarray(values, dtype=float)
    grid.check_values(values)
    h = grid.spacing
    c = grid.center_index
    mids = 0.5 * h * (values[:-1] + values[1:])
    out = np.zeros_like(values)
    out[c + 1 :] = np.cumsum(mids[c:], axis=0)
    out[:c] = -np.flip(np.cumsum(np.flip(mids[:c], axis=0), axis=0), axis=0)
    return out


def perp(values: np.ndarray) -> np.ndarray:
    """Rotate R^2 nodal values by +90 degrees: (x, y) -> (-y, x)."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    out[..., 0] = -values[..., 1]
    out[..., 1] = values[..., 0]
    return out


def signed_curvature(curve: Curve) -> np.ndarray:
    """cross(eta', eta'') / |eta'|^3 at the nodes."""
    v = derivative(curve.points, curve.grid, 1)
    a = derivative(curve.points, curve.grid, 2)
    speed = np.hypot(v[:, 0], v[:, 1])
    if np.min(speed) < _DEGENERATE_SPEED:
        raise DegenerateImmersion("curvature undefined where |eta'| ~ 0")
    return (v[:, 0] * a[:, 1] - v[:, 1] * a[:, 0]) / speed**3


# ---------------------------------------------------------------------------
# odd symmetry
# ---------------------------------------------------------------------------


def _odd_part(values: np.ndarray) -> np.ndarray:
    return 0.5 * (values - values[::-1])


def enforce_odd(obj):
    """Project onto odd data, f(s) -> (f(s) - f(-s)) / 2; idempotent.

    Accepts a Curve, VectorField, or a bare nodal array on a fixed-free grid
    and returns the same kind of object.
    """
    if isinstance(obj, Curve):
        _require_fixed_free(obj.grid)
        return Curve(obj.grid, _odd_part(obj.points), Symmetry.ODD)
    if isinstance(obj, VectorField):
        _require_fixed_free(obj.grid)
        return VectorField(obj.grid, _odd_part(obj.values), Symmetry.ODD)
    return _odd_part(np.asarray(obj, dtype=float))


def odd_violation(obj) -> float:
    """Sup norm of the even part, zero iff the data is exactly odd."""
    if isinstance(obj, Curve):
        values = obj.points
    elif isinstance(obj, VectorField):
        values = obj.values
    else:
        values = np.asarray(obj, dtype=float)
    return float(np.max(np.abs(0.5 * (values + values[::-1]))))


def _require_fixed_free(grid: Grid) -> None:
    if grid.kind is not BoundaryKind.FIXED_FREE_ODD:
        raise ValueError("operation requires the fixed-free grid")


# ---------------------------------------------------------------------------
# weighted norms
# ---------------------------------------------------------------------------


def _extract(f, grid: Grid | None):
    if isinstance(f, Curve):
        return f.points, f.grid
    if isinstance(f, VectorField):
        return f.values, f.grid
    if grid is None:
        raise ValueError("bare arrays need an explicit grid")
    values = np.asarray(f, dtype=float)
    grid.check_values(values)
    return values, grid


def _sq_magnitude(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        return values * values
    return np.sum(values * values, axis=1)


def weighted_norm(f, j: int, k: int, grid: Grid | None = None) -> float:
    """Discrete ( integral (1-s^2)^j |d^k f|^2 ds )^(1/2) on [-1, 1]."""
    values, grid = _extract(f, grid)
    _require_fixed_free(grid)
    if j < 0:
        raise ValueError("weight exponent j must be >= 0")
    d = derivative(values, grid, k)
    w = quadrature_weights(grid) * (1.0 - grid.nodes**2) ** j
    return float(math.sqrt(np.dot(w, _sq_magnitude(d))))


def weighted_sup(f, j: int, k: int, grid: Grid | None = None) -> float:
    """Discrete sup of (1-s^2)^(j/2) |d^k f| over the nodes."""
    values, grid = _extract(f, grid)
    _require_fixed_free(grid)
    if j < 0:
        raise ValueError("weight exponent j must be >= 0")
    d = derivative(values, grid, k)
    w = (1.0 - grid.nodes**2) ** (0.5 * j)
    return float(np.max(w * np.sqrt(_sq_magnitude(d))))


def energy_norm(gamma: Curve, w: VectorField, m: int) -> float:
    """Square root of the order-m energy sum.

    E_m stacks ``(1-s^2)^j |d^j w|^2`` and ``(1-s^2)^(j+1) |d^(j+1) gamma|^2``
    for j = 0..m; derivatives up to order m+1 cap m at 3.
    """
    if m < 0 or m > 3:
        raise ValueError(f"energy order must be in 0..3, got {m}")
    if gamma.grid != w.grid:
        raise ValueError("curve and field live on different grids")
    total = 0.0
    for j in range(m + 1):
        total += weighted_norm(w, j, j) ** 2
        total += weighted_norm(gamma, j + 1, j + 1) ** 2
    return float(math.sqrt(total))


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------


def _principal(x):
    """Wrap to [-pi, pi)."""
    return x - 2.0 * np.pi * np.floor((x + np.pi) / (2.0 * np.pi))


def _unwrap_from_center(raw: np.ndarray, c: int, branch_at_zero: float) -> np.ndarray:
    theta = np.empty_like(raw)
    theta[c] = branch_at_zero + _principal(raw[c] - branch_at_zero)
    steps = _principal(np.diff(raw))
    theta[c + 1 :] = theta[c] + np.cumsum(steps[c:])
    theta[:c] = theta[c] - np.flip(np.cumsum(np.flip(steps[:c])))
    return theta


def velocity_to_angular(
    velocity: np.ndarray | VectorField, grid: Grid, branch_at_zero: float = 0.0
) -> AngularField:
    """Node-wise complex log of a velocity sample: psi + i theta = ln eta'.

    theta is continuously unwrapped from the center node, seeded by the
    representative of the center direction nearest ``branch_at_zero``.
    Exact inverse of :func:`angular_to_velocity` up to round-off.
    """
    _require_fixed_free(grid)
    if isinstance(velocity, VectorField):
        if velocity.grid != grid:
            raise ValueError("velocity field lives on a different grid")
        velocity = velocity.values
    velocity = np.asarray(velocity, dtype=float)
    grid.check_values(velocity, components=2)
    speed = np.hypot(velocity[:, 0], velocity[:, 1])
    if np.min(speed) < _DEGENERATE_SPEED:
        raise DegenerateImmersion(
            f"|eta'| dropped below {_DEGENERATE_SPEED:g}; direction angle undefined"
        )
    raw = np.arctan2(velocity[:, 1], velocity[:, 0])
    theta = _unwrap_from_center(raw, grid.center_index, branch_at_zero)
    return AngularField(grid, theta, np.log(speed))


def angular_to_velocity(af: AngularField) -> np.ndarray:
    """Node-wise complex exp: eta' = e^psi (cos theta, sin theta)."""
    return np.exp(af.psi)[:, None] * np.stack(
        [np.cos(af.theta), np.sin(af.theta)], axis=1
    )


def log_chart(curve: Curve, branch_at_zero: float = 0.0) -> AngularField:
    """Angular/log-speed chart of an immersed curve via its fd velocity."""
    return velocity_to_angular(curve.velocity(), curve.grid, branch_at_zero)


def exp_chart(af: AngularField) -> Curve:
    """Curve with eta(0) = 0 integrated from chart data by trapezoid sums."""
    pts = cumulative_from_center(angular_to_velocity(af), af.grid)
    sym = Symmetry.ODD if odd_violation(pts) < 1e-12 else Symmetry.NONE
    return Curve(af.grid, pts, sym)


def theta_to_curve(theta, grid: Grid | None = None) -> Curve:
    """Unit-speed curve (integral of cos theta, integral of sin theta) from s = 0.

    ``theta`` may be an AngularField with psi identically zero or a bare nodal
    array (then ``grid`` is required).  Even theta gives a bitwise-odd curve.
    """
    if isinstance(theta, AngularField):
        if float(np.max(np.abs(theta.psi))) > 1e-12:
            raise ValueError("theta_to_curve expects psi == 0; use exp_chart")
        af = theta
    else:
        if grid is None:
            raise ValueError("bare theta arrays need an explicit grid")
        af = AngularField(grid, np.asarray(theta, dtype=float))
    return exp_chart(af)


def curve_to_theta(curve: Curve, branch_at_zero: float = 0.0) -> AngularField:
    """Unwrapped direction angle of a unit-speed curve (psi dropped to zero).

    The angle accumulates principal-value increments of consecutive fd
    directions outward from s = 0, so winding beyond one turn is kept.
    """
    af = log_chart(curve, branch_at_zero)
    return AngularField(af.grid, af.theta, np.zeros_like(af.theta))


# ---------------------------------------------------------------------------
# compatibility report
# ---------------------------------------------------------------------------


def check_compatibility(gamma: Curve, w: VectorField) -> dict:
    """Sup-norm residuals of the arc-space constraints for a state (gamma, w).

    Returns ``unit_speed_err`` (| |gamma'| - 1 |), ``tangency_err``
    (|<gamma', w'>|), and ``oddness_err`` (even-part residual on fixed-free
    grids; the stored-seam closure residual, identically ~0, on periodic ones).
    """
    if gamma.grid != w.grid:
        raise ValueError("curve and field live on different grids")
    gv = derivative(gamma.points, gamma.grid, 1)
    wv = derivative(w.values, w.grid, 1)
    speed = np.hypot(gv[:, 0], gv[:, 1])
    unit_speed_err = float(np.max(np.abs(speed - 1.0)))
    tangency_err = float(np.max(np.abs(np.sum(gv * wv, axis=1))))
    if gamma.grid.kind is BoundaryKind.FIXED_FREE_ODD:
        oddness_err = max(odd_violation(gamma.points), odd_violation(w.values))
    else:
        # one stored period wraps around by construction; report the
        # telescoped increment sum, which only round-off can perturb
        closure = np.sum(np.roll(gamma.points, -1, axis=0) - gamma.points, axis=0)
        oddness_err = float(np.max(np.abs(closure)))
    return {
        "unit_speed_err": unit_speed_err,
        "tangency_err": tangency_err,
        "oddness_err": oddness_err,
    }
