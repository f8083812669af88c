"""CSV and JSON export for curves, fields, runs, and reports.

Curves and fields round-trip through both formats: floats are printed
with 17 significant digits, so reloading reproduces the stored values
to the last bit.  Everything else is write-only, meant for external
inspection and plotting.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dynamics import GeodesicTrajectory, diagnostics
from .grid_curves import BoundaryKind, Curve, Grid, Symmetry, VectorField, make_grid
from .linearized import ModeRecord, conjugate_time
from .shape_metrics import MMGeodesicTrajectory
from .tension import GreenMatrix


def _fmt(value) -> str:
    return "%.17g" % float(value)


def _write_lines(path, lines) -> None:
    Path(path).write_text("".join(line + "\n" for line in lines))


def _csv_rows(path: str | Path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, data


def _grid_for_nodes(nodes: np.ndarray) -> Grid:
    if abs(nodes[-1] - 1.0) < 1e-12:
        return make_grid(BoundaryKind.FIXED_FREE_ODD, len(nodes) - 1)
    return make_grid(BoundaryKind.PERIODIC, len(nodes))


# ---------------------------------------------------------------------------
# curves and fields
# ---------------------------------------------------------------------------


def _values_to_csv(grid: Grid, values: np.ndarray, path) -> None:
    lines = ["s,x,y"]
    for s, (x, y) in zip(grid.nodes, values):
        lines.append(",".join([_fmt(s), _fmt(x), _fmt(y)]))
    _write_lines(path, lines)


def curve_to_csv(curve: Curve, path) -> None:
    _values_to_csv(curve.grid, curve.points, path)


def field_to_csv(field: VectorField, path) -> None:
    _values_to_csv(field.grid, field.values, path)


def curve_from_csv(path) -> Curve:
    header, data = _csv_rows(path)
    if header != ["s", "x", "y"]:
        raise ValueError(f"expected header s,x,y, got {','.join(header)}")
    return Curve(_grid_for_nodes(data[:, 0]), data[:, 1:3])


def field_from_csv(path) -> VectorField:
    header, data = _csv_rows(path)
    if header != ["s", "x", "y"]:
        raise ValueError(f"expected header s,x,y, got {','.join(header)}")
    return VectorField(_grid_for_nodes(data[:, 0]), data[:, 1:3])


def _values_to_json(grid: Grid, values: np.ndarray, symmetry, path) -> None:
    payload = {
        "grid": {"kind": grid.kind.value, "n": grid.n},
        "symmetry": symmetry.value if symmetry is not None else None,
        "x": [float(v) for v in values[:, 0]],
        "y": [float(v) for v in values[:, 1]],
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def _values_from_json(path):
    payload = json.loads(Path(path).read_text())
    grid = make_grid(payload["grid"]["kind"], payload["grid"]["n"])
    sym = Symmetry(payload["symmetry"]) if payload["symmetry"] is not None else None
    values = np.stack([np.array(payload["x"]), np.array(payload["y"])], axis=1)
    return grid, values, sym

def curve_to_json(curve: Curve, path) -> None:
    _values_to_json(curve.grid, curve.points, curve.symmetry, path)


def curve_from_json(path) -> Curve:
    grid, values, sym = _values_from_json(path)
    return Curve(grid, values, sym)


def field_to_json(field: VectorField, path) -> None:
    _values_to_json(field.grid, field.values, field.symmetry, path)


def field_from_json(path) -> VectorField:
    grid, values, sym = _values_from_json(path)
    return VectorField(grid, values, sym)


# ---------------------------------------------------------------------------
# runs and reports
# ---------------------------------------------------------------------------


def green_to_csv(green: GreenMatrix, path) -> None:
    """Dense nodal Green matrix, one CSV row per source node."""
    lines = [",".join(_fmt(v) for v in row) for row in green.entries]
    _write_lines(path, lines)


def trajectory_to_csv(trajectory: GeodesicTrajectory, path) -> None:
    """Long-format run table: one t,s,x,y,sigma row per node per stored step."""
    lines = ["t,s,x,y,sigma"]
    for state, tension in zip(trajectory.states, trajectory.tensions):
        nodes = state.eta.grid.nodes
        for s, (x, y), sig in zip(nodes, state.eta.points, tension.sigma):
            lines.append(
                ",".join([_fmt(state.time), _fmt(s), _fmt(x), _fmt(y), _fmt(sig)])
            )
    _write_lines(path, lines)


def diagnostics_to_csv(trajectory: GeodesicTrajectory, path) -> None:
    table = diagnostics(trajectory)
    lines = ["t,l2_speed,arc_err,odd_err,min_sigma"]
    for k in range(len(table["t"])):
        lines.append(
            ",".join(
                _fmt(table[col][k])
                for col in ("t", "l2_speed", "arc_err", "odd_err", "min_sigma")
            )
        )
    _write_lines(path, lines)


def mm_trajectory_to_csv(trajectory: MMGeodesicTrajectory, path) -> None:
    """Intrinsic-flow run table: t,s,x,y plus the kappa,a,b,omega columns."""
    lines = ["t,s,x,y,kappa,a,b,omega"]
    for state, curve in zip(trajectory.states, trajectory.curves):
        nodes = state.grid.nodes
        for i, s in enumerate(nodes):
            lines.append(
                ",".join(
                    [
                        _fmt(state.time),
                        _fmt(s),
                        _fmt(curve.points[i, 0]),
                        _fmt(curve.points[i, 1]),
                        _fmt(state.kappa[i]),
                        _fmt(state.a[i]),
                        _fmt(state.b[i]),
                        _fmt(state.omega[i]),
                    ]
                )
            )
    _write_lines(path, lines)


def conjugate_report(omega: float, modes: list[int], min_singular: float) -> dict:
    """Conjugate-point summary {omega, modes: [{n, alpha, t_conj}], min_singular}."""
    entries = []
    for n in sorted(modes):
        rec = ModeRecord.from_omega(omega, n)
        entries.append(
            {
                "n": n,
                "alpha": rec.alpha,
                "t_conj": conjugate_time(omega, n),
            }
        )
    return {"omega": float(omega), "modes": entries, "min_singular": float(min_singular)}


def mode_series_to_csv(times: np.ndarray, amplitudes: np.ndarray, path) -> None:
    lines = ["t,amplitude"]
    for t, amp in zip(times, amplitudes):
        lines.append(",".join([_fmt(t), _fmt(amp)]))
    _write_lines(path, lines)


def curvature_sweep_to_csv(reports: list, path) -> None:
    """One row per section: running id, K, lower_bound, rho."""
    lines = ["section,K,lower_bound,rho"]
    for i, rep in enumerate(reports):
        lines.append(
            ",".join([str(i), _fmt(rep.K), _fmt(rep.lower_bound), _fmt(rep.rho)])
        )
    _write_lines(path, lines)


def table_to_csv(rows: list[dict], path) -> None:
    """Generic experiment table; columns follow the first row's key order."""
    if not rows:
        raise ValueError("nothing to write")
    columns = list(rows[0])
    lines = [",".join(columns)]
    for row in rows:
        lines.append(
            ",".join(
                str(row[c]) if isinstance(row[c], int) else _fmt(row[c])
                for c in columns
            )
        )
    _write_lines(path, lines)


def summary_to_json(payload: dict, path) -> None:
    """Run summary; keys are sorted so identical runs give identical bytes."""
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
