"""Scenario front end: configure, run, and export every experiment.

``whipgeo run --config file.json --out dir`` executes one scenario per
config file and always leaves a ``summary.json`` (config echo, named
checks with pass/fail, wall time) next to the data files, even when the
run halts.  Exit codes: 0 success, 2 invalid config (nothing written),
3 numerical failure or a failed check (partial outputs kept).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import diagnostics, integrate_geodesic, integrate_periodic
from .errors import ConfigInvalid, WhipGeoError
from .families import (
    chart_tangent_field,
    circle_state,
    exact_tangent_field,
    periodic_state,
    polish_unit_speed,
    random_smooth_curve,
    random_state,
    rod_state,
    rod_tension_exact,
    rotating_circle_exact,
    rotating_rod_exact,
    straight_rod,
)
from .geometry import sectional_curvature
from .grid_curves import (
    Curve,
    Symmetry,
    VectorField,
    derivative,
    integrate,
    make_grid,
    theta_to_curve,
)
from .linearized import (
    conjugate_time,
    min_singular_dexp,
    mode_amplitude_series,
    mode_seed,
    solve_jacobi,
)
from .serialize import (
    conjugate_report,
    curvature_sweep_to_csv,
    curve_to_csv,
    diagnostics_to_csv,
    green_to_csv,
    mm_trajectory_to_csv,
    mode_series_to_csv,
    summary_to_json,
    table_to_csv,
    trajectory_to_csv,
)
from .shape_metrics import MetricKind, mm_geodesic_integrate, zigzag_experiment
from .tension import (
    curvature_potential,
    green_bounds_check,
    green_matrix,
    solve_tension_free_length,
)

SCENARIOS = {
    "rod": {
        "fields": ("n", "dt", "T", "omega"),
        "about": "rotating straight segment vs closed-form position and tension",
    },
    "perturbed_rod": {
        "fields": ("n", "dt", "T", "seed"),
        "about": "random compatible state, drift diagnostics under the budget gates",
    },
    "circle": {
        "fields": ("n", "dt", "T", "omega"),
        "about": "rotating loop vs closed form, recorded horizontality drift",
    },
    "custom_theta": {
        "fields": ("n", "dt", "T", "modes", "seed"),
        "about": "curve built from seeded angle harmonics, drift diagnostics",
    },
    "mm_geodesic": {
        "fields": ("n", "dt", "T"),
        "about": "intrinsic curvature flow, energy conservation and reconstruction",
    },
    "zigzag": {
        "fields": ("n",),
        "about": "crumpled homotopies: MichorMumford length collapse over the chord",
    },
    "curvature_sweep": {
        "fields": ("n", "seed"),
        "about": "random sections, curvature positivity against the lower bound",
    },
    "conjugate_sweep": {
        "fields": ("n", "dt", "T", "omega", "modes"),
        "about": "variation modes along the rotating rod vs conjugate-time law",
    },
    "green_audit": {
        "fields": ("n",),
        "about": "Green matrix bounds audit (seed picks a random curve, else rod)",
    },
    "free_length_tension": {
        "fields": ("n", "omega", "seed"),
        "about": "free-length tension constant and residual checks",
    },
}

_ALLOWED_KEYS = {"kind", "n", "dt", "T", "omega", "modes", "metric", "out", "seed"}


@dataclass
class ScenarioConfig:
    kind: str
    n: int
    dt: float | None = None
    T: float | None = None
    omega: float | None = None
    modes: list[int] = field(default_factory=list)
    metric: str | None = None
    out: str | None = None
    seed: int | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigInvalid("config must be a JSON object")
        unknown = set(raw) - _ALLOWED_KEYS
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {', '.join(sorted(unknown))}")
        kind = raw.get("kind")
        if kind not in SCENARIOS:
            raise ConfigInvalid(
                f"kind must be one of {', '.join(SCENARIOS)} (got {kind!r})"
            )
        missing = [
            f for f in SCENARIOS[kind]["fields"] if f != "seed" and raw.get(f) is None
        ]
        if missing:
            raise ConfigInvalid(f"{kind} needs fields: {', '.join(missing)}")
        cfg = cls(
            kind=kind,
            n=raw.get("n"),
            dt=raw.get("dt"),
            T=raw.get("T"),
            omega=raw.get("omega"),
            modes=raw.get("modes") or [],
            metric=raw.get("metric"),
            out=raw.get("out"),
            seed=raw.get("seed"),
        )
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        if not isinstance(self.n, int) or not 8 <= self.n <= 4096:
            raise ConfigInvalid(f"n must be an integer in [8, 4096] (got {self.n!r})")
        if self.dt is not None and not 0.0 < float(self.dt) <= 1.0:
            raise ConfigInvalid(f"dt must lie in (0, 1] (got {self.dt!r})")
        if self.T is not None and not 0.0 < float(self.T) <= 100.0:
            raise ConfigInvalid(f"T must lie in (0, 100] (got {self.T!r})")
        if self.omega is not None and not 0.0 <= float(self.omega) <= 100.0:
            raise ConfigInvalid(f"omega must lie in [0, 100] (got {self.omega!r})")
        if not isinstance(self.modes, list) or any(
            (not isinstance(m, int)) or m < 1 for m in self.modes
        ):
            raise ConfigInvalid("modes must be a list of integers >= 1")
        if self.metric is not None:
            try:
                MetricKind(self.metric)
            except ValueError:
                raise ConfigInvalid(
                    f"metric must be one of {[k.value for k in MetricKind]}"
                ) from None
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            raise ConfigInvalid(f"seed must be a nonnegative integer (got {self.seed!r})")

    def echo(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "dt": self.dt,
            "T": self.T,
            "omega": self.omega,
            "modes": list(self.modes),
            "metric": self.metric,
            "seed": self.seed,
        }


def _check(checks: dict, name: str, value: float, limit: float, lower=False) -> None:
    ok = value >= limit if lower else value <= limit
    checks[name] = {"value": float(value), "limit": float(limit), "pass": bool(ok)}


def _store_stride(T: float, dt: float, target: int = 50) -> int:
    return max(1, int(round(T / dt / target)))


def _drift_checks(checks: dict, traj) -> None:
    d = diagnostics(traj)
    _check(checks, "l2_speed_drift", d["l2_drift"], 1e-3)
    _check(checks, "arc_err", float(np.max(d["arc_err"])), 1e-3)
    _check(checks, "odd_err", float(np.max(d["odd_err"])), 1e-10)
    _check(checks, "min_sigma", float(np.min(d["min_sigma"])), -1e-8, lower=True)


def _run_rod(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("fixed_free_odd", cfg.n)
    gamma, w = rod_state(grid, cfg.omega)
    traj = integrate_geodesic(
        gamma, w, cfg.T, cfg.dt, store_every=_store_stride(cfg.T, cfg.dt)
    )
    trajectory_to_csv(traj, out / "trajectory.csv")
    diagnostics_to_csv(traj, out / "diagnostics.csv")
    ref = rotating_rod_exact(grid, cfg.omega, traj.final.time)
    _check(checks, "sup_err", float(np.max(np.abs(traj.final.eta.points - ref))), 1e-3)
    sig_ref = rod_tension_exact(grid, cfg.omega)
    _check(
        checks,
        "sigma_err",
        float(np.max(np.abs(traj.tensions[-1].sigma - sig_ref))),
        1e-3,
    )
    _drift_checks(checks, traj)
    return traj.failure


def _run_perturbed_rod(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("fixed_free_odd", cfg.n)
    rng = np.random.default_rng(cfg.seed or 0)
    gamma, w = random_state(rng, grid, 4, 0.5, 0.6)
    traj = integrate_geodesic(
        gamma, w, cfg.T, cfg.dt, store_every=_store_stride(cfg.T, cfg.dt)
    )
    trajectory_to_csv(traj, out / "trajectory.csv")
    diagnostics_to_csv(traj, out / "diagnostics.csv")
    _drift_checks(checks, traj)
    return traj.failure


def _run_circle(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("periodic", cfg.n)
    gamma, w = circle_state(grid, cfg.omega)
    # rotation slides along the loop, so the quotient gate would reject it;
    # the horizontality integral is recorded as data instead
    traj = integrate_periodic(
        gamma, w, cfg.T, cfg.dt, store_every=_store_stride(cfg.T, cfg.dt)
    )
    trajectory_to_csv(traj, out / "trajectory.csv")
    diagnostics_to_csv(traj, out / "diagnostics.csv")
    ref = rotating_circle_exact(grid, cfg.omega, traj.final.time)
    _check(checks, "sup_err", float(np.max(np.abs(traj.final.eta.points - ref))), 1e-3)
    horiz = max(abs(r["horizontality"]) for r in traj.records)
    checks["horizontality"] = {"value": horiz, "limit": None, "pass": True}
    d = diagnostics(traj)
    _check(checks, "l2_speed_drift", d["l2_drift"], 1e-3)
    _check(checks, "arc_err", float(np.max(d["arc_err"])), 1e-3)
    _check(checks, "min_sigma", float(np.min(d["min_sigma"])), -1e-8, lower=True)
    return traj.failure


def _run_custom_theta(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("fixed_free_odd", cfg.n)
    rng = np.random.default_rng(cfg.seed or 0)
    theta = np.zeros(grid.num_nodes)
    for m in cfg.modes:
        theta += rng.normal(0.0, 0.4 / m) * np.cos(m * math.pi * grid.nodes)
    gamma = polish_unit_speed(theta_to_curve(theta, grid))
    w = exact_tangent_field(gamma, chart_tangent_field(rng, gamma, 3, 0.5))
    traj = integrate_geodesic(
        gamma, w, cfg.T, cfg.dt, store_every=_store_stride(cfg.T, cfg.dt)
    )
    trajectory_to_csv(traj, out / "trajectory.csv")
    diagnostics_to_csv(traj, out / "diagnostics.csv")
    _drift_checks(checks, traj)
    return traj.failure


def _run_mm_geodesic(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("fixed_free_odd", cfg.n)
    gamma0 = theta_to_curve(0.5 * np.cos(math.pi * grid.nodes), grid)
    a0 = -0.15 * np.sin(math.pi * grid.nodes) * (1.0 - grid.nodes**2)
    traj = mm_geodesic_integrate(
        gamma0, a0, cfg.T, cfg.dt, store_every=_store_stride(cfg.T, cfg.dt)
    )
    mm_trajectory_to_csv(traj, out / "trajectory.csv")
    energies = [r["energy"] for r in traj.records]
    _check(
        checks,
        "energy_drift",
        max(abs(e - energies[0]) for e in energies) / energies[0],
        1e-3,
    )
    odd = max(
        float(np.max(np.abs(crv.points + crv.points[::-1]))) for crv in traj.curves
    )
    _check(checks, "odd_err", odd, 1e-10)
    _check(checks, "recon_drift", max(r["recon_drift"] for r in traj.records), 0.5)
    return traj.failure


def _run_zigzag(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("fixed_free_odd", cfg.n)
    s = grid.nodes
    horiz = Curve(grid, np.stack([s, np.zeros_like(s)], axis=1), Symmetry.ODD)
    vert = Curve(grid, np.stack([np.zeros_like(s), s], axis=1), Symmetry.ODD)
    rows = zigzag_experiment(horiz, vert, [1, 2, 4, 8])
    table_to_csv(rows, out / "zigzag.csv")
    mm = [r["mm_length"] for r in rows]
    _check(checks, "mm_monotone_drop", min(a - b for a, b in zip(mm, mm[1:])), 0.0, lower=True)
    l2_margin = min(r["l2_length"] - r["chord"] for r in rows)
    _check(checks, "l2_above_chord", l2_margin, -1e-3, lower=True)
    return None


def _run_curvature_sweep(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("fixed_free_odd", cfg.n)
    rng = np.random.default_rng(cfg.seed or 0)
    reports = []
    for _ in range(5):
        gamma = polish_unit_speed(random_smooth_curve(rng, grid, 3, 0.6))
        for _ in range(10):
            u = chart_tangent_field(rng, gamma, 3, 0.6)
            v = chart_tangent_field(rng, gamma, 3, 0.6)
            reports.append(sectional_curvature(gamma, u, v))
    curvature_sweep_to_csv(reports, out / "curvature_sweep.csv")
    _check(checks, "min_K", min(r.K for r in reports), 0.0, lower=True)
    margin = min(r.K - r.lower_bound for r in reports)
    _check(checks, "bound_margin", margin, -1e-8, lower=True)
    return None


def _run_conjugate_sweep(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("fixed_free_odd", cfg.n)
    gamma, w = rod_state(grid, cfg.omega)
    traj = integrate_geodesic(gamma, w, cfg.T, cfg.dt, store_every=1)
    worst = 0.0
    for m in cfg.modes:
        states = solve_jacobi(traj, mode_seed(grid, m))
        amps = mode_amplitude_series(states, cfg.omega, m)
        mode_series_to_csv(traj.times, amps, out / f"mode_{m}.csv")
        t_ref = conjugate_time(cfg.omega, m)
        if t_ref is None or t_ref > cfg.T:
            continue
        t_hit = None
        for i in range(1, len(amps)):
            if amps[i - 1] > 0.0 >= amps[i]:
                frac = amps[i - 1] / (amps[i - 1] - amps[i])
                t_hit = float(traj.times[i - 1] + frac * (traj.times[i] - traj.times[i - 1]))
                break
        if t_hit is None:
            worst = math.inf
        else:
            worst = max(worst, abs(t_hit - t_ref) / t_ref)
    _check(checks, "conjugate_time_rel_err", worst, 1e-2)
    report = conjugate_report(
        cfg.omega,
        cfg.modes,
        min_singular_dexp(gamma, w, max(cfg.modes), dt=cfg.dt),
    )
    summary_to_json(report, out / "conjugate_report.json")
    return traj.failure


def _audit_curve(n: int, seed: int | None) -> Curve:
    grid = make_grid("fixed_free_odd", n)
    if seed is None:
        return straight_rod(grid)
    rng = np.random.default_rng(seed)
    return polish_unit_speed(random_smooth_curve(rng, grid, 3, 0.6))


def _green_checks(curve: Curve, checks: dict) -> dict:
    gm = green_matrix(curve)
    report = green_bounds_check(curve, gm)
    _check(checks, "symmetry_err", report["symmetry_err"], 1e-10)
    _check(checks, "min_entry", report["min_entry"], -1e-12, lower=True)
    _check(checks, "upper_margin", report["upper_margin"], -1e-12, lower=True)
    _check(checks, "lower_margin", report["lower_margin"], -1e-12, lower=True)
    checks["rho"] = {"value": report["rho"], "limit": None, "pass": True}
    return {"matrix": gm, "report": report}


def _run_green_audit(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    curve = _audit_curve(cfg.n, cfg.seed)
    audit = _green_checks(curve, checks)
    green_to_csv(audit["matrix"], out / "green.csv")
    curve_to_csv(curve, out / "curve.csv")
    return None


def _run_free_length(cfg: ScenarioConfig, out: Path, checks: dict) -> str | None:
    grid = make_grid("fixed_free_odd", cfg.n)
    s = grid.nodes
    ell = 1.3
    eta = Curve(grid, np.stack([ell * s, np.zeros_like(s)], axis=1), Symmetry.ODD)
    eta_t = np.stack([np.zeros_like(s), cfg.omega * ell * s], axis=1)
    tf_rod = solve_tension_free_length(eta, VectorField(grid, eta_t, Symmetry.ODD), ell)
    _check(checks, "rod_sigma_sup", float(np.max(np.abs(tf_rod.sigma))), 1e-8)
    _check(
        checks,
        "rod_constant_err",
        abs(tf_rod.constant - ell * ell * cfg.omega * cfg.omega),
        1e-6,
    )
    rng = np.random.default_rng(cfg.seed or 0)
    gamma, w = random_state(rng, grid)
    tf = solve_tension_free_length(gamma, w, 1.0)
    src = np.sum(derivative(w.values, grid, 1) ** 2, axis=1)
    resid = derivative(tf.sigma, grid, 2) - curvature_potential(gamma) * tf.sigma
    resid = resid + src - tf.constant
    _check(checks, "residual", float(np.max(np.abs(resid[1:-1]))), 1e-8)
    _check(checks, "endpoint_sigma", max(abs(tf.sigma[0]), abs(tf.sigma[-1])), 0.0)
    _check(checks, "mean_sigma", abs(float(integrate(tf.sigma, grid))), 1e-10)
    rows = [
        {"s": float(si), "sigma": float(v), "constant": float(tf.constant)}
        for si, v in zip(s, tf.sigma)
    ]
    table_to_csv(rows, out / "free_length.csv")
    return None


_RUNNERS = {
    "rod": _run_rod,
    "perturbed_rod": _run_perturbed_rod,
    "circle": _run_circle,
    "custom_theta": _run_custom_theta,
    "mm_geodesic": _run_mm_geodesic,
    "zigzag": _run_zigzag,
    "curvature_sweep": _run_curvature_sweep,
    "conjugate_sweep": _run_conjugate_sweep,
    "green_audit": _run_green_audit,
    "free_length_tension": _run_free_length,
}


def run_scenario(cfg: ScenarioConfig, out_dir) -> int:
    """Execute one scenario into ``out_dir``; returns the exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    checks: dict = {}
    start = time.perf_counter()
    failure = None
    try:
        failure = _RUNNERS[cfg.kind](cfg, out, checks)
    except WhipGeoError as exc:
        failure = f"{type(exc).__name__}: {exc}"
    all_pass = all(c["pass"] for c in checks.values())
    summary = {
        "config": cfg.echo(),
        "checks": checks,
        "failure": failure,
        "wall_time": time.perf_counter() - start,
    }
    summary_to_json(summary, out / "summary.json")
    return 0 if failure is None and all_pass else 3


def _load_config(path) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigInvalid(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from None
    return ScenarioConfig.from_dict(raw)


def _cmd_run(args) -> int:
    try:
        configs = [(Path(p), _load_config(p)) for p in args.config]
        outs = []
        for path, cfg in configs:
            base = args.out if args.out is not None else cfg.out
            if base is None:
                raise ConfigInvalid(f"{path}: no output directory (--out or 'out' key)")
            dest = Path(base) / path.stem if len(configs) > 1 else Path(base)
            outs.append(dest)
        if len(set(outs)) != len(outs):
            raise ConfigInvalid("output directories must be distinct")
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    workers = len(configs)
    cap = os.environ.get("WHIPGEO_THREADS")
    if cap:
        try:
            workers = max(1, min(workers, int(cap)))
        except ValueError:
            print(f"error: WHIPGEO_THREADS must be an integer (got {cap!r})", file=sys.stderr)
            return 2
    if workers == 1 or len(configs) == 1:
        codes = [run_scenario(cfg, dest) for (_, cfg), dest in zip(configs, outs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_scenario, cfg, dest)
                for (_, cfg), dest in zip(configs, outs)
            ]
            codes = [f.result() for f in futures]
    return max(codes)


def _cmd_list(args) -> int:
    if args.json:
        payload = {
            kind: {"fields": list(info["fields"]), "about": info["about"]}
            for kind, info in SCENARIOS.items()
        }
        print(json.dumps(payload, indent=1))
        return 0
    width = max(len(k) for k in SCENARIOS)
    print(f"{'scenario':<{width}}  required fields        description")
    for kind, info in SCENARIOS.items():
        fields = ",".join(info["fields"])
        print(f"{kind:<{width}}  {fields:<21}  {info['about']}")
    return 0


def _cmd_audit_green(args) -> int:
    if args.curve == "rod":
        seed = None
    else:
        seed = args.seed
    try:
        curve = _audit_curve(args.n, seed)
    except (ValueError, WhipGeoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    checks: dict = {}
    _green_checks(curve, checks)
    print(json.dumps({"curve": args.curve, "n": args.n, "checks": checks}, indent=1))
    return 0 if all(c["pass"] for c in checks.values()) else 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="whipgeo",
        description="whip-geometry scenario runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenarios from JSON config files")
    p_run.add_argument("--config", nargs="+", required=True, help="config file(s)")
    p_run.add_argument(
        "--out",
        help="output directory (per-config subdirectories when several configs)",
    )
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list", help="list scenario kinds and their fields")
    p_list.add_argument("--json", action="store_true", help="machine-readable listing")
    p_list.set_defaults(func=_cmd_list)

    p_audit = sub.add_parser("audit-green", help="audit Green-matrix bounds")
    p_audit.add_argument("--n", type=int, required=True, help="grid size")
    p_audit.add_argument(
        "--curve", choices=("rod", "random"), default="rod", help="curve preset"
    )
    p_audit.add_argument("--seed", type=int, default=0, help="seed for --curve random")
    p_audit.set_defaults(func=_cmd_audit_green)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
