"""Batch command-line front end.

Subcommands: ``analyze``, ``optimize``, ``sweep``, ``validate``. Each run
writes its machine-readable results next to a ``manifest.json`` capturing
the resolved configuration, seed, and tool version; result files reference
the manifest by name and contain no volatile fields, so reruns with the
same inputs (and seed, for stochastic commands) are byte-identical.

Exit codes: 0 success, 1 configuration/usage error, 2 infeasible
optimization, 3 validation tolerance breach under ``--assert-tolerance``.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import AnalysisResult, analyze
from .config import PolicyConfig
from .errors import ConfigError, InfeasibleDesignSpaceError, SpareOpsError
from .markov import lead_time_pmf
from .metrics import constraint_eval, cost_breakdown, expected_shortage, mean_stock
from .montecarlo import ValidationCase, lhs_validation_suite, validate
from .optimize import OptimizationResult, optimize, sweep_failure_rate

SEED_ENV_VAR = "SPAREOPS_SEED"
MANIFEST_NAME = "manifest.json"

_RUN_KEY_TYPES = {
    "q_range": list,
    "r_range": list,
    "lambda_grid": list,
    "horizon_days": (int, float),
    "n_reps": int,
    "seed": int,
}
_POLICY_KEYS = {f.name for f in fields(PolicyConfig)}
_DEFAULTED_POLICY_KEYS = {"n_sat_nominal", "n_orbit", "tau_mc_days", "days_per_year"}
_REQUIRED_POLICY_KEYS = _POLICY_KEYS - _DEFAULTED_POLICY_KEYS


@dataclass(frozen=True)
class RunSettings:
    """Optional run controls carried in the config file."""

    q_range: tuple[int, int] | None = None
    r_range: tuple[int, int] | None = None
    lambda_grid: tuple[float, ...] | None = None
    horizon_days: float | None = None
    n_reps: int | None = None
    seed: int | None = None


@dataclass(frozen=True)
class ConfigBundle:
    policy: PolicyConfig
    run: RunSettings


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record written alongside every command's outputs."""

    command: str
    version: str
    created_utc: str
    seed: int | None
    config: dict
    derived: dict
    outputs: tuple[str, ...]

    def to_json(self) -> str:
        payload = {
            "schema": "manifest-v1",
            "command": self.command,
            "version": self.version,
            "created_utc": self.created_utc,
            "seed": self.seed,
            "config": self.config,
            "derived": self.derived,
            "outputs": list(self.outputs),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class _UsageError(ConfigError):
    """Command-line usage problem; mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(message)


def load_config(path: str | Path) -> ConfigBundle:
    """Parse and strictly validate a JSON configuration file.

    Unknown keys are rejected; policy keys build a :class:`PolicyConfig`
    (applying the documented defaults), the optional run keys land in
    :class:`RunSettings`.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(raw) - _POLICY_KEYS - set(_RUN_KEY_TYPES))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    missing = sorted(_REQUIRED_POLICY_KEYS - set(raw))
    if missing:
        raise ConfigError(f"missing required config key(s): {', '.join(missing)}")
    policy_kwargs = {}
    for key in _POLICY_KEYS & set(raw):
        policy_kwargs[key] = _coerce_policy_value(key, raw[key])
    policy = PolicyConfig(**policy_kwargs)
    run_kwargs = {}
    for key, expected in _RUN_KEY_TYPES.items():
        if key not in raw:
            continue
        value = raw[key]
        if isinstance(value, bool) or not isinstance(value, expected):
            raise ConfigError(f"config key '{key}' has the wrong type")
        if key in ("q_range", "r_range"):
            run_kwargs[key] = _coerce_range(key, value)
        elif key == "lambda_grid":
            if not value or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError("lambda_grid must be a non-empty list of numbers")
            run_kwargs[key] = tuple(float(v) for v in value)
        elif key == "horizon_days":
            run_kwargs[key] = float(value)
        else:
            run_kwargs[key] = value
    return ConfigBundle(policy=policy, run=RunSettings(**run_kwargs))


def _coerce_policy_value(key: str, value):
    int_keys = {"q", "r", "n_sat_nominal", "n_orbit"}
    if key == "rideshare_available":
        if not isinstance(value, bool):
            raise ConfigError(f"config key '{key}' must be a boolean")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key '{key}' must be a number")
    if key in int_keys:
        if isinstance(value, float):
            raise ConfigError(f"config key '{key}' must be an integer")
        return value
    return float(value)


def _coerce_range(key: str, value) -> tuple[int, int]:
    if (
        len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, int) for v in value)
        or value[0] > value[1]
    ):
        raise ConfigError(f"config key '{key}' must be [lo, hi] with integer lo <= hi")
    return int(value[0]), int(value[1])


def parse_lambda_grid(spec: str) -> list[float]:
    """Parse ``start:stop:logN`` / ``start:stop:linN`` into a rate grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"lambda grid '{spec}' must look like start:stop:log20")
    try:
        start, stop = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"lambda grid '{spec}' has non-numeric bounds") from exc
    scale, count = parts[2][:3], parts[2][3:]
    if scale not in ("log", "lin") or not count.isdigit() or int(count) < 1:
        raise ConfigError(f"lambda grid '{spec}' must end in logN or linN")
    n = int(count)
    if start <= 0 or stop < start:
        raise ConfigError(f"lambda grid '{spec}' needs 0 < start <= stop")
    if n == 1:
        return [start]
    if scale == "log":
        return [float(v) for v in np.geomspace(start, stop, n)]
    return [float(v) for v in np.linspace(start, stop, n)]


def _resolve_seed(run: RunSettings) -> int:
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
    if run.seed is not None:
        return run.seed
    return 0


def _derived_block(policy: PolicyConfig) -> dict:
    lead = lead_time_pmf(policy)
    return {
        "n_sat": policy.n_sat,
        "lambda_step": policy.lambda_step,
        "alpha": lead.alpha,
        "lead_time_min_steps": lead.min_steps,
    }


def _write_manifest(out_dir: Path, command: str, policy: PolicyConfig,
                    seed: int | None, outputs: list[str]) -> None:
    manifest = RunManifest(
        command=command,
        version=__version__,
        created_utc=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        seed=seed,
        config=policy.to_dict(),
        derived=_derived_block(policy),
        outputs=tuple(outputs),
    )
    (out_dir / MANIFEST_NAME).write_text(manifest.to_json())


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _dist_list(dist) -> list[float] | None:
    if dist is None:
        return None
    return [float(p) for p in dist.probs]


def _analysis_payload(result: AnalysisResult, policy: PolicyConfig) -> dict:
    cost = cost_breakdown(result, policy)
    g1, g2 = constraint_eval(result, policy)
    return {
        "schema": "analysis-v1",
        "manifest": MANIFEST_NAME,
        "states": [int(s) for s in result.pi_rc.states],
        "distributions": {
            "pi_q": _dist_list(result.pi_q),
            "pi_r": _dist_list(result.pi_r),
            "pi_io": _dist_list(result.pi_io),
            "pi_lt": _dist_list(result.pi_lt),
            "pi_rc": _dist_list(result.pi_rc),
        },
        "periods": {
            "k_io_steps": result.k_io,
            "k_lt_steps": result.k_lt,
            "tau_io_days": result.tau_io_days,
            "tau_lt_days": result.tau_lt_days,
            "tau_rc_days": result.tau_rc_days,
            "io_degenerate": result.io_degenerate,
        },
        "metrics": {
            "mean_stock": mean_stock(result.pi_rc),
            "expected_shortage": expected_shortage(result.pi_rc, policy.n_sat_nominal),
            "c_build_rate": cost.c_build_rate,
            "c_hold_rate": cost.c_hold_rate,
            "c_launch_rate": cost.c_launch_rate,
            "c_total_rate": cost.c_total_rate,
            "launch_mode": cost.launch_mode.value,
            "m_total_kg": cost.m_total_kg,
            "g1": g1,
            "g2": g2,
            "feasible": g1 <= 0.0 and g2 <= 0.0,
        },
    }


_GRID_COLUMNS = ["q", "r", "c_build", "c_hold", "c_launch", "c_total",
                 "S", "g1", "g2", "launch_mode", "tau_rc_days"]


def _write_grid_csv(path: Path, result: OptimizationResult) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: grid-v1; manifest: {MANIFEST_NAME}\n")
        writer = csv.writer(fh)
        writer.writerow(_GRID_COLUMNS)
        for p in result.grid:
            writer.writerow([
                p.q, p.r,
                _fmt(p.cost.c_build_rate), _fmt(p.cost.c_hold_rate),
                _fmt(p.cost.c_launch_rate), _fmt(p.cost.c_total_rate),
                _fmt(p.shortage), _fmt(p.g1), _fmt(p.g2),
                p.cost.launch_mode.value, _fmt(p.tau_rc_days),
            ])


_SWEEP_COLUMNS = ["lambda_per_year", "q_star", "r_star", "c_build", "c_hold",
                  "c_launch", "c_total", "S", "launch_mode", "status"]


def _write_sweep_csv(path: Path, points) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: sweep-v1; manifest: {MANIFEST_NAME}\n")
        writer = csv.writer(fh)
        writer.writerow(_SWEEP_COLUMNS)
        for point in points:
            if point.result is None:
                writer.writerow([_fmt(point.lambda_sat_per_year)] + [""] * 8
                                + [f"error: {point.error}"])
                continue
            best = point.result.best
            writer.writerow([
                _fmt(point.lambda_sat_per_year), best.q, best.r,
                _fmt(best.cost.c_build_rate), _fmt(best.cost.c_hold_rate),
                _fmt(best.cost.c_launch_rate), _fmt(best.cost.c_total_rate),
                _fmt(best.shortage), best.cost.launch_mode.value, "ok",
            ])


_VALIDATION_COLUMNS = ["case_id", "lambda_per_year", "tau_lv_days", "mu_lv_days",
                       "q", "r", "seed", "M_analytic", "M_sim", "S_analytic",
                       "S_sim", "rel_err_m", "rel_err_s", "status"]


def _write_validation_csv(path: Path, cases: list[ValidationCase]) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: validation-v1; manifest: {MANIFEST_NAME}\n")
        writer = csv.writer(fh)
        writer.writerow(_VALIDATION_COLUMNS)
        for c in cases:
            row = [c.case_id, _fmt(c.lambda_sat_per_year), _fmt(c.tau_lv_days),
                   _fmt(c.mu_lv_days), c.q, c.r, c.seed]
            if c.stats is None:
                row += [""] * 6 + [f"error: {c.error}"]
            else:
                row += [_fmt(c.m_analytic), _fmt(c.stats.m_sim),
                        _fmt(c.s_analytic), _fmt(c.stats.s_sim),
                        _fmt(c.stats.rel_err_m), _fmt(c.stats.rel_err_s), "ok"]
            writer.writerow(row)


def _default_ranges(policy: PolicyConfig, run: RunSettings, args) -> tuple[tuple[int, int], tuple[int, int]]:
    q_range = args.q_range or run.q_range or (1, 10)
    r_range = args.r_range or run.r_range or (
        max(0, policy.n_sat_nominal - 5), policy.n_sat_nominal + 5
    )
    return q_range, r_range


def _parse_cli_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(part) for part in text.split(":"))
    except ValueError as exc:
        raise _UsageError(f"range '{text}' must look like LO:HI") from exc
    if lo > hi:
        raise _UsageError(f"range '{text}' must have LO <= HI")
    return lo, hi


def _cmd_analyze(args) -> int:
    bundle = load_config(args.config)
    out_dir = _ensure_out_dir(args.output_dir)
    result = analyze(bundle.policy)
    payload = _analysis_payload(result, bundle.policy)
    (out_dir / "analysis.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    _write_manifest(out_dir, "analyze", bundle.policy, None, ["analysis.json"])
    metrics = payload["metrics"]
    print(
        f"analyze: tau_rc={result.tau_rc_days:.4g} d, "
        f"C_total={metrics['c_total_rate']:.4g} M$/day, "
        f"S={metrics['expected_shortage']:.4g} -> {out_dir / 'analysis.json'}"
    )
    return 0


def _cmd_optimize(args) -> int:
    bundle = load_config(args.config)
    out_dir = _ensure_out_dir(args.output_dir)
    q_range, r_range = _default_ranges(bundle.policy, bundle.run, args)
    result = optimize(bundle.policy, q_range, r_range)
    _write_grid_csv(out_dir / "grid.csv", result)
    _write_manifest(out_dir, "optimize", bundle.policy, None, ["grid.csv"])
    best = result.best
    print(
        f"optimize: best (q, r) = ({best.q}, {best.r}), "
        f"C_total={best.cost.c_total_rate:.4g} M$/day, "
        f"S={best.shortage:.4g}, launch={best.cost.launch_mode.value} "
        f"-> {out_dir / 'grid.csv'}"
    )
    return 0


def _cmd_sweep(args) -> int:
    bundle = load_config(args.config)
    out_dir = _ensure_out_dir(args.output_dir)
    if args.lambda_spec:
        grid = parse_lambda_grid(args.lambda_spec)
    elif bundle.run.lambda_grid:
        grid = list(bundle.run.lambda_grid)
    else:
        raise ConfigError("sweep needs --lambda START:STOP:logN or a lambda_grid config key")
    q_range, r_range = _default_ranges(bundle.policy, bundle.run, args)
    points = sweep_failure_rate(bundle.policy, grid, q_range, r_range)
    _write_sweep_csv(out_dir / "sweep.csv", points)
    _write_manifest(out_dir, "sweep", bundle.policy, None, ["sweep.csv"])
    n_ok = sum(1 for p in points if p.result is not None)
    print(f"sweep: {n_ok}/{len(points)} rates optimized -> {out_dir / 'sweep.csv'}")
    return 0


def _cmd_validate(args) -> int:
    bundle = load_config(args.config)
    out_dir = _ensure_out_dir(args.output_dir)
    seed = _resolve_seed(bundle.run)
    horizon = args.horizon_days or bundle.run.horizon_days or 7305.0
    n_reps = args.reps or bundle.run.n_reps or 100
    policy = bundle.policy
    if args.cases:
        suite = lhs_validation_suite(
            policy, args.cases, seed, horizon_days=horizon, n_reps=n_reps
        )
        cases = list(suite.cases)
        print(
            f"validate: {len(cases)} LHS cases, mean relM={suite.mean_rel_err_m:.3%}, "
            f"mean relS={suite.mean_rel_err_s:.3%}"
        )
    else:
        analytic = analyze(policy)
        stats = validate(policy, analytic, horizon, n_reps, seed)
        cases = [
            ValidationCase(
                case_id=0,
                lambda_sat_per_year=policy.lambda_sat_per_year,
                tau_lv_days=policy.tau_lv_days,
                mu_lv_days=policy.mu_lv_days,
                q=policy.q,
                r=policy.r,
                seed=seed,
                m_analytic=mean_stock(analytic.pi_rc),
                s_analytic=expected_shortage(analytic.pi_rc, policy.n_sat_nominal),
                stats=stats,
            )
        ]
        print(
            f"validate: relM={stats.rel_err_m:.3%}, relS={stats.rel_err_s:.3%} "
            f"({n_reps} reps x {horizon:.4g} d, seed {seed})"
        )
    _write_validation_csv(out_dir / "validation.csv", cases)
    _write_manifest(out_dir, "validate", policy, seed, ["validation.csv"])
    if args.assert_tolerance is not None:
        limit = args.assert_tolerance / 100.0
        breaches = [
            c.case_id for c in cases
            if c.stats is None
            or c.stats.rel_err_m > limit
            or c.stats.rel_err_s > limit
        ]
        if breaches:
            print(
                f"validate: tolerance {args.assert_tolerance}% breached for "
                f"case(s) {breaches}",
                file=sys.stderr,
            )
            return 3
    return 0


def _ensure_out_dir(path: str) -> Path:
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _build_parser() -> _Parser:
    parser = _Parser(prog="spareops", description=__doc__)
    parser.add_argument("--version", action="version", version=f"spareops {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--output-dir", default=".", help="directory for result files")

    p_analyze = sub.add_parser("analyze", help="evaluate one configuration")
    common(p_analyze)
    p_analyze.set_defaults(func=_cmd_analyze)

    p_opt = sub.add_parser("optimize", help="grid search over (q, r)")
    common(p_opt)
    p_opt.add_argument("--q-range", type=_parse_cli_range, help="LO:HI inclusive")
    p_opt.add_argument("--r-range", type=_parse_cli_range, help="LO:HI inclusive")
    p_opt.set_defaults(func=_cmd_optimize)

    p_sweep = sub.add_parser("sweep", help="re-optimize across failure rates")
    common(p_sweep)
    p_sweep.add_argument("--lambda", dest="lambda_spec",
                         help="rate grid, e.g. 0.001:0.5:log20")
    p_sweep.add_argument("--q-range", type=_parse_cli_range, help="LO:HI inclusive")
    p_sweep.add_argument("--r-range", type=_parse_cli_range, help="LO:HI inclusive")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="compare analysis with simulation")
    common(p_val)
    p_val.add_argument("--cases", type=int, default=0,
                       help="number of Latin hypercube cases (0 = config case only)")
    p_val.add_argument("--horizon-days", type=float, default=None)
    p_val.add_argument("--reps", type=int, default=None)
    p_val.add_argument("--assert-tolerance", type=float, default=None,
                       help="fail (exit 3) if any relative error exceeds this percentage")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def run(argv: list[str] | None = None) -> int:
    """Entry point returning a process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleDesignSpaceError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except SpareOpsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
