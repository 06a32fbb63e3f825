"""Command-line front end: run one closed loop, sweep random draws, re-audit.

Exit codes: 0 when every requested audit passes, 1 when an audit reports
violations, 2 for configuration or trajectory-file problems, 3 when the
design equation becomes singular and the run aborts.

Configs are strict JSON; unknown keys anywhere are rejected so typos cannot
silently change an experiment.  Every command writes a `manifest.json`
summarizing inputs (including a SHA-256 of the canonical config), outputs,
audit results, and timing; the write is atomic so a crash cannot leave a
half-written manifest next to finished data.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .controller import SingularSylvesterError, TargetPolynomial
from .plant import BoxSet, PlantParameters
from .polynomial import Polynomial
from .simulation import (
    AUDIT_NAMES,
    SignalSpec,
    SimConfig,
    Trajectory,
    TrajectoryFormatError,
    estimate_constants,
    gain_bound_fit,
    monte_carlo_sweep,
    run_audits,
    run_closed_loop,
)

__all__ = ["main", "ConfigError", "load_config"]


class ConfigError(Exception):
    """The config file (or a stored trajectory) cannot be used as given."""


def _expect_keys(obj: dict, where: str, required: tuple, optional: tuple = ()) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"missing keys {sorted(missing)} in {where}")


def _floats(value, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where} must be numeric: {err}") from err
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{where} must be a finite 1-D array")
    return arr


def _signal(obj, where: str) -> SignalSpec:
    _expect_keys(obj, where, ("kind",), ("magnitude", "period", "values"))
    kind = obj["kind"]
    try:
        if kind == "constant":
            _expect_keys(obj, where, ("kind",), ("magnitude",))
            return SignalSpec("constant", magnitude=float(obj.get("magnitude", 0.0)))
        if kind == "sign_flip":
            _expect_keys(obj, where, ("kind", "magnitude", "period"), ())
            return SignalSpec(
                "sign_flip", magnitude=float(obj["magnitude"]), period=int(obj["period"])
            )
        if kind == "custom":
            _expect_keys(obj, where, ("kind", "values"), ())
            return SignalSpec("custom", values=_floats(obj["values"], f"{where}.values"))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad {where}: {err}") from err
    raise ConfigError(f"{where}.kind must be 'constant', 'sign_flip', or 'custom'")


def _box(obj, n: int) -> BoxSet:
    _expect_keys(obj, "parameter_box", ("a", "b"))
    rows = []
    for name in ("a", "b"):
        part = obj[name]
        if not isinstance(part, list) or len(part) != n:
            raise ConfigError(f"parameter_box.{name} must list {n} [lo, hi] pairs")
        for k, pair in enumerate(part):
            bounds = _floats(pair, f"parameter_box.{name}[{k}]")
            if bounds.size != 2 or not bounds[0] <= bounds[1]:
                raise ConfigError(f"parameter_box.{name}[{k}] must be [lo, hi] with lo <= hi")
            rows.append(bounds)
    rows = np.array(rows)
    try:
        return BoxSet(rows[:, 0], rows[:, 1])
    except ValueError as err:
        raise ConfigError(f"bad parameter_box: {err}") from err


TOP_KEYS_REQUIRED = (
    "schema_version", "n", "plant", "parameter_box", "target_poly",
    "mu", "theta0", "phi0", "reference", "disturbance", "horizon",
)
TOP_KEYS_OPTIONAL = (
    "t0", "seed", "estimator", "lambda", "nudge_singular",
    "audits", "alpha_samples", "tracking_tail", "sweep", "out",
)
SWEEP_KEYS = ("draws", "seed", "horizon", "overrides")
OVERRIDE_KEYS = ("theta", "theta0", "mu", "phi0")


def load_config(path: str) -> tuple[SimConfig, dict, str]:
    """Parse and validate a config file.

    Returns the simulation config, a dict of CLI-level extras (audits,
    alpha_samples, tracking_tail, sweep, out), and the SHA-256 hash of the
    canonical JSON rendering.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err

    _expect_keys(raw, "config", TOP_KEYS_REQUIRED, TOP_KEYS_OPTIONAL)
    if raw["schema_version"] != 1:
        raise ConfigError("schema_version must be 1")
    try:
        n = int(raw["n"])
    except (TypeError, ValueError) as err:
        raise ConfigError(f"n must be an integer: {err}") from err

    _expect_keys(raw["plant"], "plant", ("a", "b"))
    a = _floats(raw["plant"]["a"], "plant.a")
    b = _floats(raw["plant"]["b"], "plant.b")
    if a.size != n or b.size != n:
        raise ConfigError(f"plant.a and plant.b must each have length n = {n}")

    box = _box(raw["parameter_box"], n)
    target_coeffs = _floats(raw["target_poly"], "target_poly")
    try:
        target = TargetPolynomial(Polynomial(target_coeffs), n)
    except ValueError as err:
        raise ConfigError(f"bad target_poly: {err}") from err

    audits = raw.get("audits", ["estimator", "recursion", "poles"])
    if not isinstance(audits, list) or any(name not in AUDIT_NAMES for name in audits):
        raise ConfigError(f"audits must be a list drawn from {AUDIT_NAMES}")

    sweep = raw.get("sweep")
    if sweep is not None:
        _expect_keys(sweep, "sweep", ("draws",), SWEEP_KEYS[1:])
        overrides = sweep.get("overrides")
        if overrides is not None:
            _expect_keys(overrides, "sweep.overrides", (), OVERRIDE_KEYS)

    try:
        cfg = SimConfig(
            n=n,
            theta_true=PlantParameters(a, b),
            box=box,
            target=target,
            mu=float(raw["mu"]),
            theta0=_floats(raw["theta0"], "theta0"),
            phi0=_floats(raw["phi0"], "phi0"),
            reference=_signal(raw["reference"], "reference"),
            disturbance=_signal(raw["disturbance"], "disturbance"),
            horizon=int(raw["horizon"]),
            t0=int(raw.get("t0", 0)),
            seed=int(raw.get("seed", 0)),
            estimator_mode=str(raw.get("estimator", "classical")),
            nudge_singular=bool(raw.get("nudge_singular", False)),
            lam=None if raw.get("lambda") is None else float(raw["lambda"]),
        )
        cfg.validate()
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad config: {err}") from err

    extras = {
        "audits": list(audits),
        "alpha_samples": int(raw.get("alpha_samples", 100_000)),
        "tracking_tail": int(raw.get("tracking_tail", 100)),
        "sweep": sweep,
        "out": raw.get("out"),
    }
    if extras["alpha_samples"] < 0 or extras["tracking_tail"] < 1:
        raise ConfigError("alpha_samples must be >= 0 and tracking_tail >= 1")
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return cfg, extras, digest


def write_manifest(out_dir: str, payload: dict) -> str:
    """Atomically write manifest.json (write to a sibling temp file, rename)."""
    path = os.path.join(out_dir, "manifest.json")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def _json_ready(obj):
    """Recursively convert numpy scalars so json.dump accepts the payload."""
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _signals_plot(n: int) -> str:
    return (
        "set datafile separator comma\n"
        "set key autotitle columnhead\n"
        "set terminal pngcairo size 1200,900\n"
        "set output 'signals.png'\n"
        "set multiplot layout 3,1\n"
        "set xlabel 't'\n"
        "plot 'trajectory.csv' using 1:2 with lines, '' using 1:5 with lines\n"
        "plot 'trajectory.csv' using 1:3 with lines\n"
        "plot 'trajectory.csv' using 1:4 with lines\n"
        "unset multiplot\n"
    )


def _estimates_plot(n: int, theta_star: np.ndarray) -> str:
    dim = 2 * n + 1
    first = 10 + dim  # thetahat_1 column, 1-based: after t..e (9) and psi block
    curves = [f"'trajectory.csv' using 1:{first + i} with lines" for i in range(dim)]
    refs = [
        f"{theta_star[i]:.17g} with lines dashtype 2 title 'true_{i + 1}'"
        for i in range(dim)
    ]
    return (
        "set datafile separator comma\n"
        "set key autotitle columnhead\n"
        "set terminal pngcairo size 1200,600\n"
        "set output 'estimates.png'\n"
        "set xlabel 't'\n"
        "plot " + ", \\\n     ".join(curves + refs) + "\n"
    )


def _emit_plots(out_dir: str, cfg: SimConfig) -> list[str]:
    names = []
    for name, text in (
        ("signals.gp", _signals_plot(cfg.n)),
        ("estimates.gp", _estimates_plot(cfg.n, cfg.theta_star())),
    ):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
        names.append(name)
    return names


def _say(quiet: bool, *parts) -> None:
    if not quiet:
        print(*parts)


def _audit_lines(results: dict, quiet: bool) -> int:
    total = 0
    for name, res in results.items():
        total += res["violations"]
        flag = "PASS" if res["pass"] else "FAIL"
        _say(quiet, f"audit {name}: {flag} ({res['violations']} violations)")
    return total


def cmd_run(args) -> int:
    cfg, extras, digest = load_config(args.config)
    out_dir = args.out or extras["out"] or "out"
    os.makedirs(out_dir, exist_ok=True)
    started = time.perf_counter()

    constants = None
    if "crude_bound" in extras["audits"]:
        constants = estimate_constants(
            cfg.aux_box(), cfg.target, samples=extras["alpha_samples"], seed=cfg.seed
        )

    try:
        traj = run_closed_loop(cfg, config_hash=digest)
    except SingularSylvesterError as err:
        _say(args.quiet, f"aborted: {err}")
        write_manifest(out_dir, _json_ready({
            "version": __version__,
            "command": "run",
            "config_path": os.path.abspath(args.config),
            "config_hash": digest,
            "seed": cfg.seed,
            "status": "aborted",
            "error": str(err),
            "wall_time_s": time.perf_counter() - started,
        }))
        return 3

    csv_path = os.path.join(out_dir, "trajectory.csv")
    traj.save(csv_path)
    outputs = ["trajectory.csv"]

    try:
        results = run_audits(
            traj, cfg,
            which=extras["audits"],
            constants=constants,
            tracking_tail=extras["tracking_tail"],
        )
    except ValueError as err:
        raise ConfigError(f"audit setup failed: {err}") from err
    fit = gain_bound_fit(traj, cfg.decay_rate(), cfg.target)
    total = _audit_lines(results, args.quiet)
    _say(
        args.quiet,
        f"gain bound: gamma = {fit.gamma:.6g} at lambda = {fit.lam:.6g}, "
        f"residual floor = {fit.residual_floor:.6g}, tail tracking = {fit.tail_tracking:.6g}",
    )

    if args.plots:
        outputs += _emit_plots(out_dir, cfg)
    payload = {
        "version": __version__,
        "command": "run",
        "config_path": os.path.abspath(args.config),
        "config_hash": digest,
        "seed": cfg.seed,
        "estimator": cfg.estimator_mode,
        "mu": cfg.mu,
        "horizon": cfg.horizon,
        "outputs": outputs,
        "audits": results,
        "gain_bound": {
            "gamma": fit.gamma,
            "lambda": fit.lam,
            "residual_floor": fit.residual_floor,
            "tail_tracking": fit.tail_tracking,
        },
        "status": "pass" if total == 0 else "fail",
        "wall_time_s": time.perf_counter() - started,
    }
    if constants is not None:
        payload["constants"] = {
            "alpha_bar": constants.alpha_bar,
            "s_bar": constants.s_bar,
            "samples_used": constants.samples_used,
            "samples_skipped": constants.samples_skipped,
        }
    write_manifest(out_dir, _json_ready(payload))
    _say(args.quiet, f"wrote {csv_path}")
    return 0 if total == 0 else 1


SWEEP_COLUMNS = (
    "draw", "mu", "gamma", "lam", "residual_floor", "tail_tracking",
    "violations", "aborted",
)


def cmd_sweep(args) -> int:
    cfg, extras, digest = load_config(args.config)
    sweep_cfg = extras["sweep"] or {}
    draws = args.draws if args.draws is not None else sweep_cfg.get("draws")
    if draws is None:
        raise ConfigError("sweep needs --draws or a sweep.draws config entry")
    draws = int(draws)
    seed = args.seed if args.seed is not None else sweep_cfg.get("seed")
    horizon = args.horizon if args.horizon is not None else sweep_cfg.get("horizon")
    overrides = sweep_cfg.get("overrides")
    out_dir = args.out or extras["out"] or "out"
    os.makedirs(out_dir, exist_ok=True)
    started = time.perf_counter()

    audit_names = tuple(a for a in extras["audits"] if a != "tracking")
    reports = monte_carlo_sweep(
        cfg, draws,
        seed=seed,
        overrides=overrides,
        horizon=None if horizon is None else int(horizon),
        alpha_samples=extras["alpha_samples"],
        audits=audit_names,
    )

    detail_names = list(audit_names)
    lines = [",".join(SWEEP_COLUMNS + tuple(f"violations_{a}" for a in detail_names))]
    for rep in reports:
        row = [
            str(rep.draw),
            f"{rep.mu:.17g}",
            f"{rep.gamma:.17g}",
            f"{rep.lam:.17g}",
            f"{rep.residual_floor:.17g}",
            f"{rep.tail_tracking:.17g}",
            str(rep.violations),
            str(int(rep.aborted)),
        ]
        row += [str(rep.details.get(a, 0)) for a in detail_names]
        lines.append(",".join(row))
    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    total = sum(rep.violations for rep in reports)
    aborted = sum(1 for rep in reports if rep.aborted)
    finite = [rep.gamma for rep in reports if not rep.aborted]
    worst = max(finite) if finite else float("nan")
    _say(
        args.quiet,
        f"sweep: {draws} draws, total violations = {total}, "
        f"aborted = {aborted}, worst gamma = {worst:.6g}",
    )
    status = "pass" if total == 0 and aborted == 0 else (
        "aborted" if aborted else "fail"
    )
    write_manifest(out_dir, _json_ready({
        "version": __version__,
        "command": "sweep",
        "config_path": os.path.abspath(args.config),
        "config_hash": digest,
        "seed": cfg.seed if seed is None else int(seed),
        "draws": draws,
        "outputs": ["sweep.csv"],
        "audits": detail_names,
        "total_violations": total,
        "aborted_draws": aborted,
        "worst_gamma": worst,
        "status": status,
        "wall_time_s": time.perf_counter() - started,
    }))
    _say(args.quiet, f"wrote {csv_path}")
    if aborted:
        return 3
    return 0 if total == 0 else 1


def cmd_audit(args) -> int:
    cfg, extras, digest = load_config(args.config)
    try:
        with open(args.trajectory, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read trajectory {args.trajectory}: {err}") from err
    try:
        traj = Trajectory.from_csv(text, cfg)
    except TrajectoryFormatError as err:
        raise ConfigError(str(err)) from err

    started = time.perf_counter()
    constants = None
    if "crude_bound" in extras["audits"]:
        constants = estimate_constants(
            cfg.aux_box(), cfg.target, samples=extras["alpha_samples"], seed=cfg.seed
        )
    try:
        results = run_audits(
            traj, cfg,
            which=extras["audits"],
            constants=constants,
            tracking_tail=extras["tracking_tail"],
        )
    except ValueError as err:
        raise ConfigError(f"audit setup failed: {err}") from err
    fit = gain_bound_fit(traj, cfg.decay_rate(), cfg.target)
    total = _audit_lines(results, args.quiet)
    _say(
        args.quiet,
        f"gain bound: gamma = {fit.gamma:.6g} at lambda = {fit.lam:.6g}, "
        f"residual floor = {fit.residual_floor:.6g}, tail tracking = {fit.tail_tracking:.6g}",
    )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_manifest(args.out, _json_ready({
            "version": __version__,
            "command": "audit",
            "config_path": os.path.abspath(args.config),
            "config_hash": digest,
            "trajectory": os.path.abspath(args.trajectory),
            "audits": results,
            "gain_bound": {
                "gamma": fit.gamma,
                "lambda": fit.lam,
                "residual_floor": fit.residual_floor,
                "tail_tracking": fit.tail_tracking,
            },
            "status": "pass" if total == 0 else "fail",
            "wall_time_s": time.perf_counter() - started,
        }))
    return 0 if total == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptive-pp",
        description="Adaptive pole placement: simulate, sweep, and audit closed loops.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one closed loop and audit it")
    run_p.add_argument("config", help="JSON config path")
    run_p.add_argument("--out", default=None, help="output directory (default: config out or ./out)")
    run_p.add_argument("--plots", action="store_true", help="emit gnuplot scripts next to the CSV")
    run_p.add_argument("--quiet", action="store_true", help="suppress progress output")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run repeated (optionally randomized) draws")
    sweep_p.add_argument("config", help="JSON config path")
    sweep_p.add_argument("--draws", type=int, default=None, help="number of draws")
    sweep_p.add_argument("--seed", type=int, default=None, help="sweep seed (default: config seed)")
    sweep_p.add_argument("--horizon", type=int, default=None, help="per-draw horizon override")
    sweep_p.add_argument("--out", default=None, help="output directory")
    sweep_p.add_argument("--quiet", action="store_true", help="suppress progress output")
    sweep_p.set_defaults(func=cmd_sweep)

    audit_p = sub.add_parser("audit", help="recompute audits for a stored trajectory")
    audit_p.add_argument("trajectory", help="trajectory CSV path")
    audit_p.add_argument("config", help="JSON config path")
    audit_p.add_argument("--out", default=None, help="optional directory for a manifest")
    audit_p.add_argument("--quiet", action="store_true", help="suppress progress output")
    audit_p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SingularSylvesterError as err:
        print(f"aborted: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
