"""Command-line front end.

    bootlasso tune DATA.csv --response y --scheme beta:2,2 --b 200 --seed 7 --out OUT
    bootlasso simulate diabetes_sim.cfg --out OUT
    bootlasso weights-preview --scheme kfold:10 --n 442 --replicates 200 --out OUT
    bootlasso rerun OUT/manifest.json --out OUT2

Exit codes: 0 success, 1 solver failure, 2 malformed input or configuration,
3 degenerate data.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BootLassoError, ConfigError, DegenerateData, DidNotConverge, MalformedInput
from .errors import InvalidScheme
from .evaluation import mcc_curve
from .io import parse_kv_config, read_dataset_csv, write_csv
from .lasso import DEFAULT_LAMBDA_RATIO, DEFAULT_N_LAMBDA, compute_lambda_grid
from .simulation import (
    SimulationConfig,
    TruthRule,
    load_diabetes_quadratic,
    parse_method,
    run_method,
    run_simulation_study,
)
from .tuner import compute_ebic, select_lambda_ebic
from .weights import WeightScheme, sorted_weight_profile

log = logging.getLogger("bootlasso")

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3
BUILD_ID = f"bootlasso {__version__}"


def default_threads() -> int:
    env = os.environ.get("BOOTLASSO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer BOOTLASSO_THREADS=%r", env)
    return os.cpu_count() or 1


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, DegenerateData):
        return EXIT_DEGENERATE
    if isinstance(exc, (MalformedInput, InvalidScheme, ConfigError, FileNotFoundError,
                        IsADirectoryError, ValueError)):
        return EXIT_INPUT
    if isinstance(exc, DidNotConverge):
        return EXIT_FAILURE
    return EXIT_FAILURE


# --- tune -------------------------------------------------------------------

def tune_config(args) -> dict:
    return {
        "data": str(Path(args.data).resolve()),
        "response": args.response,
        "columns": args.columns.split(",") if args.columns else None,
        "scheme": args.scheme,
        "b": args.b,
        "seed": args.seed,
        "rules": args.rules.split(","),
        "n_lambda": args.n_lambda,
        "lambda_ratio": args.lambda_ratio,
        "normalize_weights": not args.raw_weights,
        "cv_repeats": args.cv_repeats,
        "ebic_gamma": args.ebic_gamma,
        "truth": args.truth.split(",") if args.truth else None,
    }


def run_tune(cfg: dict, out: Path, threads: int) -> dict:
    rules = tuple(cfg["rules"])
    bad = set(rules) - {"min", "one_se", "ebic"}
    if bad or "min" not in rules:
        raise ConfigError(f"--rules must include min and be drawn from min,one_se,ebic; got {rules}")
    kind, _ = parse_method(cfg["scheme"])
    if kind == "ebic":
        raise ConfigError("use --rules min,ebic to add an EBIC selection")
    data = read_dataset_csv(cfg["data"], cfg["response"], cfg["columns"])
    grid = compute_lambda_grid(data, cfg["n_lambda"], cfg["lambda_ratio"])
    res = run_method(cfg["scheme"], data, grid, None, seed=cfg["seed"], b=cfg["b"],
                     cv_repeats=cfg["cv_repeats"], normalize_weights=cfg["normalize_weights"],
                     threads=threads, rules=tuple(r for r in rules if r != "ebic"))
    rows = list(res.rows())
    if "ebic" in rules:
        lam = select_lambda_ebic(res.path, compute_ebic(data, res.path, cfg["ebic_gamma"]))
        k = res.path.index_of(lam)
        rows.append(("ebic", lam, len(res.path.active_set(k)), res.rho, res.method))

    artifacts = {}
    c = res.curve
    artifacts["mspe_curve"] = str(write_csv(
        out / "mspe_curve.csv", ["lambda", "total_mspe", "mean_mspe", "se"],
        zip(c.lambdas, c.total_mspe, c.mean_mspe, c.se)))
    comments = []
    if kind == "weights" and "one_se" in rules:
        comments.append("one_se for a weighted-bootstrap scheme uses the across-replicate "
                        "standard error of the u-normalized MSPE")
    artifacts["tuning_result"] = str(write_csv(
        out / "tuning_result.csv", ["rule", "lambda", "n_nonzero", "rho", "scheme"], rows,
        comments=comments))

    coef_rows = []
    raw = {}
    for rule, lam, *_ in rows:
        k = res.path.index_of(lam)
        raw[rule] = data.to_raw_scale(res.path.betas[k], res.path.intercepts[k])
    coef_rows.append(["(intercept)"] + [raw[r[0]][0] for r in rows])
    for j in range(data.p):
        coef_rows.append([data.column_name(j)] + [raw[r[0]][1][j] for r in rows])
    artifacts["coefficients"] = str(write_csv(
        out / "coefficients.csv", ["term"] + [r[0] for r in rows], coef_rows))

    if cfg.get("truth"):
        names = [data.column_name(j) for j in range(data.p)]
        unknown = [t for t in cfg["truth"] if t not in names]
        if unknown:
            raise ConfigError(f"--truth names unknown columns {unknown}")
        curve = mcc_curve(res.path, [names.index(t) for t in cfg["truth"]])
        artifacts["mcc_curve"] = str(write_csv(
            out / "mcc_curve.csv", ["lambda", "mcc", "n_nonzero"],
            zip(curve.lambdas, curve.mcc, curve.n_nonzero)))
    return {
        "artifacts": artifacts,
        "rho": res.rho,
        "method": res.method,
        "b_effective": res.b_effective,
        "discarded_replicates": res.discarded_replicates,
        "selections": {r[0]: r[1] for r in rows},
    }


# --- simulate ---------------------------------------------------------------

SIM_KEYS = {
    "seed", "n_replications", "dataset", "response", "truth_folds", "truth_repeats",
    "truth_rule", "cv_folds", "cv_repeats", "mofn", "paired", "kfold_weights", "beta",
    "ebic_gamma", "b", "n_lambda", "lambda_ratio", "normalize_weights",
}


def _typed(raw: dict, key: str, conv, default=None, required=False):
    if key not in raw:
        if required:
            raise ConfigError(f"missing required key {key!r}", key=key)
        return default
    value, line = raw[key]
    try:
        return conv(value)
    except (ValueError, InvalidScheme) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})", line=line, key=key) from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _list(text: str, sep=",") -> list[str]:
    return [s.strip() for s in text.split(sep) if s.strip()]


def parse_sim_config(text: str, base_dir: Path | None = None) -> dict:
    """Resolve a ``key = value`` simulation config into a plain dict."""
    raw = parse_kv_config(text)
    for key, (_, line) in raw.items():
        if key not in SIM_KEYS:
            raise ConfigError(f"unknown key {key!r}", line=line, key=key)
    seed = _typed(raw, "seed", int, required=True)
    dataset = _typed(raw, "dataset", str, "diabetes")
    if dataset != "diabetes":
        path = Path(dataset)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        dataset = str(path.resolve())

    methods = []
    for k in _typed(raw, "cv_folds", _list, ["3", "5", "10", "n"]):
        methods.append("cv:loo" if k.lower() in ("n", "loo") else f"cv:{int(k)}")
    for f in _typed(raw, "mofn", _list, ["0.25", "0.5", "0.75", "1"]):
        methods.append(f"mofn:{float(f):g}")
    if _typed(raw, "paired", _bool, False):
        methods.append("paired")
    for k in _typed(raw, "kfold_weights", _list, []):
        methods.append(f"kfold:{int(k)}")
    default_beta = [f"{4 * r / 10:g},{4 - 4 * r / 10:g}" for r in range(1, 10)]
    for pair in _typed(raw, "beta", lambda t: _list(t, ";"), default_beta):
        methods.append(f"beta:{pair}")
    for g in _typed(raw, "ebic_gamma", _list, ["1"]):
        methods.append(f"ebic:{float(g):g}")
    for m in methods:
        try:
            parse_method(m)
        except (ValueError, InvalidScheme) as exc:
            raise ConfigError(f"invalid method {m!r}: {exc}") from None

    truth_rule = _typed(raw, "truth_rule", str, "min")
    if truth_rule not in ("min", "one_se"):
        raise ConfigError("truth_rule must be min or one_se", line=raw["truth_rule"][1],
                          key="truth_rule")
    return {
        "seed": seed,
        "n_replications": _typed(raw, "n_replications", int, 50),
        "dataset": dataset,
        "response": _typed(raw, "response", str, "y"),
        "truth_folds": _typed(raw, "truth_folds", int, 10),
        "truth_repeats": _typed(raw, "truth_repeats", int, 10),
        "truth_rule": truth_rule,
        "cv_repeats": _typed(raw, "cv_repeats", int, 1),
        "b": _typed(raw, "b", int, 200),
        "n_lambda": _typed(raw, "n_lambda", int, DEFAULT_N_LAMBDA),
        "lambda_ratio": _typed(raw, "lambda_ratio", float, DEFAULT_LAMBDA_RATIO),
        "normalize_weights": _typed(raw, "normalize_weights", _bool, True),
        "methods": methods,
    }


def run_simulate(cfg: dict, out: Path, threads: int) -> dict:
    if cfg["dataset"] == "diabetes":
        data = load_diabetes_quadratic()
    else:
        data = read_dataset_csv(cfg["dataset"], cfg["response"])
    sim_cfg = SimulationConfig(
        data=data, seed=cfg["seed"], n_replications=cfg["n_replications"],
        truth_rule=TruthRule("cv", cfg["truth_folds"], cfg["truth_repeats"], cfg["truth_rule"]),
        methods=tuple(cfg["methods"]), cv_repeats=cfg["cv_repeats"], b=cfg["b"],
        n_lambda=cfg["n_lambda"], lambda_ratio=cfg["lambda_ratio"],
        normalize_weights=cfg["normalize_weights"], dataset_label=cfg["dataset"],
    )
    result = run_simulation_study(
        sim_cfg, threads=threads,
        progress=lambda rep: log.info("replication %d/%d done", rep + 1, cfg["n_replications"]))
    artifacts = {}
    artifacts["cells"] = str(write_csv(
        out / "cells.csv",
        ["replication", "method", "rule", "lambda", "lambda_index", "n_nonzero", "mcc", "rho",
         "error"],
        ((c.replication, c.method, c.rule, c.lam, c.lambda_index, c.n_nonzero, c.mcc, c.rho,
          c.error) for c in result.cells)))
    cols = ["method", "rule", "n_ok", "n_failed", "median_lambda", "iqr_lambda",
            "median_lambda_index", "median_n_nonzero", "median_mcc", "rho"]
    artifacts["summary"] = str(write_csv(
        out / "summary.csv", cols,
        ([row.get(c, "") for c in cols] for row in result.summary())))
    truth = result.truth
    artifacts["truth"] = str(write_csv(
        out / "truth.csv", ["index", "name", "beta"],
        ((j, data.column_name(j), truth.beta[j]) for j in truth.support),
        comments=[f"lambda = {truth.lam!r}", f"sigma = {truth.sigma!r}",
                  f"support_size = {len(truth.support)}"]))
    artifacts["mcc_curve"] = str(write_csv(
        out / "mcc_curve.csv", ["replication", "lambda", "mcc", "n_nonzero"],
        ((rep, lam, m, s) for rep, curve in result.mcc_curves.items()
         for lam, m, s in zip(curve.lambdas, curve.mcc, curve.n_nonzero))))
    return {"artifacts": artifacts, "truth_support_size": len(truth.support),
            "truth_sigma": truth.sigma}


# --- weights-preview --------------------------------------------------------

def run_weights_preview(cfg: dict, out: Path, threads: int) -> dict:
    scheme = WeightScheme.parse(cfg["scheme"])
    if cfg["n"] < 2 or cfg["replicates"] < 1:
        raise ConfigError("--n must be >= 2 and --replicates >= 1")
    train, test, rho = sorted_weight_profile(scheme, cfg["n"], cfg["replicates"], cfg["seed"])
    artifacts = {}
    for name, prof in (("training", train), ("test", test)):
        artifacts[f"{name}_profile"] = str(write_csv(
            out / f"{name}_profile.csv", ["rank", "mean_weight", "scheme", "rho"],
            ((i + 1, v, scheme.label, rho) for i, v in enumerate(prof)),
            comments=[f"{name} weights, {cfg['replicates']} replicates, n = {cfg['n']}",
                      f"rho = {rho!r}"]))
    return {"artifacts": artifacts, "rho": rho}


COMMANDS = {"tune": run_tune, "simulate": run_simulate, "weights-preview": run_weights_preview}


def execute(command: str, cfg: dict, out: Path, threads: int, argv=None) -> int:
    """Run one command and write ``manifest.json`` whatever the outcome."""
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    manifest = {
        "tool": BUILD_ID,
        "command": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "threads": threads,
        "argv": list(argv) if argv is not None else None,
    }
    code = EXIT_OK
    try:
        info = COMMANDS[command](cfg, out, threads)
        manifest.update(info)
        manifest["status"] = "ok"
    except (BootLassoError, OSError, ValueError) as exc:
        code = _exit_code(exc)
        manifest["status"] = "error"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        print(f"error: {exc}", file=sys.stderr)
    manifest["exit_code"] = code
    manifest["duration_seconds"] = time.perf_counter() - start
    manifest.setdefault("artifacts", {})
    with (out / "manifest.json").open("w") as fh:
        json.dump(manifest, fh, indent=2, default=_json_default)
        fh.write("\n")
    return code


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bootlasso", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=BUILD_ID)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $BOOTLASSO_THREADS or CPU count)")

    t = sub.add_parser("tune", help="tune lambda on a CSV dataset")
    t.add_argument("data", help="CSV with a header row of numeric columns")
    t.add_argument("--response", required=True)
    t.add_argument("--columns", help="comma-separated covariates (default: all but response)")
    t.add_argument("--scheme", default="beta:2,2",
                   help="beta:a,b | kfold:k | paired | mofn:f | cv:k | cv:loo")
    t.add_argument("--b", type=int, default=200, help="bootstrap replicates")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--rules", default="min,one_se", help="subset of min,one_se,ebic")
    t.add_argument("--n-lambda", type=int, default=DEFAULT_N_LAMBDA)
    t.add_argument("--lambda-ratio", type=float, default=DEFAULT_LAMBDA_RATIO)
    t.add_argument("--raw-weights", action="store_true",
                   help="fit on raw training weights instead of rescaling them to sum to n")
    t.add_argument("--cv-repeats", type=int, default=1, help="repeats for cv:k schemes")
    t.add_argument("--ebic-gamma", type=float, default=1.0)
    t.add_argument("--truth", help="comma-separated true-support columns; writes mcc_curve.csv")
    common(t)

    s = sub.add_parser("simulate", help="run a simulation study from a config file")
    s.add_argument("config", help="key = value config file (see README)")
    common(s)

    w = sub.add_parser("weights-preview", help="sorted training/test weight profiles")
    w.add_argument("--scheme", required=True)
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--replicates", type=int, default=200)
    w.add_argument("--seed", type=int, default=0)
    common(w)

    r = sub.add_parser("rerun", help="repeat the run recorded in a manifest")
    r.add_argument("manifest", type=Path)
    common(r)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        parser.error("--threads must be >= 1")
    out = args.out

    if args.command == "rerun":
        try:
            manifest = json.loads(args.manifest.read_text())
            command, cfg = manifest["command"], manifest["config"]
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot read manifest {args.manifest}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        return execute(command, cfg, out, threads, argv)

    if args.command == "tune":
        cfg = tune_config(args)
    elif args.command == "simulate":
        path = Path(args.config)
        try:
            cfg = parse_sim_config(path.read_text(), base_dir=path.parent)
        except (ConfigError, OSError) as exc:
            out.mkdir(parents=True, exist_ok=True)
            print(f"error: {path}: {exc}", file=sys.stderr)
            return execute_failed("simulate", {"config_path": str(path)}, out, threads, argv, exc)
        cfg["config_path"] = str(path.resolve())
    else:
        cfg = {"scheme": args.scheme, "n": args.n, "replicates": args.replicates,
               "seed": args.seed}
    return execute(args.command, cfg, out, threads, argv)


def execute_failed(command, cfg, out, threads, argv, exc) -> int:
    """Write the manifest for a run that failed before it could start."""
    code = _exit_code(exc)
    manifest = {"tool": BUILD_ID, "command": command, "config": cfg, "seed": None,
                "threads": threads, "argv": list(argv), "status": "error",
                "error": f"{type(exc).__name__}: {exc}", "exit_code": code,
                "duration_seconds": 0.0, "artifacts": {}}
    with (out / "manifest.json").open("w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return code


def bundled_config(name: str = "diabetes_sim.cfg") -> Path:
    """Path of a config file shipped with the package."""
    return Path(str(resources.files("bootlasso") / "data" / name))


if __name__ == "__main__":
    sys.exit(main())
