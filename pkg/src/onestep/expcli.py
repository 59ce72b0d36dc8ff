"""Command-line experiment runner.

Each subcommand runs one study and writes a CSV whose ``#`` header records
the full configuration, so rerunning with the same arguments reproduces the
file byte for byte (timing benchmarks excepted).

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from onestep import __version__, kernels, models, privacy, studies, synth
from onestep.models import EstimationError
from onestep.randcore import DEFAULT_SEED, SeedStream

logger = logging.getLogger("onestep")

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

PARTIAL_NOTE = "partially synthetic; θ̂_X released exactly"

# desk-scale defaults, then the full-scale values restored by --full
DEFAULTS = {
    "burr-ks": {"n_grid": [100, 1000], "reps": 2000},
    "loglinear": {"n_grid": [100, 1000, 10000], "reps": 200},
    "beta-dp": {"n_grid": [1000, 10000, 100000], "reps": 100},
    "dp2prop-null": {"reps": 1000, "outer": 2000},
    "dp2prop-power": {"reps": 1000, "outer": 2000, "theta_y": [0.30, 0.35, 0.40, 0.45, 0.50]},
    "bench-mcmc": {"n_grid": [2 ** k for k in range(6, 13)], "sweeps": 10, "reps": 100},
}
FULL = {
    "burr-ks": {"n_grid": [100, 1000, 10000], "reps": 10000},
    "loglinear": {"n_grid": [100, 1000, 10000, 100000], "reps": 200},
    "beta-dp": {"n_grid": [1000, 10000, 100000, 1000000], "reps": 200},
    "dp2prop-null": {"outer": 10000},
    "dp2prop-power": {"outer": 10000},
    "bench-mcmc": {"n_grid": [2 ** k for k in range(6, 15)], "sweeps": 100, "reps": 1000},
}
COMMON = {"seed": DEFAULT_SEED, "alpha": 0.05, "epsilon": 1.0, "threads": 1}


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    common.add_argument("--reps", type=int, help="replicates (inner Monte Carlo size for dp2prop)")
    common.add_argument("--alpha", type=float, help="test level (default 0.05)")
    common.add_argument("--epsilon", type=float, help="privacy budget (default 1.0)")
    common.add_argument("--n-grid", type=_int_list, dest="n_grid", help="comma-separated sample sizes")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--threads", type=int, help="worker processes for replicates (default 1)")
    common.add_argument("--full", action="store_true", help="full-scale settings (slow)")
    common.add_argument("--config", help="JSON file of option values; flags override it")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="onestep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("burr-ks", parents=[common], help="K-S power for Burr(2,4) samples")
    sub.add_parser("loglinear", parents=[common], help="log-linear seatbelt error curves")
    sub.add_parser("beta-dp", parents=[common], help="DP beta error curves")
    for name in ("dp2prop-null", "dp2prop-power", "dp2prop"):
        p = sub.add_parser(name, parents=[common], help="private two-sample proportion test")
        p.add_argument("--n", type=int, help="control sample size (default 200)")
        p.add_argument("--m", type=int, help="treatment sample size (default 200)")
        p.add_argument("--theta-x", type=float, dest="theta_x", help="control proportion (default 0.3)")
        p.add_argument("--outer", type=int, help="outer replicates")
        if name != "dp2prop-null":
            p.add_argument("--theta-y", type=_float_list, dest="theta_y", help="treatment proportions")
    b = sub.add_parser("bench-mcmc", parents=[common], help="MCMC vs one-step timing")
    b.add_argument("--sweeps", type=int, help="MCMC rounds per timed call")
    b.add_argument("--step", type=float, help="proposal sd (default 0.1)")
    s = sub.add_parser("synth", parents=[common], help="one-step synthetic copy of a CSV dataset")
    s.add_argument("--input", required=False, help="input CSV")
    s.add_argument("--model", choices=sorted(list(models.MODELS) + ["regression"]), help="model family")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, ``--full``, the config file and explicit flags."""
    command = "dp2prop-power" if args.command == "dp2prop" else args.command
    cfg = dict(COMMON)
    cfg.update({"n": 200, "m": 200, "theta_x": 0.3, "step": 0.1})
    cfg.update(DEFAULTS.get(command, {}))
    if args.full:
        cfg.update(FULL.get(command, {}))
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config", "full", "verbose"):
            cfg[key] = value
    cfg["command"] = command
    cfg["full"] = bool(args.full)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if "reps" in cfg and cfg["reps"] < 1:
        raise UsageError("--reps must be >= 1")
    if not 0 < cfg["alpha"] < 1:
        raise UsageError("--alpha must be in (0, 1)")
    if not cfg["epsilon"] > 0:
        raise UsageError("--epsilon must be > 0")
    grid = cfg.get("n_grid")
    if grid is not None and (not grid or list(grid) != sorted(grid) or min(grid) < 1):
        raise UsageError("--n-grid must be a nonempty ascending list of positive integers")
    if cfg["command"].startswith("dp2prop") and cfg["reps"] < 100:
        raise UsageError("dp2prop needs --reps >= 100 inner replicates")


def _metadata(cfg) -> dict:
    meta = {"onestep_version": __version__, "kernel_backend": kernels.BACKEND}
    for key in sorted(cfg):
        if key not in ("out", "threads", "verbose"):
            meta[key] = json.dumps(cfg[key])
    return meta


def run_experiment(cfg: dict) -> studies.ResultTable:
    """Run the study named by ``cfg["command"]`` and return its table."""
    command = cfg["command"]
    stream = SeedStream(cfg["seed"])
    threads = cfg["threads"]
    if command == "burr-ks":
        table = studies.burr_ks(cfg["n_grid"], cfg["reps"], cfg["alpha"], stream, threads)
    elif command == "loglinear":
        table = studies.loglinear(cfg["n_grid"], cfg["reps"], stream, threads)
        table.metadata.update({f"slope_{k}": repr(v) for k, v in studies.loglog_slopes(table, "estimator").items()})
    elif command == "beta-dp":
        table = studies.beta_dp(cfg["n_grid"], cfg["reps"], cfg["epsilon"], stream, threads)
        table.metadata.update({f"slope_{k}": repr(v) for k, v in studies.loglog_slopes(table, "estimator").items()})
    elif command == "dp2prop-null":
        table, _ = studies.dp2prop_null(cfg["n"], cfg["m"], cfg["theta_x"], cfg["epsilon"], cfg["outer"],
                                        cfg["reps"], stream, threads)
    elif command == "dp2prop-power":
        table = studies.dp2prop_power(cfg["n"], cfg["m"], cfg["theta_x"], cfg["theta_y"], cfg["epsilon"],
                                      cfg["alpha"], cfg["outer"], cfg["reps"], stream, threads)
    elif command == "bench-mcmc":
        # timing runs stay serial to avoid contention
        table = studies.bench_mcmc(cfg["n_grid"], cfg["sweeps"], cfg["reps"], cfg["step"], stream)
    else:
        raise UsageError(f"unknown experiment {command!r}")
    table.metadata = {**_metadata(cfg), **table.metadata}
    return table


# ---------------------------------------------------------------- synth

def read_dataset(path, model_name: str):
    """Parse an input CSV for ``model_name``; returns ``(model, data, extra_columns)``.

    Scalar models read column ``x``; regression reads ``y`` and the design
    columns ``z1, z2, ...``; the log-linear model reads the seatbelt layout.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if model_name == "loglinear":
        try:
            return models.LogLinear(), models.read_loglinear_counts(text.splitlines(keepends=True)), None
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
    lines = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    fields = reader.fieldnames or []
    if model_name == "regression":
        zcols = sorted((f for f in fields if f.startswith("z") and f[1:].isdigit()), key=lambda f: int(f[1:]))
        if "y" not in fields or not zcols:
            raise UsageError(f"{path}: regression input needs columns y, z1, ..., zd")
        cols = ["y"] + zcols
    else:
        if "x" not in fields:
            raise UsageError(f"{path}: {model_name} input needs a column named x")
        cols = ["x"]
    values = []
    for rowno, row in enumerate(reader, start=2):
        try:
            values.append([float(row[c]) for c in cols])
        except (TypeError, ValueError):
            raise UsageError(f"{path}: row {rowno}: non-numeric value in columns {cols}") from None
    if not values:
        raise UsageError(f"{path}: no data rows")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{path}: non-finite values")
    if model_name == "regression":
        return models.LinearRegression(arr[:, 1:]), arr[:, 0], (zcols, arr[:, 1:])
    return models.MODELS[model_name](), arr[:, 0], None


def synth_command(cfg: dict) -> str:
    """One-step synthetic copy of the input; returns the CSV text."""
    if not cfg.get("input") or not cfg.get("model"):
        raise UsageError("synth needs --input and --model")
    model, data, extra = read_dataset(cfg["input"], cfg["model"])
    stream = SeedStream(cfg["seed"])
    dp = cfg.get("epsilon_given", False)
    try:
        if dp:
            if cfg["model"] != "beta":
                raise UsageError("DP synthesis (--epsilon) is available for the beta model only")
            theta_hat_x = privacy.dp_beta_estimate(data, cfg["epsilon"], stream.child(0))
            note = f"fully synthetic; epsilon-DP with epsilon={cfg['epsilon']!r}"
        else:
            theta_hat_x = model.project(model.estimate(data))
            note = PARTIAL_NOTE
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"{cfg['input']}: data outside the {cfg['model']} support ({exc})") from None
    logger.info("synth mode: %s", note)
    result = synth.one_step(model, theta_hat_x, model.n_obs(data), stream.child(1))

    meta = {"onestep_version": __version__, "model": cfg["model"], "seed": cfg["seed"],
            "n": model.n_obs(data), "mode": note,
            "theta_hat_x": json.dumps(result.theta_hat_x.tolist()),
            "theta_star": json.dumps(result.theta_star.tolist()),
            "theta_hat_y": json.dumps(result.theta_hat_y.tolist()),
            "projected": result.projected}
    if cfg["model"] == "loglinear":
        rows = []
        for idx, count in enumerate(result.data):
            levels = [models.LEVELS[f][(idx >> (3 - f)) & 1] for f in range(4)]
            rows.append(levels + [int(count)])
        table = studies.ResultTable(list(models.FACTORS) + ["count"], rows, meta)
    elif cfg["model"] == "regression":
        zcols, design = extra
        rows = [[float(y)] + [float(v) for v in z] for y, z in zip(result.data, design)]
        table = studies.ResultTable(["y"] + zcols, rows, meta)
    else:
        table = studies.ResultTable(["x"], [[float(v)] for v in result.data], meta)
    return table.to_csv()


# ---------------------------------------------------------------- entry point

def _write(text: str, out):
    if out:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot write {out}: {exc}") from None
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        if cfg["command"] == "synth":
            cfg["epsilon_given"] = args.epsilon is not None
            text = synth_command(cfg)
        else:
            text = run_experiment(cfg).to_csv()
        _write(text, cfg.get("out"))
    except UsageError as exc:
        print(f"onestep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EstimationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"onestep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
