"""Command-line entry point.

Exit codes: 0 success, 1 computation failure, 2 usage or schema error.
Option precedence: command-line flag > ``--config`` JSON file > built-in default.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .cuts import CcpConfig
from .dist import JointModel, SchemaSpec, estimate_joint, load_dataset
from .errors import (
    DegenerateDistributionError,
    FairFrontError,
    OracleCapError,
    ParseError,
    RangeError,
    SchemaError,
)
from .experiments import (
    MISSING_COLUMNS,
    SWEEP_COLUMNS,
    RunManifest,
    curves_svg,
    dump_json,
    file_sha256,
    frontier_document,
    frontier_summary,
    missing_rows,
    missing_study,
    oracle_document,
    rows_to_csv,
    sweep_document,
    sweep_rows,
    with_seed,
    write_atomic,
)
from .fairness import Thresholds, fairness_constraints
from .frontier import FrontierConfig, approximate_frontier, sweep
from .lp import format_lp
from .master import build_master
from .oracle import DEFAULT_VARIABLE_CAP

log = logging.getLogger("fairfront")

DEFAULTS = {
    "alpha_sp": 1.0,
    "alpha_eo": 1.0,
    "alpha_oae": 1.0,
    "k": 6,
    "iters": 20,
    "restarts": 16,
    "ccp_iters": 100,
    "eps_stop": 1e-7,
    "seed": 0,
    "metric": "eo",
    "grid": None,
    "p0": "0.1,0.5,0.7",
    "p1": 0.1,
    "cap": DEFAULT_VARIABLE_CAP,
    "reuse_cuts": False,
    "oracle": False,
    "svg": False,
    "baseline": False,
    "group0": None,
    "threads": None,
}


class UsageError(Exception):
    pass


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None
    return vals


def _add_data_args(p):
    p.add_argument("--data", help="input CSV")
    p.add_argument("--schema", help="schema JSON")
    p.add_argument("--joint", help="joint-model JSON written by 'estimate' (instead of --data/--schema)")


def _add_solver_args(p):
    p.add_argument("--k", type=int, help="pieces per cut (default 6)")
    p.add_argument("--iters", type=int, help="outer iteration cap T (default 20)")
    p.add_argument("--restarts", type=int, help="cut-search restarts (default 16)")
    p.add_argument("--ccp-iters", dest="ccp_iters", type=int, help="inner CCP iterations (default 100)")
    p.add_argument("--eps-stop", dest="eps_stop", type=float, help="violation threshold (default 1e-7)")
    p.add_argument("--reuse-cuts", dest="reuse_cuts", action="store_true", default=None,
                   help="carry the cut pool across sweep points")
    p.add_argument("--threads", type=int, help="parallel sweep points (default: FAIRFRONT_THREADS or 1)")


def _add_threshold_args(p):
    p.add_argument("--alpha-sp", dest="alpha_sp", type=float)
    p.add_argument("--alpha-eo", dest="alpha_eo", type=float)
    p.add_argument("--alpha-oae", dest="alpha_oae", type=float)


def _add_common(p):
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairfront", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate and save the joint model")
    _add_data_args(p)
    _add_common(p)

    p = sub.add_parser("frontier", help="upper bound at one threshold setting")
    _add_data_args(p)
    _add_threshold_args(p)
    _add_solver_args(p)
    _add_common(p)
    p.add_argument("--oracle", action="store_true", default=None, help="also compute the exact value")
    p.add_argument("--dump-constraints", dest="dump_constraints", action="store_true",
                   help="write the compiled fairness constraints")
    p.add_argument("--dump-lp", dest="dump_lp", action="store_true", help="write the final master LP as text")

    p = sub.add_parser("sweep", help="frontier over a threshold grid")
    _add_data_args(p)
    _add_threshold_args(p)
    _add_solver_args(p)
    _add_common(p)
    p.add_argument("--metric", choices=["sp", "eo", "oae"])
    p.add_argument("--grid", help="comma-separated threshold values, ascending")
    p.add_argument("--with-oracle", "--oracle", dest="oracle", action="store_true", default=None)
    p.add_argument("--svg", action="store_true", default=None, help="also write a static SVG chart")

    p = sub.add_parser("missing-study", help="frontier under group-dependent missing values")
    _add_data_args(p)
    _add_threshold_args(p)
    _add_solver_args(p)
    _add_common(p)
    p.add_argument("--metric", choices=["sp", "eo", "oae"])
    p.add_argument("--grid", help="comma-separated threshold values, ascending")
    p.add_argument("--p0", help="comma-separated erase probabilities for group 0")
    p.add_argument("--p1", type=float, help="erase probability for group 1")
    p.add_argument("--group0", help="group label treated as group 0 (default: first seen)")
    p.add_argument("--baseline", action="store_true", default=None, help="add a branch without injection")
    p.add_argument("--svg", action="store_true", default=None)

    p = sub.add_parser("oracle", help="exact frontier via the finite-support LP")
    _add_data_args(p)
    _add_threshold_args(p)
    _add_common(p)
    p.add_argument("--cap", type=int, help="maximum LP variables (default 20000)")

    p = sub.add_parser("synth", help="write a synthetic two-group CSV and schema")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--rows", type=int, default=20000)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--verbose", action="store_true")
    return parser


def resolve(args) -> dict:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    return opts


def _thresholds(o) -> Thresholds:
    try:
        return Thresholds(sp=float(o["alpha_sp"]), eo=float(o["alpha_eo"]), oae=float(o["alpha_oae"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _frontier_cfg(o) -> FrontierConfig:
    try:
        ccp = CcpConfig(k=int(o["k"]), restarts=int(o["restarts"]), max_iter=int(o["ccp_iters"]),
                        eps_stop=float(o["eps_stop"]))
        cfg = FrontierConfig(ccp=ccp, max_iter=int(o["iters"]), reuse_cuts=bool(o["reuse_cuts"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return with_seed(cfg, int(o["seed"]))


def _inputs(o) -> dict:
    return {k: {"path": o[k], "sha256": file_sha256(o[k])} for k in ("data", "schema", "joint") if o.get(k)}


def _load_raw(o):
    if not (o.get("data") and o.get("schema")):
        raise UsageError("--data and --schema are required")
    schema = SchemaSpec.from_json(o["schema"])
    return load_dataset(o["data"], schema)


def _load_joint(o) -> JointModel:
    if o.get("joint"):
        return JointModel.from_dict(json.loads(Path(o["joint"]).read_text(encoding="utf-8")))
    return estimate_joint(_load_raw(o))


def _echo(o) -> dict:
    skip = {"command", "config", "verbose", "out_dir", "data", "schema", "joint"}
    return {k: v for k, v in sorted(o.items()) if k not in skip}


def cmd_estimate(o, out: Path) -> dict:
    jm = _load_joint(o)
    doc = {"format_version": 1, "kind": "joint_model", "dataset_hash": jm.digest(), **jm.to_dict()}
    return {"joint.json": write_atomic(out / "joint.json", dump_json(doc))}


def cmd_frontier(o, out: Path) -> dict:
    jm = _load_joint(o)
    th = _thresholds(o)
    cfg = _frontier_cfg(o)
    point = approximate_frontier(jm, th, cfg)
    doc = frontier_document(jm, point, cfg, with_oracle=bool(o["oracle"]), verbose=bool(o["verbose"]))
    written = {
        "frontier.json": write_atomic(out / "frontier.json", dump_json(doc)),
        "summary.txt": write_atomic(out / "summary.txt", frontier_summary(doc)),
    }
    if o.get("dump_constraints"):
        cons = fairness_constraints(jm.mu, jm.mu_group, th)
        written["constraints.json"] = write_atomic(
            out / "constraints.json", dump_json({"format_version": 1, **cons.to_dict()}))
    if o.get("dump_lp"):
        written["master_lp.txt"] = write_atomic(out / "master_lp.txt", format_lp(build_master(jm, th, point.pool)))
    sys.stdout.write(frontier_summary(doc))
    return written


def _grid(o) -> list[float]:
    if o.get("grid") is None:
        raise UsageError("--grid is required")
    grid = _float_list(o["grid"])
    if not grid:
        raise UsageError("--grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise UsageError("--grid must be ascending")
    if any(a < 0 for a in grid):
        raise UsageError("thresholds must be nonnegative")
    return grid


def cmd_sweep(o, out: Path) -> dict:
    grid = _grid(o)
    jm = _load_joint(o)
    cfg = _frontier_cfg(o)
    res = sweep(jm, o["metric"], grid, cfg, _thresholds(o), o.get("threads"))
    cols = SWEEP_COLUMNS + (["exact_value", "gap"] if o["oracle"] else [])
    rows = sweep_rows(res, jm, with_oracle=bool(o["oracle"]))
    written = {
        "sweep.csv": write_atomic(out / "sweep.csv", rows_to_csv(rows, cols, "sweep")),
        "sweep.json": write_atomic(out / "sweep.json", dump_json(sweep_document(res, bool(o["verbose"])))),
    }
    if o["svg"]:
        curves = {"upper bound": (res.grid, res.values.tolist())}
        if o["oracle"]:
            curves["exact"] = (res.grid, [r["exact_value"] for r in rows])
        written["sweep.svg"] = write_atomic(out / "sweep.svg", curves_svg(curves, f"alpha_{o['metric']}"))
    for r in rows:
        print(f"{o['metric']}={r['alpha']:g}\tvalue={r['value']:.6f}\t{r['terminated_by']}")
    failed = any(p.failed for p in res.points)
    return written if not failed else {**written, "_failed": True}


def cmd_missing_study(o, out: Path) -> dict:
    grid = _grid(o)
    p0 = _float_list(o["p0"])
    p1 = float(o["p1"])
    if not p0:
        raise UsageError("--p0 is empty")
    for p in [*p0, p1]:
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"erase probability {p} outside [0, 1]")
    data = _load_raw(o)
    if data.A != 2:
        raise UsageError(f"missing-data study needs two groups, found {data.A}")
    group0 = 0
    if o.get("group0") is not None:
        if o["group0"] not in data.group_labels:
            raise UsageError(f"unknown group {o['group0']!r}; have {list(data.group_labels)}")
        group0 = data.group_labels.index(o["group0"])
    branches = missing_study(data, p0, p1, o["metric"], grid, _frontier_cfg(o), _thresholds(o),
                             int(o["seed"]), group0=group0, baseline=bool(o["baseline"]),
                             workers=o.get("threads"))
    written, combined = {}, []
    for b in branches:
        rows = missing_rows(b)
        combined += rows
        name = "missing_baseline.csv" if b.p0 is None else f"missing_p0_{b.p0:g}.csv"
        written[name] = write_atomic(out / name, rows_to_csv(rows, MISSING_COLUMNS, "missing-study"))
    written["missing_comparison.csv"] = write_atomic(
        out / "missing_comparison.csv", rows_to_csv(combined, MISSING_COLUMNS, "missing-study"))
    if o["svg"]:
        curves = {b.label: (b.result.grid, b.result.values.tolist()) for b in branches}
        written["missing_study.svg"] = write_atomic(out / "missing_study.svg",
                                                    curves_svg(curves, f"alpha_{o['metric']}"))
    for r in combined:
        print(f"p0={_fmt_opt(r['p0'])}\t{o['metric']}={r['alpha']:g}\tvalue={r['value']:.6f}")
    return written


def _fmt_opt(v):
    return "none" if v is None else f"{v:g}"


def cmd_oracle(o, out: Path) -> dict:
    jm = _load_joint(o)
    doc = oracle_document(jm, _thresholds(o), int(o["cap"]))
    print(f"exact value {doc['value']:.6f}  (Bayes accuracy {doc['bayes_accuracy']:.6f})")
    return {"oracle.json": write_atomic(out / "oracle.json", dump_json(doc))}


def cmd_synth(o, out: Path) -> dict:
    from .synthetic import INFORMATIVE_SCHEMA, write_informative_csv

    out.mkdir(parents=True, exist_ok=True)
    write_informative_csv(out / "data.csv", n=int(o["rows"]), seed=int(o["seed"]))
    return {
        "data.csv": file_sha256(out / "data.csv"),
        "schema.json": write_atomic(out / "schema.json", dump_json(INFORMATIVE_SCHEMA)),
    }


COMMANDS = {
    "estimate": cmd_estimate,
    "frontier": cmd_frontier,
    "sweep": cmd_sweep,
    "missing-study": cmd_missing_study,
    "oracle": cmd_oracle,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    try:
        o = resolve(args)
        out = Path(o["out_dir"])
        written = COMMANDS[args.command](o, out)
        failed = written.pop("_failed", False)
        RunManifest(args.command, _echo(o), _inputs(o), int(o["seed"]), started, written).write(out)
    except (UsageError, SchemaError, ParseError, RangeError) as exc:
        print(f"fairfront: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OracleCapError, DegenerateDistributionError, FairFrontError, ValueError) as exc:
        print(f"fairfront: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fairfront: error: {exc}", file=sys.stderr)
        return 2
    except ImportError as exc:
        print(f"fairfront: error: {exc.name} is needed for this option (pip install 'artifact[plot]')",
              file=sys.stderr)
        return 2
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
