"""Experiment drivers and output writers used by the command line.

All files are written atomically (temporary file + rename).  Numerical
outputs carry a ``format_version``; the run manifest is the only file that
contains wall-clock information, so reruns with the same inputs and seed
produce byte-identical result files.

Seed derivation: every consumer of randomness gets
``SeedSequence([seed, crc32(tag)])`` with a fixed tag (``"frontier"``,
``"inject"``), so adding a new consumer never perturbs existing ones.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import tempfile
import time
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dist import Dataset, JointModel, estimate_joint, impute_mode, inject_missing
from .errors import OracleCapError
from .fairness import Thresholds
from .frontier import FrontierConfig, FrontierPoint, SweepResult, sweep
from .oracle import bayes_accuracy, exact_frontier

FORMAT_VERSION = 1


def derive_seed(seed: int, tag: str) -> int:
    ss = np.random.SeedSequence([seed, zlib.crc32(tag.encode())])
    return int(ss.generate_state(1)[0])


# Writers ---------------------------------------------------------------------

def write_atomic(path, data: str | bytes) -> str:
    """Write ``data`` to ``path`` via a temporary file; return its sha256."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(raw).hexdigest()


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict
    seed: int
    started: float
    outputs: dict

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "command": self.command,
            "version": __version__,
            "config": self.config,
            "inputs": self.inputs,
            "seed": self.seed,
            "outputs": self.outputs,
            "started_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(self.started)),
            "wall_clock_seconds": round(time.time() - self.started, 3),
            "python": platform.python_version(),
            "numpy": np.__version__,
        }

    def write(self, out_dir) -> None:
        write_atomic(Path(out_dir) / "manifest.json", dump_json(self.to_dict()))


# Frontier and oracle documents ------------------------------------------------

def frontier_document(jm: JointModel, point: FrontierPoint, cfg: FrontierConfig,
                      with_oracle: bool = False, verbose: bool = False) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "frontier_point",
        "dataset_hash": jm.digest(),
        "A": jm.A, "C": jm.C, "D": jm.D,
        "config": cfg.to_dict(),
        "bayes_accuracy": bayes_accuracy(jm),
        "label_marginal_max": float(jm.label_marginal.max()),
        **point.to_dict(verbose=verbose),
    }
    if with_oracle:
        try:
            ex = exact_frontier(jm, point.thresholds)
            doc["exact_value"] = ex.value
            doc["gap"] = point.value - ex.value
        except OracleCapError as exc:
            doc["exact_value"] = None
            doc["oracle_error"] = str(exc)
    return doc


def frontier_summary(doc: dict) -> str:
    th = doc["thresholds"]
    lines = [
        "fairness Pareto frontier (upper bound)",
        f"  thresholds     SP={th['sp']:g}  EO={th['eo']:g}  OAE={th['oae']:g}",
        f"  support        A={doc['A']}  C={doc['C']}  D={doc['D']}",
        f"  upper bound    {doc['value']:.6f}",
        f"  iterations     {doc['iterations']} ({doc['terminated_by']})",
        f"  cuts in pool   {doc['pool_size']}",
        f"  Bayes accuracy {doc['bayes_accuracy']:.6f}",
        f"  max label mass {doc['label_marginal_max']:.6f}",
    ]
    if doc.get("exact_value") is not None:
        lines.append(f"  exact value    {doc['exact_value']:.6f}  (gap {doc['gap']:.2e})")
    return "\n".join(lines) + "\n"


def oracle_document(jm: JointModel, thresholds: Thresholds, cap: int) -> dict:
    res = exact_frontier(jm, thresholds, cap=cap)
    return {
        "format_version": FORMAT_VERSION,
        "kind": "oracle",
        "dataset_hash": jm.digest(),
        "thresholds": thresholds.to_dict(),
        "bayes_accuracy": bayes_accuracy(jm),
        **res.to_dict(),
    }


# Sweep outputs ----------------------------------------------------------------

SWEEP_COLUMNS = ["alpha", "value", "iterations", "terminated_by", "max_eo_of_P"]


def sweep_rows(result: SweepResult, jm: JointModel | None = None, with_oracle: bool = False) -> list[dict]:
    rows = []
    for alpha, pt in zip(result.grid, result.points):
        d = pt.to_dict()
        row = {
            "alpha": alpha,
            "value": pt.value,
            "iterations": pt.iterations,
            "terminated_by": pt.terminated_by,
            "max_eo_of_P": d["max_eo_of_P"],
        }
        if with_oracle:
            try:
                ex = exact_frontier(jm, pt.thresholds).value
            except OracleCapError:
                ex = None
            row["exact_value"] = ex
            row["gap"] = None if ex is None or pt.failed else pt.value - ex
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[dict], columns: list[str], kind: str) -> str:
    buf = io.StringIO()
    buf.write(f"# fairfront-{kind} format_version={FORMAT_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def sweep_document(result: SweepResult, verbose: bool = False) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "sweep",
        "metric": result.metric,
        "grid": result.grid,
        "metadata": result.metadata,
        "points": [p.to_dict(verbose=verbose) for p in result.points],
    }


def curves_svg(curves: dict[str, tuple[list[float], list[float]]], xlabel: str, ylabel: str = "accuracy") -> str:
    """Static line chart; deterministic bytes for identical input."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "fairfront", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, (xs, ys) in curves.items():
            ax.plot(xs, ys, marker="o", label=label)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(curves) > 1:
            ax.legend()
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return buf.getvalue()


# Missing-data study -------------------------------------------------------------

MISSING_COLUMNS = ["p0", "p1", "alpha", "value", "iterations", "terminated_by", "D", "bayes_accuracy"]


@dataclass
class MissingStudyBranch:
    label: str
    p0: float | None
    p1: float | None
    joint: JointModel
    result: SweepResult


def missing_study(
    data: Dataset,
    p0_list,
    p1: float,
    metric: str,
    grid,
    cfg: FrontierConfig,
    base: Thresholds,
    seed: int,
    group0: int = 0,
    baseline: bool = False,
    workers: int | None = None,
) -> list[MissingStudyBranch]:
    """Inject group-dependent missingness, mode-impute, estimate and sweep.

    Every branch uses the same injection seed, so the erased cells for a
    larger ``p0`` are a superset of those for a smaller one.
    """
    if data.A != 2:
        raise ValueError("the missing-data study needs exactly two groups")
    for p in [*p0_list, p1]:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"erase probability {p} outside [0, 1]")
    inj_seed = derive_seed(seed, "inject")
    branches = []
    todo = [("baseline", None)] if baseline else []
    todo += [(f"p0={p0:g}", p0) for p0 in p0_list]
    for label, p0 in todo:
        if p0 is None:
            d = data
        else:
            probs = np.empty(2)
            probs[group0] = p0
            probs[1 - group0] = p1
            d = impute_mode(inject_missing(data, probs, inj_seed))
        jm = estimate_joint(d)
        res = sweep(jm, metric, grid, cfg, base, workers)
        branches.append(MissingStudyBranch(label, p0, None if p0 is None else p1, jm, res))
    return branches


def missing_rows(branch: MissingStudyBranch) -> list[dict]:
    bayes = bayes_accuracy(branch.joint)
    return [
        {
            "p0": branch.p0,
            "p1": branch.p1,
            "alpha": a,
            "value": pt.value,
            "iterations": pt.iterations,
            "terminated_by": pt.terminated_by,
            "D": branch.joint.D,
            "bayes_accuracy": bayes,
        }
        for a, pt in zip(branch.result.grid, branch.result.points)
    ]


def with_seed(cfg: FrontierConfig, seed: int) -> FrontierConfig:
    return replace(cfg, ccp=replace(cfg.ccp, seed=derive_seed(seed, "frontier")))
