"""Cutting-plane approximation of the fairness Pareto frontier and threshold sweeps."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cuts import CcpConfig, find_violated_cut
from .dist import JointModel, posterior_g
from .errors import FairFrontError
from .fairness import Thresholds, max_eo_violation
from .master import CutPool, solve_master

log = logging.getLogger(__name__)

METRICS = ("sp", "eo", "oae")
MONOTONE_TOL = 1e-6


@dataclass(frozen=True)
class FrontierConfig:
    ccp: CcpConfig = field(default_factory=CcpConfig)
    max_iter: int = 20
    record_trace: bool = True
    reuse_cuts: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def to_dict(self) -> dict:
        return {
            "k": self.ccp.k,
            "restarts": self.ccp.restarts,
            "ccp_max_iter": self.ccp.max_iter,
            "eps_obj": self.ccp.eps_obj,
            "eps_stop": self.ccp.eps_stop,
            "seed": self.ccp.seed,
            "iters": self.max_iter,
            "reuse_cuts": self.reuse_cuts,
        }


@dataclass
class FrontierPoint:
    thresholds: Thresholds
    value: float
    P: np.ndarray | None
    pool: CutPool
    iterations: int
    terminated_by: str  # "no_violation" | "iteration_cap" | "failed"
    trace: list[float] = field(default_factory=list)
    ccp_traces: list[list[list[float]]] = field(default_factory=list)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.terminated_by == "failed"

    def to_dict(self, verbose: bool = False) -> dict:
        doc = {
            "thresholds": self.thresholds.to_dict(),
            "value": self.value,
            "P": None if self.P is None else self.P.tolist(),
            "pool_size": len(self.pool),
            "iterations": self.iterations,
            "terminated_by": self.terminated_by,
            "trace": list(self.trace),
            "max_eo_of_P": None if self.P is None else max_eo_violation(self.P),
            "cuts": [dict(c.to_dict(), added_at=t) for c, t in zip(self.pool.cuts, self.pool.added_at)],
        }
        if self.error:
            doc["error"] = self.error
        if verbose:
            doc["ccp_traces"] = self.ccp_traces
        return doc


def _iteration_seed(seed: int, t: int) -> int:
    # Independent, fixed derivation of a per-iteration cut-search seed.
    return int(np.random.SeedSequence([seed, t]).generate_state(1)[0])


def approximate_frontier(
    jm: JointModel,
    thresholds: Thresholds,
    cfg: FrontierConfig | None = None,
    pool: CutPool | None = None,
) -> FrontierPoint:
    """Alternate master solves and cut searches until no violated cut is found
    or ``cfg.max_iter`` master solves have been made.

    The returned value is an upper bound on the frontier at ``thresholds``.
    """
    cfg = cfg or FrontierConfig()
    pool = pool if pool is not None else CutPool()
    gt = posterior_g(jm)
    trace: list[float] = []
    ccp_traces = []
    t = 0
    while True:
        t += 1
        try:
            master = solve_master(jm, thresholds, pool)
        except FairFrontError as exc:
            raise type(exc)(f"iteration {t}: {exc}") from exc
        trace.append(master.value)
        ccp_cfg = replace(cfg.ccp, seed=_iteration_seed(cfg.ccp.seed, t))
        try:
            found = find_violated_cut(master.P, gt.g, gt.px, jm.mu, ccp_cfg)
        except FairFrontError as exc:
            raise type(exc)(f"iteration {t}: {exc}") from exc
        if cfg.record_trace:
            ccp_traces.append(found.traces)
        if not found.violated:
            reason = "no_violation"
            break
        if t >= cfg.max_iter:
            reason = "iteration_cap"
            break
        if not pool.add(found.cut, t):
            # The exact same cut is already enforced; the master cannot move.
            log.warning("cut search returned a duplicate cut at iteration %d", t)
            reason = "iteration_cap"
            break
    return FrontierPoint(
        thresholds=thresholds,
        value=trace[-1],
        P=master.P,
        pool=pool,
        iterations=t,
        terminated_by=reason,
        trace=trace,
        ccp_traces=ccp_traces,
    )


@dataclass
class SweepResult:
    metric: str
    grid: list[float]
    points: list[FrontierPoint]
    metadata: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])


def _thresholds_for(metric: str, alpha: float, base: Thresholds) -> Thresholds:
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    return replace(base, **{metric: alpha})


def default_workers() -> int:
    env = os.environ.get("FAIRFRONT_THREADS")
    if env:
        return max(1, int(env))
    return 1


def sweep(
    jm: JointModel,
    metric: str,
    grid,
    cfg: FrontierConfig | None = None,
    base: Thresholds | None = None,
    workers: int | None = None,
) -> SweepResult:
    """One frontier point per threshold value of ``metric``; other thresholds come from ``base``."""
    cfg = cfg or FrontierConfig()
    base = base or Thresholds()
    grid = [float(a) for a in grid]
    if not grid:
        raise ValueError("grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be sorted ascending")
    workers = workers or default_workers()

    def run(alpha, pool=None):
        th = _thresholds_for(metric, alpha, base)
        try:
            return approximate_frontier(jm, th, cfg, pool)
        except FairFrontError as exc:
            log.error("sweep point %s=%g failed: %s", metric, alpha, exc)
            return FrontierPoint(th, float("nan"), None, CutPool(), 0, "failed", error=str(exc))

    if cfg.reuse_cuts:
        # Cuts describe the achievable set only, so they stay valid across thresholds.
        points, carried = [], CutPool()
        for a in grid:
            pt = run(a, carried.copy())
            points.append(pt)
            if not pt.failed:
                carried = pt.pool
    elif workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            points = list(ex.map(run, grid))
    else:
        points = [run(a) for a in grid]

    vals = [p.value for p in points]
    for i in range(1, len(points)):
        if points[i].failed or points[i - 1].failed:
            continue
        if vals[i] < vals[i - 1] - MONOTONE_TOL:
            log.warning(
                "frontier dips between %s=%g (%.6f) and %g (%.6f)",
                metric, grid[i - 1], vals[i - 1], grid[i], vals[i],
            )
    meta = {"dataset_hash": jm.digest(), "config": cfg.to_dict(), "base_thresholds": base.to_dict()}
    return SweepResult(metric, grid, points, meta)
