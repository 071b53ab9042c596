"""Search for the most violated cut at a given transition matrix.

The separation problem is a difference of convex functions in the piece
vectors ``a = (a_1, ..., a_k)``::

    phi(a) = E[max_i a_i . g(X)] - sum_yhat max_i a_i . w_yhat,   w_yhat = mu * p_yhat

It is minimised by the convex-concave procedure: at the current iterate each
column ``yhat`` picks its active piece (smallest index on ties), the
subtracted maxima are replaced by that linear piece, and the resulting convex
surrogate is minimised exactly as an LP.  The surrogate majorises ``phi`` and
touches it at the current point, so ``phi`` never increases.  Since the
surrogate depends only on the active-piece assignment, LP solves are cached
per assignment within one search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import CutSearchError, SolverError
from .lp import LinearProgram, solve_lp
from .master import Cut, cut_rhs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CcpConfig:
    k: int = 6
    restarts: int = 16
    max_iter: int = 100
    eps_obj: float = 1e-9
    eps_stop: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.restarts < 1 or self.max_iter < 1:
            raise ValueError("k, restarts and max_iter must be >= 1")
        if self.eps_obj <= 0 or self.eps_stop <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class CutSearchResult:
    value: float
    vectors: np.ndarray
    violated: bool
    cut: Cut | None = None
    traces: list[list[float]] = field(default_factory=list)
    best_restart: int = 0
    lp_solves: int = 0


def dc_objective(vectors, g, px, mu, P) -> float:
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    W = np.asarray(mu)[:, None] * np.asarray(P, dtype=float)
    first = np.asarray(px) @ (np.asarray(g) @ vectors.T).max(axis=1)
    second = (vectors @ W).max(axis=0).sum()
    return float(first - second)


def active_pieces(vectors, mu, P) -> tuple[int, ...]:
    """Index of the maximising piece for each column (first index on ties)."""
    W = np.asarray(mu)[:, None] * np.asarray(P, dtype=float)
    return tuple(int(i) for i in np.argmax(np.atleast_2d(vectors) @ W, axis=0))


def ccp_subproblem(active, g, px, mu, P, k: int | None = None) -> LinearProgram:
    """Convex surrogate LP for a fixed active-piece assignment.

    Variables: ``vec(a)`` (``k*AC`` entries in ``[-1, 1]``) then one
    epigraph variable ``u_x`` per support point.
    """
    g = np.asarray(g, dtype=float)
    D, AC = g.shape
    k = k if k is not None else max(active) + 1
    if any(not 0 <= i < k for i in active):
        raise ValueError("active piece index out of range")
    W = np.asarray(mu)[:, None] * np.asarray(P, dtype=float)
    na = k * AC
    n = na + D
    c = np.zeros(n)
    for yhat, i in enumerate(active):
        c[i * AC:(i + 1) * AC] -= W[:, yhat]
    c[na:] = px
    # g(x) . a_i - u_x <= 0 for all i, x
    rows = np.zeros((k * D, n))
    for i in range(k):
        rows[i * D:(i + 1) * D, i * AC:(i + 1) * AC] = g
        rows[i * D:(i + 1) * D, na:] = -np.eye(D)
    lo = np.full(n, -1.0)
    hi = np.full(n, 1.0)
    return LinearProgram(c, rows, ["<="] * (k * D), np.zeros(k * D), lo, hi, sense="min")


def _initial_point(restart: int, k: int, AC: int, P, seed: int) -> np.ndarray:
    if restart == 0:
        # Sign patterns of the per-row argmax of P: piece yhat is +1 on rows
        # predicting yhat and -1 elsewhere; surplus pieces start dominated.
        pred = np.argmax(np.asarray(P), axis=1)
        a = -np.ones((k, AC))
        for yhat in range(min(k, P.shape[1])):
            a[yhat] = np.where(pred == yhat, 1.0, -1.0)
        return a
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, restart])))
    return rng.uniform(-1.0, 1.0, size=(k, AC))


def ccp_descent(a0, g, px, mu, P, max_iter: int = 100, eps_obj: float = 1e-9, cache: dict | None = None):
    """Run the convex-concave procedure from ``a0``.

    Returns ``(a, trace, n_solves)`` where ``trace`` lists the objective at
    every iterate, starting point included.
    """
    g = np.asarray(g, dtype=float)
    k, AC = np.atleast_2d(a0).shape
    cache = {} if cache is None else cache
    a = np.atleast_2d(np.asarray(a0, dtype=float)).copy()
    obj = dc_objective(a, g, px, mu, P)
    trace = [obj]
    solves = 0
    for _ in range(max_iter):
        sigma = active_pieces(a, mu, P)
        if sigma not in cache:
            sol = solve_lp(ccp_subproblem(sigma, g, px, mu, P, k))
            if sol.status != "optimal":
                raise SolverError(f"CCP subproblem {sol.status}")
            cache[sigma] = sol.x[:k * AC].reshape(k, AC)
            solves += 1
        a_new = cache[sigma]
        obj_new = dc_objective(a_new, g, px, mu, P)
        trace.append(obj_new)
        improved = obj - obj_new
        if obj_new <= obj:
            a, obj = a_new.copy(), obj_new
        if improved < eps_obj:
            break
    return a, trace, solves


def find_violated_cut(P, g, px, mu, cfg: CcpConfig | None = None) -> CutSearchResult:
    """Multi-start CCP; returns the best restart (lowest objective, lowest index on ties)."""
    cfg = cfg or CcpConfig()
    P = np.asarray(P, dtype=float)
    g = np.asarray(g, dtype=float)
    AC = g.shape[1]
    cache: dict = {}
    best = None
    traces: list[list[float]] = []
    solves = 0
    for r in range(cfg.restarts):
        a0 = _initial_point(r, cfg.k, AC, P, cfg.seed)
        try:
            a, trace, n = ccp_descent(a0, g, px, mu, P, cfg.max_iter, cfg.eps_obj, cache)
        except SolverError as exc:
            log.warning("cut search restart %d discarded: %s", r, exc)
            traces.append([])
            continue
        solves += n
        traces.append(trace)
        val = dc_objective(a, g, px, mu, P)
        if best is None or val < best[0]:
            best = (val, a, r)
    if best is None:
        raise CutSearchError("all cut-search restarts failed")
    val, a, r = best
    violated = val < -cfg.eps_stop
    cut = Cut(a, cut_rhs(a, g, px)) if violated else None
    return CutSearchResult(val, a, violated, cut, traces, r, solves)
