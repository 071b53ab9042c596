"""Master LP: maximise accuracy over transition matrices under fairness
constraints and a pool of Blackwell-type cuts.

A cut is a tuple of ``k`` vectors ``a_i`` in ``[-1, 1]^{AC}``.  It asserts

    sum_yhat max_i a_i . (mu * p_yhat)  <=  E[ max_i a_i . g(X) ]

which holds for every transition matrix induced by some classifier.  In the
LP the left-hand maxima become epigraph variables ``t[c, yhat]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dist import JointModel
from .errors import SolverError
from .fairness import Thresholds, accuracy, fairness_constraints, simplex_constraints
from .lp import LinearProgram, solve_lp

BOX_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Cut:
    vectors: np.ndarray  # (k, A*C)
    rhs: float

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            raise ValueError("cut vectors must be a (k, A*C) array")
        if np.any(np.abs(v) > 1 + BOX_TOL):
            raise ValueError("cut vectors must lie in [-1, 1]")
        if not np.isfinite(self.rhs):
            raise ValueError("cut rhs must be finite")
        object.__setattr__(self, "vectors", v)

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    def key(self) -> bytes:
        return self.vectors.tobytes()

    def to_dict(self) -> dict:
        return {"vectors": self.vectors.tolist(), "rhs": self.rhs}


@dataclass
class CutPool:
    cuts: list[Cut] = field(default_factory=list)
    added_at: list[int] = field(default_factory=list)
    _keys: set = field(default_factory=set, repr=False)

    def add(self, cut: Cut, iteration: int = 0) -> bool:
        """Append ``cut`` unless an identical one is already stored."""
        key = cut.key()
        if key in self._keys:
            return False
        self._keys.add(key)
        self.cuts.append(cut)
        self.added_at.append(iteration)
        return True

    def copy(self) -> "CutPool":
        return CutPool(list(self.cuts), list(self.added_at), set(self._keys))

    def __len__(self) -> int:
        return len(self.cuts)

    def __iter__(self):
        return iter(self.cuts)


@dataclass
class MasterResult:
    value: float
    P: np.ndarray
    t: np.ndarray  # (n_cuts, C) epigraph values, tightened to the maxima
    active_cuts: list[int]
    lp_iterations: int
    n_variables: int
    n_constraints: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "P": self.P.tolist(),
            "active_cuts": self.active_cuts,
            "lp_iterations": self.lp_iterations,
            "n_variables": self.n_variables,
            "n_constraints": self.n_constraints,
        }


def cut_rhs(vectors, g, px) -> float:
    """``sum_x px[x] * max_i a_i . g(x)``."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    return float(np.asarray(px) @ (np.asarray(g) @ vectors.T).max(axis=1))


def cut_lhs(P, vectors, mu) -> float:
    """``sum_yhat max_i a_i . (mu * p_yhat)``."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    weighted = np.asarray(mu)[:, None] * np.asarray(P, dtype=float)  # (AC, C)
    return float((vectors @ weighted).max(axis=0).sum())


def cut_violation(P, cut: Cut, mu) -> float:
    """Positive when ``P`` violates ``cut``."""
    return cut_lhs(P, cut.vectors, mu) - cut.rhs


def build_master(jm: JointModel, thresholds: Thresholds, pool: CutPool | None = None) -> LinearProgram:
    """Assemble the master LP.

    Variables are ``vec(P)`` (``A*C*C`` entries, row-major) followed by ``C``
    epigraph variables per cut.
    """
    A, C, AC = jm.A, jm.C, jm.A * jm.C
    cuts = list(pool) if pool is not None else []
    nP = AC * C
    n = nP + C * len(cuts)

    base = simplex_constraints(A, C) + fairness_constraints(jm.mu, jm.mu_group, thresholds)
    rows, rel, rhs = [], [], []
    if len(base):
        rows.append(np.hstack([base.matrix(), np.zeros((len(base), n - nP))]))
        rel += base.relations
        rhs += base.rhs

    for c, cut in enumerate(cuts):
        off = nP + c * C
        # Fold mu into the coefficients: a_i . (mu * p_yhat) = (a_i * mu) . p_yhat
        w = cut.vectors * jm.mu  # (k, AC)
        for yhat in range(C):
            blk = np.zeros((cut.k, n))
            blk[:, yhat:nP:C] = w
            blk[:, off + yhat] = -1.0
            rows.append(blk)
            rel += ["<="] * cut.k
            rhs += [0.0] * cut.k
        srow = np.zeros((1, n))
        srow[0, off:off + C] = 1.0
        rows.append(srow)
        rel.append("<=")
        rhs.append(cut.rhs)

    obj = np.zeros(n)
    obj[np.arange(AC) * C + np.arange(AC) % C] = jm.mu
    lo = np.concatenate([np.zeros(nP), np.full(n - nP, -np.inf)])
    hi = np.concatenate([np.ones(nP), np.full(n - nP, np.inf)])
    names = [f"P[{r},{j}]" for r in range(AC) for j in range(C)]
    names += [f"t[{c},{j}]" for c in range(len(cuts)) for j in range(C)]
    A_mat = np.vstack(rows) if rows else np.zeros((0, n))
    return LinearProgram(obj, A_mat, rel, np.array(rhs), lo, hi, sense="max", names=names)


def solve_master(jm: JointModel, thresholds: Thresholds, pool: CutPool | None = None) -> MasterResult:
    lp = build_master(jm, thresholds, pool)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        # Constant classifiers are always feasible and the objective is bounded.
        raise SolverError(f"master LP reported {sol.status}; this indicates a numerical failure")
    AC, C = jm.A * jm.C, jm.C
    P = sol.x[:AC * C].reshape(AC, C)
    cuts = list(pool) if pool is not None else []
    t = np.array([(cut.vectors @ (jm.mu[:, None] * P)).max(axis=0) for cut in cuts]).reshape(len(cuts), C)
    active = [i for i, cut in enumerate(cuts) if t[i].sum() >= cut.rhs - 1e-9]
    return MasterResult(
        value=accuracy(jm.mu, P),
        P=P,
        t=t,
        active_cuts=active,
        lp_iterations=sol.iterations,
        n_variables=lp.n,
        n_constraints=lp.m,
    )
