"""Exact frontier for finite feature supports, plus brute-force references.

With ``X`` on a finite support the achievable transition matrices are exactly
``P = phi @ M`` for row-stochastic classifiers ``M`` of shape ``(D, C)``, so
the frontier is a single LP in ``(M, P)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dist import JointModel, posterior_g
from .errors import OracleCapError, SolverError
from .fairness import Thresholds, accuracy, fairness_constraints
from .lp import LinearProgram, solve_lp

DEFAULT_VARIABLE_CAP = 20000
ENUMERATION_CAP = 10**6


@dataclass
class OracleResult:
    value: float
    M: np.ndarray
    P: np.ndarray

    def to_dict(self) -> dict:
        return {"value": self.value, "M": self.M.tolist(), "P": self.P.tolist()}


def classifier_to_transition(M, phi) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if M.ndim != 2 or phi.ndim != 2 or phi.shape[1] != M.shape[0]:
        raise ValueError(f"phi {phi.shape} and M {M.shape} do not compose")
    return phi @ M


def exact_frontier(jm: JointModel, thresholds: Thresholds, cap: int = DEFAULT_VARIABLE_CAP) -> OracleResult:
    A, C, D, AC = jm.A, jm.C, jm.D, jm.A * jm.C
    nM, nP = D * C, AC * C
    n = nM + nP
    if n > cap:
        raise OracleCapError(f"exact oracle needs {n} variables, cap is {cap}")

    rows, rel, rhs = [], [], []
    # M row-stochastic
    simplex = np.zeros((D, n))
    for x in range(D):
        simplex[x, x * C:(x + 1) * C] = 1.0
    rows.append(simplex)
    rel += ["="] * D
    rhs += [1.0] * D
    # P - phi @ M = 0, entry (r, yhat)
    coupling = np.zeros((nP, n))
    for r in range(AC):
        for yhat in range(C):
            i = r * C + yhat
            coupling[i, nM + i] = 1.0
            coupling[i, yhat:nM:C] = -jm.phi[r]
    rows.append(coupling)
    rel += ["="] * nP
    rhs += [0.0] * nP
    fair = fairness_constraints(jm.mu, jm.mu_group, thresholds)
    if len(fair):
        rows.append(np.hstack([np.zeros((len(fair), nM)), fair.matrix()]))
        rel += fair.relations
        rhs += fair.rhs

    obj = np.zeros(n)
    obj[nM + np.arange(AC) * C + np.arange(AC) % C] = jm.mu
    lp = LinearProgram(obj, np.vstack(rows), rel, np.array(rhs), 0.0, 1.0, sense="max")
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise SolverError(f"oracle LP reported {sol.status}")
    M = sol.x[:nM].reshape(D, C)
    P = classifier_to_transition(M, jm.phi)
    return OracleResult(value=accuracy(jm.mu, P), M=M, P=P)


def bayes_accuracy(jm: JointModel) -> float:
    """Accuracy of the pointwise-argmax classifier ``E[max_yhat P(Y=yhat | X)]``."""
    gt = posterior_g(jm)
    label_post = gt.g.reshape(-1, jm.A, jm.C).sum(axis=1)
    return float(gt.px @ label_post.max(axis=1))


def _feasible_mask(jm: JointModel, thresholds: Thresholds, Ps: np.ndarray, tol: float) -> np.ndarray:
    """Batch feasibility of transition matrices ``Ps`` (shape ``(N, AC, C)``)."""
    fair = fairness_constraints(jm.mu, jm.mu_group, thresholds)
    if not len(fair):
        return np.ones(Ps.shape[0], dtype=bool)
    lhs = Ps.reshape(Ps.shape[0], -1) @ fair.matrix().T
    return np.all(lhs <= np.array(fair.rhs) + tol, axis=1)


def _best_over(jm, thresholds, M_iter, tol) -> float:
    best = -np.inf
    diag = np.arange(jm.A * jm.C) % jm.C
    for chunk in M_iter:
        Ps = np.einsum("rd,ndc->nrc", jm.phi, chunk)
        acc = (Ps[:, np.arange(jm.A * jm.C), diag] * jm.mu).sum(axis=1)
        ok = _feasible_mask(jm, thresholds, Ps, tol)
        if ok.any():
            best = max(best, float(acc[ok].max()))
    return best


def brute_force_deterministic(jm: JointModel, thresholds: Thresholds, tol: float = 1e-12) -> float:
    """Best accuracy over all deterministic maps ``[D] -> [C]`` meeting the thresholds.

    Returns ``-inf`` if no deterministic classifier is feasible.
    """
    D, C = jm.D, jm.C
    if C**D > ENUMERATION_CAP:
        raise OracleCapError(f"{C}^{D} deterministic classifiers exceed the enumeration cap")
    eye = np.eye(C)

    def chunks(size=20000):
        it = itertools.product(range(C), repeat=D)
        while True:
            block = list(itertools.islice(it, size))
            if not block:
                return
            yield eye[np.array(block)]

    return _best_over(jm, thresholds, chunks(), tol)


def brute_force_randomized(jm: JointModel, thresholds: Thresholds, step: float = 0.1, tol: float = 1e-12) -> float:
    """Grid search over randomized classifiers, each row of ``M`` on a simplex grid of spacing ``step``."""
    D, C = jm.D, jm.C
    m = int(round(1 / step))
    if abs(m * step - 1) > 1e-12:
        raise ValueError("step must divide 1")
    row_grid = np.array([c for c in itertools.product(range(m + 1), repeat=C) if sum(c) == m], dtype=float) / m
    G = row_grid.shape[0]
    if G**D > ENUMERATION_CAP:
        raise OracleCapError(f"{G}^{D} grid classifiers exceed the enumeration cap")

    def chunks(size=20000):
        it = itertools.product(range(G), repeat=D)
        while True:
            block = list(itertools.islice(it, size))
            if not block:
                return
            yield row_grid[np.array(block)]

    return _best_over(jm, thresholds, chunks(), tol)
