"""Group-fairness metrics as linear constraints on the transition matrix.

The transition matrix ``P`` has shape ``(A*C, C)``; row ``s*C + y`` holds
``P(Yhat = . | S = s, Y = y)``.  Constraint coefficients act on ``P``
flattened row-major, i.e. entry ``(r, yhat)`` sits at ``r*C + yhat``.
An absolute-value bound ``|expr| <= alpha`` becomes two ``<=`` rows, and a
threshold ``alpha >= 1`` produces no rows at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

STOCHASTIC_TOL = 1e-9
POSITIVE = 1  # label index treated as "positive" in confusion matrices


@dataclass(frozen=True)
class Thresholds:
    sp: float = 1.0
    eo: float = 1.0
    oae: float = 1.0

    def __post_init__(self):
        for name in ("sp", "eo", "oae"):
            v = getattr(self, name)
            if not v >= 0:
                raise ValueError(f"threshold {name} must be nonnegative, got {v}")

    def to_dict(self) -> dict:
        return {"sp": self.sp, "eo": self.eo, "oae": self.oae}


@dataclass
class LinearConstraintSet:
    """Rows ``coeffs @ vec(P) (relation) rhs`` with a provenance tag each."""

    n: int
    coeffs: list[np.ndarray] = field(default_factory=list)
    relations: list[str] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)

    def add(self, coef, relation: str, rhs: float, tag: str) -> None:
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (self.n,):
            raise ValueError(f"coefficient vector must have length {self.n}")
        self.coeffs.append(coef)
        self.relations.append(relation)
        self.rhs.append(float(rhs))
        self.tags.append(tag)

    def add_abs(self, coef, alpha: float, tag: str) -> None:
        self.add(coef, "<=", alpha, tag)
        self.add(-np.asarray(coef, dtype=float), "<=", alpha, tag)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: "LinearConstraintSet") -> "LinearConstraintSet":
        if other.n != self.n:
            raise ValueError("cannot merge constraint sets of different widths")
        return LinearConstraintSet(
            self.n,
            self.coeffs + other.coeffs,
            self.relations + other.relations,
            self.rhs + other.rhs,
            self.tags + other.tags,
        )

    def matrix(self) -> np.ndarray:
        return np.array(self.coeffs).reshape(len(self), self.n)

    def satisfied(self, P, tol: float = 0.0) -> bool:
        return self.max_violation(P) <= tol

    def max_violation(self, P) -> float:
        if not len(self):
            return -np.inf
        lhs = self.matrix() @ np.asarray(P, dtype=float).reshape(-1)
        b = np.array(self.rhs)
        eq = np.array([r == "=" for r in self.relations])
        viol = np.where(eq, np.abs(lhs - b), lhs - b)
        return float(viol.max())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rows": [
                {"tag": t, "relation": r, "rhs": b, "coeffs": c.tolist()}
                for c, r, b, t in zip(self.coeffs, self.relations, self.rhs, self.tags)
            ],
        }


def _index(s: int, y: int, yhat: int, C: int) -> int:
    return (s * C + y) * C + yhat


def _dims(mu, mu_group) -> tuple[int, int]:
    A = len(mu_group)
    if len(mu) % A:
        raise ValueError("mu length is not a multiple of the group count")
    return A, len(mu) // A


def accuracy(mu, P) -> float:
    """``sum_{s,y} mu[s,y] * P[(s,y), y]``."""
    mu = np.asarray(mu, dtype=float)
    P = np.asarray(P, dtype=float)
    AC, C = P.shape
    if mu.shape != (AC,) or AC % C:
        raise ValueError(f"mu of shape {mu.shape} does not fit P of shape {P.shape}")
    y = np.arange(AC) % C
    return float(mu @ P[np.arange(AC), y])


def simplex_constraints(A: int, C: int) -> LinearConstraintSet:
    """Row-sum equalities making ``P`` row-stochastic (bounds handled by the LP)."""
    out = LinearConstraintSet(A * C * C)
    for r in range(A * C):
        coef = np.zeros(out.n)
        coef[r * C:(r + 1) * C] = 1.0
        out.add(coef, "=", 1.0, "simplex")
    return out


def sp_constraints(mu, mu_group, alpha: float) -> LinearConstraintSet:
    """Statistical parity between every pair of groups, for every predicted label."""
    mu = np.asarray(mu, dtype=float)
    mu_group = np.asarray(mu_group, dtype=float)
    A, C = _dims(mu, mu_group)
    out = LinearConstraintSet(A * C * C)
    if alpha >= 1:
        return out
    w = mu.reshape(A, C) / mu_group[:, None]
    for yhat in range(C):
        for s, t in combinations(range(A), 2):
            coef = np.zeros(out.n)
            for y in range(C):
                coef[_index(s, y, yhat, C)] += w[s, y]
                coef[_index(t, y, yhat, C)] -= w[t, y]
            out.add_abs(coef, alpha, "SP")
    return out


def eo_constraints(alpha: float, A: int, C: int) -> LinearConstraintSet:
    """Equalized odds: matching ``(y, yhat)`` entries differ by at most ``alpha``."""
    out = LinearConstraintSet(A * C * C)
    if alpha >= 1:
        return out
    for y in range(C):
        for yhat in range(C):
            for s, t in combinations(range(A), 2):
                coef = np.zeros(out.n)
                coef[_index(s, y, yhat, C)] = 1.0
                coef[_index(t, y, yhat, C)] = -1.0
                out.add_abs(coef, alpha, "EO")
    return out


def oae_constraints(mu, mu_group, alpha: float) -> LinearConstraintSet:
    """Overall accuracy equality between every pair of groups."""
    mu = np.asarray(mu, dtype=float)
    mu_group = np.asarray(mu_group, dtype=float)
    A, C = _dims(mu, mu_group)
    out = LinearConstraintSet(A * C * C)
    if alpha >= 1:
        return out
    w = mu.reshape(A, C) / mu_group[:, None]
    for s, t in combinations(range(A), 2):
        coef = np.zeros(out.n)
        for y in range(C):
            coef[_index(s, y, y, C)] += w[s, y]
            coef[_index(t, y, y, C)] -= w[t, y]
        out.add_abs(coef, alpha, "OAE")
    return out


def fairness_constraints(mu, mu_group, thresholds: Thresholds) -> LinearConstraintSet:
    A, C = _dims(mu, mu_group)
    return (
        sp_constraints(mu, mu_group, thresholds.sp)
        + eo_constraints(thresholds.eo, A, C)
        + oae_constraints(mu, mu_group, thresholds.oae)
    )


# Direct evaluation in probability form ---------------------------------------

def sp_violation(mu, mu_group, P) -> float:
    """``max |P(Yhat=yhat|S=s) - P(Yhat=yhat|S=s')|``."""
    A, C = _dims(mu, mu_group)
    joint = np.asarray(mu, dtype=float)[:, None] * np.asarray(P, dtype=float)
    pred_given_s = joint.reshape(A, C, C).sum(axis=1) / np.asarray(mu_group)[:, None]
    return float(np.ptp(pred_given_s, axis=0).max())


def max_eo_violation(P, A: int | None = None, C: int | None = None) -> float:
    """``max |P[(s,y),yhat] - P[(s',y),yhat]|`` over ``y, yhat, s, s'``."""
    P = np.asarray(P, dtype=float)
    C = C or P.shape[1]
    A = A or P.shape[0] // C
    return float(np.ptp(P.reshape(A, C, C), axis=0).max())


def oae_violation(mu, mu_group, P) -> float:
    """``max |P(Yhat=Y|S=s) - P(Yhat=Y|S=s')|``."""
    A, C = _dims(mu, mu_group)
    P = np.asarray(P, dtype=float)
    diag = P[np.arange(A * C), np.arange(A * C) % C]
    acc_s = (np.asarray(mu) * diag).reshape(A, C).sum(axis=1) / np.asarray(mu_group)
    return float(np.ptp(acc_s))


def is_transition(P, tol: float = STOCHASTIC_TOL) -> bool:
    P = np.asarray(P, dtype=float)
    return bool(
        P.ndim == 2
        and np.all(P >= -tol)
        and np.all(P <= 1 + tol)
        and np.max(np.abs(P.sum(axis=1) - 1.0)) <= tol
    )


# Confusion matrices (binary labels, binary or multiple groups) ---------------

@dataclass(frozen=True)
class ConfusionSet:
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def n_plus(self) -> np.ndarray:
        return self.tp + self.fn

    @property
    def n_minus(self) -> np.ndarray:
        return self.tn + self.fp


def confusion_from_transition(P, n_plus, n_minus) -> ConfusionSet:
    """Per-group confusion counts implied by ``P`` (label ``1`` is positive)."""
    P = np.asarray(P, dtype=float)
    if P.shape[1] != 2:
        raise ValueError("confusion matrices need binary labels (C = 2)")
    Pg = P.reshape(-1, 2, 2)  # [s, y, yhat]
    n_plus = np.asarray(n_plus, dtype=float)
    n_minus = np.asarray(n_minus, dtype=float)
    pos, neg = POSITIVE, 1 - POSITIVE
    return ConfusionSet(
        tp=n_plus * Pg[:, pos, pos],
        fp=n_minus * Pg[:, neg, pos],
        fn=n_plus * Pg[:, pos, neg],
        tn=n_minus * Pg[:, neg, neg],
    )


def transition_from_confusion(cs: ConfusionSet) -> np.ndarray:
    n_plus, n_minus = cs.n_plus, cs.n_minus
    if np.any(n_plus <= 0) or np.any(n_minus <= 0):
        raise ValueError("every group needs positive and negative examples")
    A = len(n_plus)
    Pg = np.empty((A, 2, 2))
    pos, neg = POSITIVE, 1 - POSITIVE
    Pg[:, pos, pos] = cs.tp / n_plus
    Pg[:, pos, neg] = cs.fn / n_plus
    Pg[:, neg, pos] = cs.fp / n_minus
    Pg[:, neg, neg] = cs.tn / n_minus
    return Pg.reshape(2 * A, 2)
