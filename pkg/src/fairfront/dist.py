"""Tabular ingestion, quantisation and empirical joint-distribution estimation.

A dataset is reduced to three categorical variables: the group ``S``, the
label ``Y`` and a single feature variable ``X`` whose support is the set of
distinct (quantised) feature tuples actually observed.  Row index of the
joint ``(s, y)`` pair is always ``s * C + y`` (zero-based).
"""

from __future__ import annotations

import bisect
import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateDistributionError,
    ImputationError,
    ParseError,
    RangeError,
    SchemaError,
)

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Binning:
    """Half-open intervals ``[e_0, e_1), ..., [e_{m-1}, e_m)``.

    ``below`` adds a catch-all ``(-inf, e_0)`` interval in front; ``above``
    adds ``[e_m, inf)`` at the end.  A value outside every interval raises
    :class:`RangeError`.
    """

    edges: tuple[float, ...]
    below: bool = False
    above: bool = True

    def __post_init__(self):
        if len(self.edges) == 0:
            raise SchemaError("binning needs at least one edge")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise SchemaError(f"bin edges must be strictly increasing: {list(self.edges)}")

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1 + int(self.below) + int(self.above)

    def index(self, value: float) -> int:
        pos = bisect.bisect_right(self.edges, value)
        if pos == 0:
            if not self.below:
                raise RangeError(f"value {value} below first edge {self.edges[0]}")
            return 0
        if pos == len(self.edges) and not self.above:
            raise RangeError(f"value {value} at or above last edge {self.edges[-1]}")
        return pos - 1 + int(self.below)


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    bins: Binning | None = None  # None: categorical passthrough


@dataclass(frozen=True)
class SchemaSpec:
    group_column: str
    label_column: str
    features: tuple[FeatureSpec, ...]
    missing_token: str = ""

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature column")
        if self.group_column == self.label_column:
            raise SchemaError("group and label columns must differ")
        if {self.group_column, self.label_column} & set(names):
            raise SchemaError("group/label columns may not also be features")

    @property
    def feature_columns(self) -> list[str]:
        return [f.name for f in self.features]

    @classmethod
    def from_dict(cls, doc: dict) -> "SchemaSpec":
        try:
            feats = []
            for f in doc["features"]:
                if isinstance(f, str):
                    f = {"name": f}
                bins = f.get("bins")
                if bins is not None:
                    if isinstance(bins, list):
                        bins = {"edges": bins}
                    bins = Binning(
                        tuple(float(e) for e in bins["edges"]),
                        below=bool(bins.get("below", False)),
                        above=bool(bins.get("above", True)),
                    )
                feats.append(FeatureSpec(str(f["name"]), bins))
            return cls(
                group_column=str(doc["group_column"]),
                label_column=str(doc["label_column"]),
                features=tuple(feats),
                missing_token=str(doc.get("missing_token", "")),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema: {exc!r}") from exc

    @classmethod
    def from_json(cls, path) -> "SchemaSpec":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaError("schema must be a JSON object")
        return cls.from_dict(doc)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Encoded rows.

    ``values`` is an ``(n, F)`` float array; NaN marks a missing cell.  For
    quantised/categorical columns the entries are category indices and
    ``n_categories[j]`` is the category count; raw numeric columns carry
    ``None`` there.
    """

    s: np.ndarray
    y: np.ndarray
    values: np.ndarray
    group_labels: tuple[str, ...]
    label_labels: tuple[str, ...]
    feature_names: tuple[str, ...]
    n_categories: tuple[int | None, ...]
    category_labels: tuple[tuple[str, ...] | None, ...] = field(default=())

    @property
    def A(self) -> int:
        return len(self.group_labels)

    @property
    def C(self) -> int:
        return len(self.label_labels)

    @property
    def n(self) -> int:
        return self.s.shape[0]

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)


def load_dataset(csv_path, schema: SchemaSpec, quantize: bool = True) -> Dataset:
    """Read a CSV into a :class:`Dataset`.

    Group and label values are mapped to dense indices in order of first
    appearance; so are categorical feature values.  Numeric (binned) columns
    are parsed as floats and, unless ``quantize`` is false, replaced by their
    interval index.
    """
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("CSV file is empty") from None
        header = [h.strip() for h in header]
        needed = [schema.group_column, schema.label_column, *schema.feature_columns]
        missing = [c for c in needed if c not in header]
        if missing:
            raise SchemaError(f"CSV header lacks columns {missing}")
        col = {name: header.index(name) for name in needed}

        groups: dict[str, int] = {}
        labels: dict[str, int] = {}
        cats: list[dict[str, int]] = [{} for _ in schema.features]
        s_idx, y_idx, rows = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) < len(header):
                raise ParseError(f"expected {len(header)} cells, found {len(rec)}", lineno)
            g = rec[col[schema.group_column]].strip()
            lab = rec[col[schema.label_column]].strip()
            if g == schema.missing_token or lab == schema.missing_token:
                raise ParseError("group/label cell may not be missing", lineno)
            s_idx.append(groups.setdefault(g, len(groups)))
            y_idx.append(labels.setdefault(lab, len(labels)))
            row = []
            for j, f in enumerate(schema.features):
                cell = rec[col[f.name]].strip()
                if cell == schema.missing_token:
                    row.append(math.nan)
                elif f.bins is None:
                    row.append(float(cats[j].setdefault(cell, len(cats[j]))))
                else:
                    try:
                        row.append(float(cell))
                    except ValueError:
                        raise ParseError(f"cannot parse {cell!r} in column {f.name!r}", lineno) from None
            rows.append(row)

    values = np.array(rows, dtype=float).reshape(len(rows), len(schema.features))
    d = Dataset(
        s=np.array(s_idx, dtype=np.int64),
        y=np.array(y_idx, dtype=np.int64),
        values=values,
        group_labels=tuple(groups),
        label_labels=tuple(labels),
        feature_names=tuple(schema.feature_columns),
        n_categories=tuple(len(c) if f.bins is None else None for c, f in zip(cats, schema.features)),
        category_labels=tuple(tuple(c) if f.bins is None else None for c, f in zip(cats, schema.features)),
    )
    return quantize_dataset(d, schema) if quantize else d


def quantize_dataset(d: Dataset, schema: SchemaSpec) -> Dataset:
    """Replace every raw numeric column by its interval index."""
    values = d.values.copy()
    ncat = list(d.n_categories)
    labels = list(d.category_labels) or [None] * len(ncat)
    for j, f in enumerate(schema.features):
        if f.bins is None or ncat[j] is not None:
            continue
        col = values[:, j]
        for i in np.flatnonzero(~np.isnan(col)):
            try:
                col[i] = f.bins.index(col[i])
            except RangeError as exc:
                raise RangeError(f"column {f.name!r}, row {i}: {exc}") from None
        ncat[j] = f.bins.n_bins
        labels[j] = _interval_labels(f.bins)
    return replace(d, values=values, n_categories=tuple(ncat), category_labels=tuple(labels))


def _interval_labels(b: Binning) -> tuple[str, ...]:
    e = [f"{v:g}" for v in b.edges]
    out = [f"(-inf,{e[0]})"] if b.below else []
    out += [f"[{lo},{hi})" for lo, hi in zip(e, e[1:])]
    if b.above:
        out.append(f"[{e[-1]},inf)")
    return tuple(out)


def inject_missing(d: Dataset, probs, seed: int) -> Dataset:
    """Erase each feature cell of a group-``s`` row with probability ``probs[s]``.

    Uses NumPy's PCG64 generator seeded with ``seed``; one uniform draw per
    cell in row-major order, so results are reproducible across platforms.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (d.A,):
        raise ValueError(f"need one probability per group ({d.A}), got {probs.shape}")
    if np.any((probs < 0) | (probs > 1)) or np.any(np.isnan(probs)):
        raise ValueError("erase probabilities must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(d.values.shape)
    erase = u < probs[d.s][:, None]
    values = np.where(erase, np.nan, d.values)
    return replace(d, values=values)


def impute_mode(d: Dataset) -> Dataset:
    """Fill missing cells with the column mode; ties go to the smallest index."""
    values = d.values.copy()
    for j in range(values.shape[1]):
        col = values[:, j]
        miss = np.isnan(col)
        if not miss.any():
            continue
        if miss.all():
            raise ImputationError(f"column {d.feature_names[j]!r} is entirely missing")
        vals, counts = np.unique(col[~miss], return_counts=True)
        col[miss] = vals[np.argmax(counts)]  # vals sorted, argmax takes first max
    return replace(d, values=values)


@dataclass(frozen=True, eq=False)
class JointModel:
    """Empirical joint law of ``(S, Y, X)`` on finite supports.

    Attributes
    ----------
    mu : (A*C,) masses ``P(S=s, Y=y)``
    phi : (A*C, D) row-stochastic ``P(X=x | S=s, Y=y)``
    px : (D,) feature marginal
    """

    A: int
    C: int
    mu: np.ndarray
    phi: np.ndarray
    px: np.ndarray
    counts: np.ndarray | None = None  # (A*C, D) raw tallies when estimated
    support: tuple | None = None
    group_labels: tuple[str, ...] | None = None
    label_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        AC = self.A * self.C
        if self.mu.shape != (AC,) or self.phi.ndim != 2 or self.phi.shape[0] != AC:
            raise ValueError("mu/phi shapes do not match A*C")
        if self.px.shape != (self.phi.shape[1],):
            raise ValueError("px length does not match phi columns")
        if np.any(self.mu < 0) or abs(self.mu.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError("mu must be a probability vector")
        if np.any(self.phi < 0) or np.max(np.abs(self.phi.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ValueError("phi rows must be probability vectors")
        if np.any(self.mu_group <= 0):
            raise DegenerateDistributionError("some group has zero mass")

    @classmethod
    def from_arrays(cls, mu, phi, A: int, C: int, **extra) -> "JointModel":
        """Build a model from ``mu`` and ``phi``; ``px`` is derived."""
        mu = np.asarray(mu, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if np.any(mu <= 0):
            raise DegenerateDistributionError("every (s, y) cell needs positive mass")
        return cls(A=A, C=C, mu=mu, phi=phi, px=mu @ phi, **extra)

    @property
    def D(self) -> int:
        return self.phi.shape[1]

    @property
    def mu_group(self) -> np.ndarray:
        return self.mu.reshape(self.A, self.C).sum(axis=1)

    @property
    def label_marginal(self) -> np.ndarray:
        return self.mu.reshape(self.A, self.C).sum(axis=0)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.array([self.A, self.C, self.D], dtype=np.int64).tobytes())
        for arr in (self.mu, self.phi):
            h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        return h.hexdigest()

    def to_dict(self) -> dict:
        doc = {
            "A": self.A,
            "C": self.C,
            "D": self.D,
            "mu": self.mu.tolist(),
            "phi": self.phi.tolist(),
            "px": self.px.tolist(),
        }
        if self.counts is not None:
            doc["counts"] = self.counts.astype(int).tolist()
        if self.group_labels is not None:
            doc["group_labels"] = list(self.group_labels)
        if self.label_labels is not None:
            doc["label_labels"] = list(self.label_labels)
        if self.support is not None:
            doc["support"] = [list(t) for t in self.support]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "JointModel":
        return cls(
            A=int(doc["A"]),
            C=int(doc["C"]),
            mu=np.asarray(doc["mu"], dtype=float),
            phi=np.asarray(doc["phi"], dtype=float),
            px=np.asarray(doc["px"], dtype=float),
            counts=np.asarray(doc["counts"]) if "counts" in doc else None,
            support=tuple(tuple(t) for t in doc["support"]) if "support" in doc else None,
            group_labels=tuple(doc["group_labels"]) if "group_labels" in doc else None,
            label_labels=tuple(doc["label_labels"]) if "label_labels" in doc else None,
        )


def estimate_joint(d: Dataset) -> JointModel:
    """Empirical ``mu``, ``phi`` and ``px`` from a fully observed dataset."""
    if d.n == 0:
        raise DegenerateDistributionError("dataset has no rows")
    if np.isnan(d.values).any():
        raise ValueError("dataset still contains missing cells; impute first")
    if any(k is None for k in d.n_categories):
        raise ValueError("dataset has unquantised numeric columns")
    A, C = d.A, d.C
    support, x = np.unique(d.values.astype(np.int64), axis=0, return_inverse=True)
    x = x.reshape(-1)
    D = support.shape[0]
    cell = d.s * C + d.y
    counts = np.zeros((A * C, D), dtype=np.int64)
    np.add.at(counts, (cell, x), 1)
    n_sy = counts.sum(axis=1)
    if np.any(n_sy == 0):
        empty = [(int(r // C), int(r % C)) for r in np.flatnonzero(n_sy == 0)]
        raise DegenerateDistributionError(f"empty (group, label) cells: {empty}")
    mu = n_sy / d.n
    phi = counts / n_sy[:, None]
    px = counts.sum(axis=0) / d.n
    return JointModel(
        A=A,
        C=C,
        mu=mu,
        phi=phi,
        px=px,
        counts=counts,
        support=tuple(tuple(int(v) for v in row) for row in support),
        group_labels=d.group_labels,
        label_labels=d.label_labels,
    )


@dataclass(frozen=True, eq=False)
class GTable:
    """Posterior ``g(x) = P(S, Y | X = x)``, one row per support point.

    ``px`` holds the matching feature masses (support points with zero mass
    are dropped from both).
    """

    g: np.ndarray
    px: np.ndarray


def posterior_g(jm: JointModel) -> GTable:
    keep = jm.px > 0
    joint = (jm.mu[:, None] * jm.phi)[:, keep]
    return GTable(g=(joint / jm.px[keep]).T, px=jm.px[keep])
