"""Pairwise attribute association and transitively correlated attribute groups."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateColumn
from .table import Dataset

PEARSON = "pearson"
CRAMERS_V = "cramers_v"
ETA_SQUARED = "eta_squared"

DEFAULT_TAU_C = 0.4


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    if len(x) < 2:
        raise DegenerateColumn("need at least two complete pairs")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise DegenerateColumn("zero variance")
    r = np.dot(dx, dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def _codes(values) -> tuple[np.ndarray, int]:
    _, inverse = np.unique(np.asarray(values, dtype=object).astype(str), return_inverse=True)
    inverse = inverse.ravel()
    return inverse, int(inverse.max()) + 1 if len(inverse) else 0


def cramers_v(x, y) -> float:
    """Cramér's V without bias correction; 0 when either side has one category."""
    cx, kx = _codes(x)
    cy, ky = _codes(y)
    if len(cx) != len(cy):
        raise ValueError("columns differ in length")
    if min(kx, ky) < 2:
        return 0.0
    table = np.zeros((kx, ky))
    np.add.at(table, (cx, cy), 1)
    n = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n
    chi2 = ((table - expected) ** 2 / expected).sum()
    v = np.sqrt(chi2 / (n * (min(kx, ky) - 1)))
    return float(min(v, 1.0))


def eta_squared(cat, num) -> float:
    """Share of the numeric column's variance explained by the categories."""
    num = np.asarray(num, dtype=np.float64)
    keep = ~np.isnan(num)
    codes, k = _codes(np.asarray(cat, dtype=object)[keep])
    num = num[keep]
    if len(num) == 0:
        raise DegenerateColumn("no numeric values")
    total = ((num - num.mean()) ** 2).sum()
    if total == 0:
        raise DegenerateColumn("constant numeric column")
    sums = np.bincount(codes, weights=num, minlength=k)
    counts = np.bincount(codes, minlength=k)
    present = counts > 0
    means = sums[present] / counts[present]
    between = (counts[present] * (means - num.mean()) ** 2).sum()
    return float(np.clip(between / total, 0.0, 1.0))


def association(data: Dataset, a: str, b: str) -> tuple[float, str]:
    """Type-appropriate coefficient for a pair; degenerate columns score 0."""
    na, nb = data.is_numeric(a), data.is_numeric(b)
    x, y = data.column(a), data.column(b)
    try:
        if na and nb:
            return pearson(x, y), PEARSON
        if not na and not nb:
            return cramers_v(x, y), CRAMERS_V
        if na:
            return eta_squared(y, x), ETA_SQUARED
        return eta_squared(x, y), ETA_SQUARED
    except DegenerateColumn:
        tag = PEARSON if na and nb else CRAMERS_V if not (na or nb) else ETA_SQUARED
        return 0.0, tag


@dataclass(frozen=True)
class CorrelationMatrix:
    attributes: tuple[str, ...]
    values: np.ndarray
    metrics: tuple[tuple[str, ...], ...]

    def coefficient(self, a: str, b: str) -> float:
        i, j = self.attributes.index(a), self.attributes.index(b)
        return float(self.values[i, j])


def correlation_matrix(data: Dataset, attributes: Sequence[str] | None = None) -> CorrelationMatrix:
    attrs = tuple(attributes or data.feature_names)
    v = len(attrs)
    values = np.eye(v)
    metrics = [[""] * v for _ in range(v)]
    for i in range(v):
        metrics[i][i] = PEARSON if data.is_numeric(attrs[i]) else CRAMERS_V
        for j in range(i + 1, v):
            c, tag = association(data, attrs[i], attrs[j])
            values[i, j] = values[j, i] = c
            metrics[i][j] = metrics[j][i] = tag
    return CorrelationMatrix(attrs, values, tuple(tuple(r) for r in metrics))


@dataclass(frozen=True)
class CorrelatedGroups:
    """Partition of the feature attributes into connected components."""

    tau_c: float
    groups: tuple[tuple[str, ...], ...]
    attributes: tuple[str, ...]

    def __post_init__(self):
        flat = [a for g in self.groups for a in g]
        if sorted(flat) != sorted(self.attributes) or len(set(flat)) != len(flat):
            raise ValueError("groups must partition the attributes")

    def group_of(self, attribute: str) -> tuple[str, ...]:
        for g in self.groups:
            if attribute in g:
                return g
        raise KeyError(attribute)

    @classmethod
    def singletons(cls, attributes: Sequence[str], tau_c: float = float("inf")) -> "CorrelatedGroups":
        return cls(tau_c, tuple((a,) for a in attributes), tuple(attributes))

    def to_dict(self) -> dict:
        return {
            "tau_c": self.tau_c,
            "groups": [list(g) for g in self.groups],
            "attributes": list(self.attributes),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CorrelatedGroups":
        groups = tuple(tuple(g) for g in doc["groups"])
        attrs = doc.get("attributes") or [a for g in groups for a in g]
        return cls(float(doc["tau_c"]), groups, tuple(attrs))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "CorrelatedGroups":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_groups(matrix: CorrelationMatrix, tau_c: float = DEFAULT_TAU_C) -> CorrelatedGroups:
    """Connected components of the graph with an edge wherever ``|corr| > tau_c``."""
    attrs = matrix.attributes
    parent = list(range(len(attrs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(attrs)):
        for j in range(i + 1, len(attrs)):
            if abs(matrix.values[i, j]) > tau_c:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    members: dict[int, list[str]] = {}
    for i, a in enumerate(attrs):
        members.setdefault(find(i), []).append(a)
    groups = tuple(tuple(members[r]) for r in sorted(members))
    return CorrelatedGroups(float(tau_c), groups, attrs)


def correlated_groups(data: Dataset, tau_c: float = DEFAULT_TAU_C) -> CorrelatedGroups:
    return build_groups(correlation_matrix(data), tau_c)
