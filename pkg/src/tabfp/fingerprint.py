"""Neighbourhood-based fingerprint embedding and blind detection.

Each record is visited with its keyed stream.  Selected records get one cell
re-sampled from the target values of its nearest neighbours: from the
high-density side when the mark bit is 1, from the low-density side when it is
0.  Detection recomputes neighbourhoods on the suspect copy, classifies the
observed value, and majority-votes per fingerprint position.
"""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .codes import UNDECIDED, bits_to_str
from .correlation import CorrelatedGroups
from .density import classify, partition, sample_from
from .errors import ConfigMismatch, EmptyIndex, InvalidParameter, LengthMismatch, UniformNeighbourhood
from .neighbours import NeighbourIndex, query_attributes
from .stream import check_gamma, locate
from .table import Dataset

MIN_REDUNDANCY = 16


@dataclass(frozen=True)
class EmbeddingConfig:
    gamma: float
    length: int
    groups: CorrelatedGroups
    k: int = 50
    phi: float = 0.5
    metric: str = "mixed-euclidean"

    def __post_init__(self):
        check_gamma(self.gamma)
        if self.length < 1:
            raise InvalidParameter("fingerprint length must be >= 1")
        if self.k < 1:
            raise InvalidParameter("k must be >= 1")
        if not 0 < self.phi < 1:
            raise InvalidParameter("phi must lie in (0, 1)")
        if self.metric != "mixed-euclidean":
            raise InvalidParameter(f"unsupported metric {self.metric!r}")

    @property
    def attributes(self) -> tuple[str, ...]:
        return self.groups.attributes

    def expected_redundancy(self, n: int) -> float:
        return n / (self.length * self.gamma)

    def to_dict(self) -> dict:
        return {
            "gamma": float(self.gamma),
            "length": int(self.length),
            "k": int(self.k),
            "phi": float(self.phi),
            "metric": self.metric,
            "groups": self.groups.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EmbeddingConfig":
        return cls(
            gamma=float(doc["gamma"]),
            length=int(doc["length"]),
            groups=CorrelatedGroups.from_dict(doc["groups"]),
            k=int(doc["k"]),
            phi=float(doc["phi"]),
            metric=doc.get("metric", "mixed-euclidean"),
        )

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class Mark(NamedTuple):
    row: int
    attribute: str
    bit: int
    mask: int
    sample_seed: int


def locations(data: Dataset, key, cfg: EmbeddingConfig) -> list[Mark]:
    """Selected records and their (attribute, bit, mask) under the owner key.

    Attributes are indexed against the configuration's attribute order, so a
    copy with dropped columns still maps every surviving record consistently.
    """
    v = len(cfg.attributes)
    out = []
    for row, pk in enumerate(data.pk.tolist()):
        loc = locate(key, pk, cfg.gamma, v, cfg.length)
        if loc is not None:
            out.append(Mark(row, cfg.attributes[loc.attribute], loc.bit, loc.mask, loc.sample_seed))
    return out


def _neighbourhood_partitions(data: Dataset, marks: Sequence[Mark], cfg: EmbeddingConfig,
                              membership: np.ndarray | None = None) -> list:
    """Density partition of each mark's neighbourhood (``None`` where uniform/unusable).

    Records with identical query coordinates share a neighbourhood, so each
    distinct query is resolved once.
    """
    available = data.feature_names
    result: list = [None] * len(marks)
    by_attr: dict[str, list[int]] = defaultdict(list)
    for j, mk in enumerate(marks):
        if mk.attribute in available:
            by_attr[mk.attribute].append(j)
    indexes: dict[tuple, NeighbourIndex | None] = {}
    for attr in sorted(by_attr):
        group = cfg.groups.group_of(attr)
        qattrs = query_attributes(attr, group, available)
        # a mark whose whole embedding-time context was deleted would vote on an unrelated neighbourhood
        if not set(qattrs) & set(query_attributes(attr, group, cfg.attributes)):
            continue
        if qattrs not in indexes:
            try:
                indexes[qattrs] = NeighbourIndex(data, qattrs)
            except EmptyIndex:
                indexes[qattrs] = None
        index = indexes[qattrs]
        if index is None:
            continue
        js = by_attr[attr]
        rows = [marks[j].row for j in js]
        z, codes = index.encode_rows(data, rows)
        keys: dict[bytes, int] = {}
        first, owner = [], []
        for q in range(len(rows)):
            kb = z[q].tobytes() + codes[q].tobytes()
            if kb not in keys:
                keys[kb] = len(first)
                first.append(q)
            owner.append(keys[kb])
        multiplicity = np.bincount(owner, minlength=len(first))
        target = data.column(attr)
        numeric = data.is_numeric(attr)
        parts = []
        uniq = np.array(first, dtype=np.int64)
        for u, nb in enumerate(index.select_many(z[uniq], codes[uniq], cfg.k)):
            if membership is not None:
                membership[nb.members] += multiplicity[u]
            try:
                parts.append(partition(target[nb.members], cfg.phi, numeric))
            except UniformNeighbourhood:
                parts.append(None)
        for j, u in zip(js, owner):
            result[j] = parts[u]
    return result


def _check_schema(data: Dataset, cfg: EmbeddingConfig, exact: bool) -> None:
    have, want = set(data.feature_names), set(cfg.attributes)
    if exact and have != want:
        raise ConfigMismatch("dataset attributes differ from the configured attributes")
    if not have <= want:
        raise ConfigMismatch(f"unknown attributes {sorted(have - want)}")


@dataclass
class EmbeddingPlan:
    """Everything about an embedding that does not depend on the fingerprint bits.

    Neighbourhoods are computed on the original data, so the same plan serves
    every recipient: only the choice between the low- and high-side sample
    changes with the bit.
    """

    cfg: EmbeddingConfig
    marks: list[Mark]
    partitions: list
    low: list
    high: list
    membership: np.ndarray | None = None

    @property
    def selected(self) -> int:
        return len(self.marks)

    @property
    def usable(self) -> np.ndarray:
        return np.array([p is not None for p in self.partitions], dtype=bool)

    def redundancy(self, usable_only: bool = False) -> np.ndarray:
        bits = [m.bit for m, ok in zip(self.marks, self.usable) if ok or not usable_only]
        return np.bincount(np.array(bits, dtype=np.int64), minlength=self.cfg.length)


def build_plan(data: Dataset, key, cfg: EmbeddingConfig, track_membership: bool = False) -> EmbeddingPlan:
    _check_schema(data, cfg, exact=True)
    marks = locations(data, key, cfg)
    membership = np.zeros(data.n, dtype=np.int64) if track_membership else None
    parts = _neighbourhood_partitions(data, marks, cfg, membership)
    missing = {a: data.missing(a) for a in data.feature_names}
    low, high = [], []
    for j, (mk, p) in enumerate(zip(marks, parts)):
        if p is not None and missing[mk.attribute][mk.row]:
            parts[j] = p = None  # missing numeric cells are never marked
        if p is None:
            low.append(None)
            high.append(None)
            continue
        low.append(sample_from(p, 0, np.random.default_rng(mk.sample_seed)))
        high.append(sample_from(p, 1, np.random.default_rng(mk.sample_seed)))
    return EmbeddingPlan(cfg, marks, parts, low, high, membership)


def _check_fingerprint(fingerprint, cfg: EmbeddingConfig) -> np.ndarray:
    bits = np.asarray([int(b) for b in fingerprint], dtype=np.int8)
    if len(bits) != cfg.length:
        raise LengthMismatch(f"fingerprint has {len(bits)} bits, configuration expects {cfg.length}")
    return bits


def apply_plan(data: Dataset, plan: EmbeddingPlan, fingerprint) -> Dataset:
    bits = _check_fingerprint(fingerprint, plan.cfg)
    updates: dict[str, tuple[list, list]] = defaultdict(lambda: ([], []))
    for mk, lo, hi in zip(plan.marks, plan.low, plan.high):
        if lo is None:
            continue
        new = hi if mk.mask ^ bits[mk.bit] else lo
        old = data.column(mk.attribute)[mk.row]
        if new != old:
            rows, vals = updates[mk.attribute]
            rows.append(mk.row)
            vals.append(new)
    out = data
    for attr in sorted(updates):
        rows, vals = updates[attr]
        out = out.replace(attr, rows, vals)
    return out


def embed(data: Dataset, key, fingerprint, cfg: EmbeddingConfig) -> Dataset:
    """Return a copy of ``data`` carrying ``fingerprint``."""
    _check_fingerprint(fingerprint, cfg)
    return apply_plan(data, build_plan(data, key, cfg), fingerprint)


def majority_vote(votes: np.ndarray) -> list:
    """Per position: the bit with more votes, or '?' on ties and empty positions."""
    out = []
    for c0, c1 in np.asarray(votes):
        out.append(1 if c1 > c0 else 0 if c0 > c1 else UNDECIDED)
    return out


@dataclass
class DetectionResult:
    template: list
    votes: np.ndarray  # (L, 2) counts of 0-votes and 1-votes
    vote_rows: np.ndarray = field(repr=False, default=None)
    vote_bits: np.ndarray = field(repr=False, default=None)
    vote_values: np.ndarray = field(repr=False, default=None)

    @property
    def redundancy(self) -> np.ndarray:
        return self.votes.sum(axis=1)

    @property
    def mean_redundancy(self) -> float:
        return float(self.redundancy.mean())

    @property
    def min_redundancy(self) -> int:
        return int(self.redundancy.min())

    def to_dict(self) -> dict:
        return {
            "template": bits_to_str(self.template),
            "votes": [[int(a), int(b)] for a, b in self.votes],
            "mean_redundancy": self.mean_redundancy,
            "min_redundancy": self.min_redundancy,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DetectionResult":
        from .codes import str_to_bits
        return cls(str_to_bits(doc["template"]), np.array(doc["votes"], dtype=np.int64).reshape(-1, 2))


def detect(data: Dataset, key, cfg: EmbeddingConfig) -> DetectionResult:
    """Blindly extract a fingerprint template from a (possibly attacked) copy."""
    _check_schema(data, cfg, exact=False)
    marks = locations(data, key, cfg)
    parts = _neighbourhood_partitions(data, marks, cfg)
    missing = {a: data.missing(a) for a in data.feature_names}
    rows, bits, values = [], [], []
    for mk, p in zip(marks, parts):
        if p is None or missing[mk.attribute][mk.row]:
            continue
        m = classify(p, data.column(mk.attribute)[mk.row])
        rows.append(mk.row)
        bits.append(mk.bit)
        values.append(m ^ mk.mask)
    votes = np.zeros((cfg.length, 2), dtype=np.int64)
    if bits:
        np.add.at(votes, (np.array(bits), np.array(values)), 1)
    return DetectionResult(majority_vote(votes), votes, np.array(rows, dtype=np.int64),
                           np.array(bits, dtype=np.int64), np.array(values, dtype=np.int64))


def vote_error_rate(data: Dataset, fingerprinted: Dataset, key, fingerprint, cfg: EmbeddingConfig) -> float:
    """Share of individual detection votes that disagree with the embedded bit."""
    _check_schema(data, cfg, exact=True)
    bits = _check_fingerprint(fingerprint, cfg)
    result = detect(fingerprinted, key, cfg)
    if len(result.vote_bits) == 0:
        return 0.0
    return float(np.mean(result.vote_values != bits[result.vote_bits]))
