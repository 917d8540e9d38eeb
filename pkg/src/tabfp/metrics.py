"""Fidelity and tracing metrics: histogram distances, accuracy, correlation drift, collusion outcomes."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .codes import AccusationReport
from .correlation import correlation_matrix
from .errors import EmptyColumn, SchemaMismatch
from .table import Dataset, cell_changes, check_aligned

BINS = 20
SMOOTHING = 1e-9
CORRELATION_FLOOR = 1e-3


def _numeric(col) -> bool:
    return np.asarray(col).dtype.kind == "f"


def histograms(reference, other, bins: int = BINS) -> tuple[np.ndarray, np.ndarray]:
    """Counts of both columns over a shared support.

    Numeric columns use ``bins`` equal-width bins spanning the reference
    column's range; values outside it fall into the edge bins.  Categorical
    columns use the union of categories.  Missing values are ignored.
    """
    if _numeric(reference) != _numeric(other):
        raise SchemaMismatch("cannot compare a numeric column with a categorical one")
    if _numeric(reference):
        a = np.asarray(reference, dtype=np.float64)
        b = np.asarray(other, dtype=np.float64)
        a, b = a[~np.isnan(a)], b[~np.isnan(b)]
        if len(a) == 0 or len(b) == 0:
            raise EmptyColumn("column has no observed values")
        lo, hi = float(a.min()), float(a.max())
        if hi == lo:
            edges = np.array([lo - 0.5, hi + 0.5])
        else:
            edges = np.linspace(lo, hi, bins + 1)
        nb = len(edges) - 1

        def count(x):
            idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, nb - 1)
            return np.bincount(idx, minlength=nb).astype(np.float64)

        return count(a), count(b)
    a = np.asarray(reference, dtype=object).astype(str)
    b = np.asarray(other, dtype=object).astype(str)
    if len(a) == 0 or len(b) == 0:
        raise EmptyColumn("column has no observed values")
    cats = np.union1d(a, b)
    return (np.array([np.sum(a == c) for c in cats], dtype=np.float64),
            np.array([np.sum(b == c) for c in cats], dtype=np.float64))


def hellinger_counts(p: np.ndarray, q: np.ndarray) -> float:
    p = p / p.sum()
    q = q / q.sum()
    bc = float(np.sum(np.sqrt(p * q)))
    return float(np.sqrt(max(0.0, 1.0 - bc)))


def kl_counts(p: np.ndarray, q: np.ndarray, smoothing: float = SMOOTHING) -> float:
    """``KL(p || q)`` after adding ``smoothing`` to every bin."""
    p = p + smoothing
    q = q + smoothing
    p = p / p.sum()
    q = q / q.sum()
    return float(max(0.0, np.sum(p * np.log(p / q))))


def hellinger(col_a, col_b, bins: int = BINS) -> float:
    """Hellinger distance between the two columns' histograms (bins follow ``col_a``)."""
    p, q = histograms(col_a, col_b, bins)
    return hellinger_counts(p, q)


def kl_divergence(col_fp, col_orig, bins: int = BINS, smoothing: float = SMOOTHING) -> float:
    """Divergence of the fingerprinted column from the original reference."""
    ref, fp = histograms(col_orig, col_fp, bins)
    return kl_counts(fp, ref, smoothing)


def data_accuracy(orig: Dataset, fp: Dataset) -> float:
    """``1 - changed cells / (n * v)``."""
    changed = sum(int(m.sum()) for m in cell_changes(orig, fp).values())
    return 1.0 - changed / (orig.n * orig.v)


def correlation_change(orig: Dataset, fp: Dataset, floor: float = CORRELATION_FLOOR) -> tuple[tuple[str, ...], np.ndarray]:
    """Entrywise ``|corr_fp - corr_orig| / max(|corr_orig|, floor)``."""
    fp = fp.take(check_aligned(orig, fp))
    a, b = correlation_matrix(orig), correlation_matrix(fp)
    change = np.abs(b.values - a.values) / np.maximum(np.abs(a.values), floor)
    np.fill_diagonal(change, 0.0)
    return a.attributes, change


@dataclass(frozen=True)
class CollusionOutcome:
    accused: tuple[int, ...]
    colluders: tuple[int, ...]
    precision: float | None
    recall: float

    @property
    def false_accusation_rate(self) -> float | None:
        return None if self.precision is None else 1.0 - self.precision

    def to_dict(self) -> dict:
        return {
            "accused": list(self.accused),
            "colluders": list(self.colluders),
            "precision": self.precision,
            "false_accusation_rate": self.false_accusation_rate,
            "recall": self.recall,
        }


def collusion_outcome(report: AccusationReport | Iterable[int], colluders: Iterable[int]) -> CollusionOutcome:
    accused = report.accused if isinstance(report, AccusationReport) else tuple(report)
    accused = tuple(sorted(set(int(a) for a in accused)))
    truth = tuple(sorted(set(int(c) for c in colluders)))
    hits = len(set(accused) & set(truth))
    precision = hits / len(accused) if accused else None
    recall = hits / len(truth) if truth else 0.0
    return CollusionOutcome(accused, truth, precision, recall)


@dataclass(frozen=True)
class FidelityReport:
    attributes: tuple[str, ...]
    hellinger: np.ndarray
    kl: np.ndarray
    accuracy: float
    correlation_attributes: tuple[str, ...]
    correlation_change: np.ndarray

    @property
    def mean_hellinger(self) -> float:
        return float(self.hellinger.mean())

    @property
    def mean_kl(self) -> float:
        return float(self.kl.mean())

    @property
    def max_correlation_change(self) -> float:
        return float(self.correlation_change.max()) if self.correlation_change.size else 0.0

    def to_dict(self) -> dict:
        return {
            "attributes": list(self.attributes),
            "hellinger": {a: float(h) for a, h in zip(self.attributes, self.hellinger)},
            "kl": {a: float(k) for a, k in zip(self.attributes, self.kl)},
            "mean_hellinger": self.mean_hellinger,
            "mean_kl": self.mean_kl,
            "accuracy": self.accuracy,
            "correlation_change": {
                "attributes": list(self.correlation_attributes),
                "values": [[float(x) for x in row] for row in self.correlation_change],
                "max": self.max_correlation_change,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """One row per metric, one column per attribute plus the aggregate mean."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", *self.attributes, "mean"])
        w.writerow(["hellinger", *[f"{h:.6g}" for h in self.hellinger], f"{self.mean_hellinger:.6g}"])
        w.writerow(["kl", *[f"{k:.6g}" for k in self.kl], f"{self.mean_kl:.6g}"])
        return buf.getvalue()

    def save(self, directory, stem: str = "fidelity") -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{stem}.json").write_text(self.to_json())
        (directory / f"{stem}.csv").write_text(self.to_csv())


def fidelity_report(orig: Dataset, fp: Dataset, bins: int = BINS, with_correlation: bool = True) -> FidelityReport:
    """Per-attribute Hellinger and KL, relative accuracy and correlation drift of ``fp`` against ``orig``."""
    fp = fp.take(check_aligned(orig, fp))
    names = orig.feature_names
    hel = np.array([hellinger(orig.column(a), fp.column(a), bins) for a in names])
    kl = np.array([kl_divergence(fp.column(a), orig.column(a), bins) for a in names])
    if with_correlation:
        attrs, change = correlation_change(orig, fp)
    else:
        attrs, change = (), np.zeros((0, 0))
    return FidelityReport(tuple(names), hel, kl, data_accuracy(orig, fp), attrs, change)


def mean_hellinger(orig: Dataset, other: Dataset, bins: int = BINS) -> float:
    """Aggregate Hellinger over the attributes both tables share."""
    shared = [a for a in orig.feature_names if a in other.feature_names]
    return float(np.mean([hellinger(orig.column(a), other.column(a), bins) for a in shared]))
