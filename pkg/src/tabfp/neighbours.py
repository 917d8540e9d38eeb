"""Nearest-neighbour search over mixed numeric/categorical records.

Distance between two records over the query attributes::

    d(x, y)^2 = sum_numeric ((x_a - y_a) / sigma_a)^2 + sum_categorical [x_a != y_a]

``sigma_a`` is the standard deviation of attribute ``a`` over the indexed
records (attributes with ``sigma_a == 0`` are ignored).  Queries are answered
by a blocked exact scan: with one-hot categories the search space has tens of
dimensions, where a spatial tree prunes almost nothing, and a scan keeps the
distance arithmetic identical for every query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EmptyIndex, InvalidParameter
from .table import Dataset

TIE_DIGITS = 12


def round_sig(x, digits: int = TIE_DIGITS) -> np.ndarray:
    """Round to ``digits`` significant digits (vectorised, zero-safe)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    nz = (x != 0) & np.isfinite(x)
    mag = np.floor(np.log10(np.abs(x[nz])))
    scale = 10.0 ** (digits - 1 - mag)
    out[nz] = np.round(x[nz] * scale) / scale
    out[~nz] = x[~nz]
    return out


@dataclass(frozen=True)
class Neighbourhood:
    members: np.ndarray  # dataset row indices, ascending
    radius: float


class NeighbourIndex:
    """Spatial index over the records that have every query attribute present."""

    def __init__(self, data: Dataset, query_attrs: Sequence[str]):
        query_attrs = tuple(query_attrs)
        if not query_attrs:
            raise InvalidParameter("query attributes must be non-empty")
        self.query_attrs = query_attrs
        complete = np.ones(data.n, dtype=bool)
        for a in query_attrs:
            complete &= ~data.missing(a)
        self.rows = np.flatnonzero(complete)
        if len(self.rows) == 0:
            raise EmptyIndex("no record has all query attributes present")

        self.numeric, self._mean, self._std = [], [], []
        self.categorical, self._lookup = [], []
        z_cols, code_cols = [], []
        for a in query_attrs:
            col = data.column(a)[self.rows]
            if data.is_numeric(a):
                sd = float(col.std())
                if sd == 0.0:
                    continue
                mu = float(col.mean())
                self.numeric.append(a)
                self._mean.append(mu)
                self._std.append(sd)
                z_cols.append((col - mu) / sd)
            else:
                cats, codes = np.unique(col.astype(str), return_inverse=True)
                self.categorical.append(a)
                self._lookup.append({c: i for i, c in enumerate(cats.tolist())})
                code_cols.append(codes.ravel())
        m = len(self.rows)
        self._z = np.column_stack(z_cols) if z_cols else np.zeros((m, 0))
        self._codes = np.column_stack(code_cols) if code_cols else np.zeros((m, 0), dtype=np.int64)
        self._mean = np.array(self._mean)
        self._std = np.array(self._std)
        # one-hot layout of the categorical codes, for counting matches with a matrix product
        self._offsets = np.cumsum([0] + [len(lk) for lk in self._lookup])
        self._onehot = np.zeros((m, self._offsets[-1]), dtype=np.float32)
        for j in range(len(self._lookup)):
            self._onehot[np.arange(m), self._offsets[j] + self._codes[:, j]] = 1.0

    @property
    def size(self) -> int:
        return len(self.rows)

    # -- encoding -------------------------------------------------------------
    def encode(self, data: Dataset, row: int) -> tuple[np.ndarray, np.ndarray]:
        """Query coordinates of ``data[row]`` as (z-scores, category codes).

        Missing numeric values come back as NaN; unseen categories as -1.
        """
        z = np.array(
            [(data.column(a)[row] - mu) / sd for a, mu, sd in zip(self.numeric, self._mean, self._std)],
            dtype=np.float64,
        )
        codes = np.array(
            [lk.get(str(data.column(a)[row]), -1) for a, lk in zip(self.categorical, self._lookup)],
            dtype=np.int64,
        )
        return z, codes

    def encode_rows(self, data: Dataset, rows: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        rows = np.asarray(rows, dtype=np.int64)
        z = np.empty((len(rows), len(self.numeric)))
        for j, (a, mu, sd) in enumerate(zip(self.numeric, self._mean, self._std)):
            z[:, j] = (data.column(a)[rows] - mu) / sd
        codes = np.empty((len(rows), len(self.categorical)), dtype=np.int64)
        for j, (a, lk) in enumerate(zip(self.categorical, self._lookup)):
            col = data.column(a)[rows]
            codes[:, j] = [lk.get(str(c), -1) for c in col]
        return z, codes

    # -- distances ------------------------------------------------------------
    def distances(self, z: np.ndarray, codes: np.ndarray, candidates=None) -> np.ndarray:
        """Exact distances from a query to indexed records (positions in the index)."""
        zz = self._z if candidates is None else self._z[candidates]
        cc = self._codes if candidates is None else self._codes[candidates]
        return self._block_distances(zz, cc, z[None, :], codes[None, :])[0]

    @staticmethod
    def _block_distances(zz, cc, z, codes) -> np.ndarray:
        """(queries, records) distance matrix; NaN query coordinates are skipped."""
        d2 = np.zeros((len(z), len(zz)))
        has_nan = np.isnan(z).any()
        for j in range(zz.shape[1]):
            diff = zz[None, :, j] - z[:, j, None]
            d2 += np.where(np.isnan(diff), 0.0, diff * diff) if has_nan else diff * diff
        for j in range(cc.shape[1]):
            d2 += cc[None, :, j] != codes[:, j, None]
        return np.sqrt(d2)

    def _index_distances(self, z, codes) -> np.ndarray:
        """Same as ``_block_distances`` against the whole index, counting mismatches by matrix product."""
        d2 = np.zeros((len(z), self.size))
        tmp = np.empty_like(d2)
        has_nan = np.isnan(z).any()
        for j in range(self._z.shape[1]):
            np.subtract(self._z[None, :, j], z[:, j, None], out=tmp)
            np.multiply(tmp, tmp, out=tmp)
            if has_nan:
                tmp[np.isnan(tmp)] = 0.0
            d2 += tmp
        if self._codes.shape[1]:
            q = np.zeros((len(codes), self._offsets[-1]), dtype=np.float32)
            for j in range(self._codes.shape[1]):
                seen = codes[:, j] >= 0
                q[np.flatnonzero(seen), self._offsets[j] + codes[seen, j]] = 1.0
            d2 += self._codes.shape[1] - q @ self._onehot.T
        return np.sqrt(d2, out=d2)

    # -- queries --------------------------------------------------------------
    def select(self, z: np.ndarray, codes: np.ndarray, k: int) -> Neighbourhood:
        """At least ``k`` nearest records, expanded with every record tied at the k-th distance."""
        return next(self.select_many(z[None, :], codes[None, :], k))

    def select_many(self, z: np.ndarray, codes: np.ndarray, k: int, batch: int = 128) -> Iterator[Neighbourhood]:
        if k < 1:
            raise InvalidParameter("k must be >= 1")
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        codes = np.atleast_2d(codes)
        n_queries = max(len(z), len(codes))
        if z.size == 0:
            z = np.zeros((n_queries, self._z.shape[1]))
        if codes.size == 0:
            codes = np.zeros((n_queries, self._codes.shape[1]), dtype=np.int64)
        if self._z.shape[1] + self._codes.shape[1] == 0:
            for _ in range(n_queries):
                yield Neighbourhood(self.rows.copy(), 0.0)
            return
        k_eff = min(k, self.size)
        for start in range(0, n_queries, batch):
            zb, cb = z[start:start + batch], codes[start:start + batch]
            d = self._index_distances(zb, cb)
            # rounding is monotone, so the rounded k-th distance is the k-th rounded distance
            radii = round_sig(np.partition(d, k_eff - 1, axis=1)[:, k_eff - 1])
            near = d <= radii[:, None] * (1 + 1e-10) + 1e-300
            for q in range(len(d)):
                cand = np.flatnonzero(near[q])
                members = cand[round_sig(d[q, cand]) <= radii[q]]
                yield Neighbourhood(self.rows[members], float(radii[q]))


def select_neighbours(index: NeighbourIndex, data: Dataset, row: int, k: int) -> Neighbourhood:
    z, codes = index.encode(data, row)
    return index.select(z, codes, k)


def query_attributes(attribute: str, group: Iterable[str], available: Sequence[str]) -> tuple[str, ...]:
    """Context attributes for a target: its group minus itself, else every other attribute."""
    available = list(available)
    context = tuple(a for a in available if a in set(group) and a != attribute)
    if context:
        return context
    return tuple(a for a in available if a != attribute)
