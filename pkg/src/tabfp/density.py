"""Low/high-density split of a neighbourhood's target values.

Numeric targets use a Gaussian kernel density estimate with Scott's bandwidth;
the threshold is the ``phi``-quantile of the density evaluated at the target
values.  Categorical targets accumulate the rarest categories into the
low-density side while their total frequency stays within ``phi`` of the whole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, UniformNeighbourhood
from .neighbours import round_sig

_SQRT_2PI = np.sqrt(2 * np.pi)


def _check_phi(phi: float) -> None:
    if not 0 < phi < 1:
        raise InvalidParameter(f"phi must lie in (0, 1), got {phi}")


def scott_bandwidth(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1) * len(values) ** (-0.2))


def gaussian_kde(points, support: np.ndarray, weights: np.ndarray, bandwidth: float) -> np.ndarray:
    """Kernel sum over ``support`` (with multiplicities ``weights``) evaluated at ``points``."""
    points = np.atleast_1d(np.asarray(points, dtype=np.float64))
    total = weights.sum()
    out = np.empty(len(points))
    for start in range(0, len(points), 1024):
        u = (points[start:start + 1024, None] - support[None, :]) / bandwidth
        out[start:start + 1024] = (np.exp(-0.5 * u * u) * weights).sum(axis=1)
    return out / (total * bandwidth * _SQRT_2PI)


@dataclass(frozen=True)
class ContinuousPartition:
    values: np.ndarray  # distinct target values, ascending
    counts: np.ndarray
    density: np.ndarray  # rounded density at each distinct value
    bandwidth: float
    threshold: float
    high: np.ndarray  # bool per distinct value

    def side(self, high: bool) -> np.ndarray:
        """Members of one side as a multiset (ascending)."""
        mask = self.high if high else ~self.high
        return np.repeat(self.values[mask], self.counts[mask])

    @property
    def hd(self) -> np.ndarray:
        return self.side(True)

    @property
    def ld(self) -> np.ndarray:
        return self.side(False)

    def density_at(self, x) -> np.ndarray:
        return round_sig(gaussian_kde(x, self.values, self.counts, self.bandwidth))


@dataclass(frozen=True)
class CategoricalPartition:
    frequencies: tuple[tuple[str, int], ...]  # ascending by (frequency, token)
    low: frozenset
    high: frozenset

    def side(self, high: bool) -> list[str]:
        members = self.high if high else self.low
        return [c for c, f in sorted(self.frequencies) if c in members for _ in range(f)]

    @property
    def hd(self) -> list[str]:
        return self.side(True)

    @property
    def ld(self) -> list[str]:
        return self.side(False)


def partition_continuous(target_values, phi: float) -> ContinuousPartition:
    _check_phi(phi)
    x = np.asarray(target_values, dtype=np.float64)
    x = x[~np.isnan(x)]
    values, counts = np.unique(x, return_counts=True)
    if len(values) < 2:
        raise UniformNeighbourhood("target values have a single distinct value")
    h = scott_bandwidth(x)
    density = round_sig(gaussian_kde(values, values, counts, h))
    threshold = float(np.quantile(np.repeat(density, counts), phi))
    high = density > threshold
    if not high.any():
        # all densities tie at the top: move the densest value (smallest on ties)
        top = np.flatnonzero(density == density.max())
        high[top[0]] = True
    return ContinuousPartition(values, counts, density, h, threshold, high)


def partition_categorical(target_values, phi: float) -> CategoricalPartition:
    _check_phi(phi)
    tokens, counts = np.unique(np.asarray(target_values, dtype=object).astype(str), return_counts=True)
    if len(tokens) < 2:
        raise UniformNeighbourhood("target values have a single category")
    freq = sorted(zip(counts.tolist(), tokens.tolist()))
    budget = phi * counts.sum()
    low, acc = [], 0
    for f, token in freq:
        if low and acc + f > budget:
            break
        low.append(token)
        acc += f
    if len(low) == len(freq):
        low.pop()
    high = [t for _, t in freq if t not in set(low)]
    return CategoricalPartition(
        tuple((t, f) for f, t in freq), frozenset(low), frozenset(high)
    )


def partition(target_values, phi: float, numeric: bool):
    if numeric:
        return partition_continuous(target_values, phi)
    return partition_categorical(target_values, phi)


def sample_from(part, mark: int, rng: np.random.Generator):
    """Draw uniformly from the high side (mark 1) or low side (mark 0) multiset."""
    members = part.side(bool(mark))
    return members[int(rng.integers(len(members)))]


def classify(part, observed) -> int:
    """Mark bit carried by an observed value under a partition."""
    if isinstance(part, CategoricalPartition):
        return int(str(observed) in part.high)
    pos = np.searchsorted(part.values, observed)
    if pos < len(part.values) and part.values[pos] == observed:
        return int(part.high[pos])
    return int(part.density_at(observed)[0] > part.threshold)
