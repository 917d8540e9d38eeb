"""Attacks on fingerprinted copies: subsetting, value flipping, cluster flipping, collusion."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyResult, InvalidParameter, SchemaMismatch
from .table import Dataset, check_aligned

HORIZONTAL = "horizontal"
VERTICAL = "vertical"
FLIP = "flip"
CLUSTER_FLIP = "cluster_flip"
COLLUDE_AVERAGE = "collude_average"
COLLUDE_SUBSTITUTE = "collude_substitute"
COLLUDE_SUBSTITUTE_FLIP = "collude_substitute_flip"

KINDS = (HORIZONTAL, VERTICAL, FLIP, CLUSTER_FLIP,
         COLLUDE_AVERAGE, COLLUDE_SUBSTITUTE, COLLUDE_SUBSTITUTE_FLIP)


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    strength: float = 0.0
    seed: int = 0
    influence: float = 1.0
    flip_fraction: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameter(f"unknown attack {self.kind!r}")
        _check_strength(self.strength)


def _check_strength(strength: float) -> None:
    if not 0 <= strength <= 1:
        raise InvalidParameter(f"strength must lie in [0, 1], got {strength}")


def horizontal_subset(data: Dataset, strength: float, seed: int = 0) -> Dataset:
    """Delete ``floor(strength * n)`` uniformly chosen records."""
    _check_strength(strength)
    drop = int(np.floor(strength * data.n))
    if drop >= data.n:
        raise EmptyResult("the attack would delete every record")
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.permutation(data.n)[drop:])
    return data.take(keep)


def vertical_subset(data: Dataset, strength: float, seed: int = 0) -> Dataset:
    """Delete ``floor(strength * v)`` uniformly chosen feature columns (never the key)."""
    _check_strength(strength)
    names = data.feature_names
    drop = int(np.floor(strength * len(names)))
    if drop >= len(names):
        raise EmptyResult("the attack would delete every feature column")
    rng = np.random.default_rng(seed)
    gone = [names[i] for i in rng.permutation(len(names))[:drop]]
    return data.drop(gone)


def _domains(data: Dataset) -> dict[str, np.ndarray]:
    out = {}
    for name in data.feature_names:
        col = data.column(name)
        if data.is_numeric(name):
            out[name] = np.unique(col[~np.isnan(col)])
        else:
            out[name] = np.unique(col.astype(str)).astype(object)
    return out


def _different_values(current: np.ndarray, domain: np.ndarray, numeric: bool, rng) -> np.ndarray:
    """For each current value, a uniform draw from the domain excluding that value."""
    size = len(domain)
    if numeric:
        pos = np.searchsorted(domain, current)
        pos = np.where(np.isnan(current), size, pos)
        present = (pos < size) & (domain[np.minimum(pos, size - 1)] == current)
    else:
        lookup = {v: i for i, v in enumerate(domain.tolist())}
        pos = np.array([lookup.get(str(v), size) for v in current])
        present = pos < size
    draws = np.where(present, rng.integers(0, size - 1, size=len(current)),
                     rng.integers(0, size, size=len(current)))
    draws = np.where(present & (draws >= pos), draws + 1, draws)
    return domain[draws]


def _flip_cells(data: Dataset, rows: np.ndarray, strength: float, rng, total_cells: int | None = None,
                domains: dict | None = None) -> Dataset:
    """Flip ``floor(strength * cells)`` cells among ``rows`` x features to different domain values."""
    domains = domains or _domains(data)
    names = [a for a in data.feature_names if len(domains[a]) >= 2]
    cells = len(rows) * data.v if total_cells is None else total_cells
    count = int(np.floor(strength * cells))
    eligible = len(rows) * len(names)
    count = min(count, eligible)
    if count == 0:
        return data
    chosen = rng.choice(eligible, size=count, replace=False)
    row_pos, attr_pos = np.divmod(chosen, len(names))
    out = data
    for j, name in enumerate(names):
        sel = np.sort(rows[row_pos[attr_pos == j]])
        if len(sel) == 0:
            continue
        new = _different_values(data.column(name)[sel], domains[name], data.is_numeric(name), rng)
        out = out.replace(name, sel, new)
    return out


def flip(data: Dataset, strength: float, seed: int = 0) -> Dataset:
    """Replace ``floor(strength * n * v)`` random cells with other values from their attribute's domain."""
    _check_strength(strength)
    rng = np.random.default_rng(seed)
    return _flip_cells(data, np.arange(data.n), strength, rng, total_cells=data.n * data.v)


def influence_counts(data: Dataset, attacker_key, guess_cfg) -> np.ndarray:
    """How often each record appears in the neighbourhoods of a proxy embedding run."""
    from .fingerprint import build_plan

    plan = build_plan(data, attacker_key, guess_cfg, track_membership=True)
    return plan.membership


def cluster_flip(data: Dataset, attacker_key, guess_cfg, influence_fraction: float,
                 flip_strength: float, seed: int = 0, counts: np.ndarray | None = None) -> Dataset:
    """Flip ``flip_strength`` of the cells of the most influential records.

    Influence is the number of neighbourhoods a record joins when the attacker
    replays the embedding with their own key and guessed parameters.  Ties in
    influence are broken by row order.
    """
    _check_strength(influence_fraction)
    _check_strength(flip_strength)
    if counts is None:
        counts = influence_counts(data, attacker_key, guess_cfg)
    size = int(np.floor(influence_fraction * data.n))
    order = np.argsort(-counts, kind="stable")
    cluster = np.sort(order[:size])
    rng = np.random.default_rng(seed)
    return _flip_cells(data, cluster, flip_strength, rng)


def _check_copies(copies: Sequence[Dataset]) -> list[np.ndarray]:
    if len(copies) < 2:
        raise InvalidParameter("collusion needs at least two copies")
    base = copies[0]
    perms = []
    for other in copies:
        if other.schema != base.schema:
            raise SchemaMismatch("colluding copies have different schemas")
        perms.append(check_aligned(base, other))
    return perms


def collude(copies: Sequence[Dataset], strategy: str, flip_fraction: float = 0.0, seed: int = 0) -> Dataset:
    """Merge colluders' copies into one dataset.

    ``average``: numeric mean, categorical majority (random tie-break).
    ``substitute``: keep agreeing cells; replace disagreeing ones with a domain
    value none of the colluders holds there (a random colluder's value if no
    such value exists).  ``substitute_flip`` then also flips ``flip_fraction``
    of the agreeing cells.
    """
    strategy = strategy.removeprefix("collude_")
    if strategy not in ("average", "substitute", "substitute_flip"):
        raise InvalidParameter(f"unknown collusion strategy {strategy!r}")
    _check_strength(flip_fraction)
    perms = _check_copies(copies)
    base = copies[0]
    rng = np.random.default_rng(seed)
    c = len(copies)
    stacks = {name: [cp.column(name)[p] for cp, p in zip(copies, perms)] for name in base.feature_names}

    out = base
    agreeing_cells: list[tuple[str, np.ndarray]] = []
    domain_of = {}
    for name in base.feature_names:
        numeric = base.is_numeric(name)
        if numeric:
            mat = np.vstack(stacks[name])
            same = np.all((mat == mat[0]) | (np.isnan(mat) & np.isnan(mat[0])), axis=0)
        else:
            mat = np.vstack(stacks[name]).astype(object)
            same = np.all(mat == mat[0], axis=0)
        agreeing_cells.append((name, np.flatnonzero(same)))
        rows = np.flatnonzero(~same)
        if len(rows) == 0:
            continue
        if strategy == "average":
            if numeric:
                new = np.nanmean(mat[:, rows], axis=0)
            else:
                new = [_majority(mat[:, r].tolist(), rng) for r in rows]
        else:
            if name not in domain_of:
                pool = np.concatenate([s for s in stacks[name]])
                if numeric:
                    pool = pool[~np.isnan(pool)]
                domain_of[name] = np.unique(pool.astype(object) if not numeric else pool)
            domain = domain_of[name]
            new = []
            for r in rows:
                held = set(mat[:, r].tolist())
                options = [x for x in domain.tolist() if x not in held]
                if options:
                    new.append(options[int(rng.integers(len(options)))])
                else:
                    new.append(mat[int(rng.integers(c)), r])
        out = out.replace(name, rows, new)

    if strategy == "substitute_flip" and flip_fraction > 0:
        domains = _domains(out)
        for name, rows in agreeing_cells:
            if len(domains[name]) < 2 or len(rows) == 0:
                continue
            count = int(np.floor(flip_fraction * len(rows)))
            if count == 0:
                continue
            sel = np.sort(rng.choice(rows, size=count, replace=False))
            new = _different_values(out.column(name)[sel], domains[name], out.is_numeric(name), rng)
            out = out.replace(name, sel, new)
    return out


def _majority(values: list, rng) -> object:
    tally: dict = {}
    for v in values:
        tally[v] = tally.get(v, 0) + 1
    best = max(tally.values())
    winners = sorted(v for v, t in tally.items() if t == best)
    return winners[int(rng.integers(len(winners)))]


def run_attack(spec: AttackSpec, data: Dataset | Sequence[Dataset], attacker_key=None, guess_cfg=None) -> Dataset:
    """Dispatch an :class:`AttackSpec` to the matching transform."""
    if spec.kind == HORIZONTAL:
        return horizontal_subset(data, spec.strength, spec.seed)
    if spec.kind == VERTICAL:
        return vertical_subset(data, spec.strength, spec.seed)
    if spec.kind == FLIP:
        return flip(data, spec.strength, spec.seed)
    if spec.kind == CLUSTER_FLIP:
        if attacker_key is None or guess_cfg is None:
            raise InvalidParameter("cluster flipping needs an attacker key and a guessed configuration")
        return cluster_flip(data, attacker_key, guess_cfg, spec.influence, spec.strength, spec.seed)
    return collude(data, spec.kind, spec.flip_fraction, spec.seed)
