"""Recipient fingerprint codes: keyed hash codes and Tardos codes with accusation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, LengthMismatch
from .stream import derive_stream

HASH = "hash"
TARDOS = "tardos"
UNDECIDED = "?"
_TWO64 = float(1 << 64)


def bits_to_str(bits: Sequence) -> str:
    return "".join(str(b) for b in bits)


def str_to_bits(text: str) -> list:
    return [UNDECIDED if c == UNDECIDED else int(c) for c in text]


def _uniforms(key, label: str, count: int) -> np.ndarray:
    stream = derive_stream(key, label)
    return np.array([stream[i] / _TWO64 for i in range(count)])


def generate_hash_code(key, recipient_id: int, length: int) -> np.ndarray:
    """``length`` bits taken most-significant-first from the stream of ``"fp" || id``."""
    if length < 1:
        raise InvalidParameter("code length must be >= 1")
    stream = derive_stream(key, f"fp{recipient_id}")
    bits = []
    i = 0
    while len(bits) < length:
        word = stream[i]
        bits.extend((word >> (63 - j)) & 1 for j in range(64))
        i += 1
    return np.array(bits[:length], dtype=np.int8)


def tardos_length(n_users: int, c: int, eps: float) -> int:
    return math.ceil(100 * c * c * math.log(n_users / eps))


def tardos_cutoff(c: int) -> float:
    return 1.0 / (300 * c)


@dataclass(frozen=True)
class Codebook:
    kind: str
    codes: np.ndarray  # (N, L) of 0/1
    p: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    @property
    def length(self) -> int:
        return self.codes.shape[1]

    def code(self, recipient: int) -> np.ndarray:
        return self.codes[recipient]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "L": self.length,
            "N": self.n,
            "p": None if self.p is None else [float(x) for x in self.p],
            "codes": [bits_to_str(row) for row in self.codes],
            "params": dict(self.params),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Codebook":
        codes = np.array([[int(c) for c in row] for row in doc["codes"]], dtype=np.int8)
        if codes.shape != (doc["N"], doc["L"]):
            raise LengthMismatch("codebook header disagrees with its codes")
        p = None if doc.get("p") is None else np.array(doc["p"], dtype=np.float64)
        return cls(doc["kind"], codes, p, dict(doc.get("params", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Codebook":
        return cls.from_dict(json.loads(Path(path).read_text()))


def hash_codebook(key, n_users: int, length: int) -> Codebook:
    codes = np.array([generate_hash_code(key, s, length) for s in range(n_users)])
    return Codebook(HASH, codes, None, {"N": n_users, "L": length})


def tardos_generate(key, n_users: int, length: int | None = None, c: int = 2, eps: float = 0.01) -> Codebook:
    """Tardos code: biases ``p_l = sin^2(r_l)``, ``r_l ~ U[t', pi/2 - t']``, bits ~ Bernoulli(p_l)."""
    if n_users < 2 or c < 2 or not 0 < eps < 1:
        raise InvalidParameter("need N >= 2, c >= 2 and 0 < eps < 1")
    if length is None:
        length = tardos_length(n_users, c, eps)
    if length < 1:
        raise InvalidParameter("code length must be >= 1")
    t = tardos_cutoff(c)
    t_prime = math.asin(math.sqrt(t))
    r = t_prime + _uniforms(key, "tardos-bias", length) * (math.pi / 2 - 2 * t_prime)
    p = np.sin(r) ** 2
    codes = np.array(
        [(_uniforms(key, f"tardos-code-{s}", length) < p).astype(np.int8) for s in range(n_users)]
    )
    return Codebook(TARDOS, codes, p, {"c": c, "eps": eps, "t": t})


def _as_template(detected) -> list:
    if isinstance(detected, str):
        return str_to_bits(detected)
    return [UNDECIDED if b == UNDECIDED else int(b) for b in detected]


def detection_confidence(detected, code) -> float:
    """Fraction of positions where the detected bit equals the code bit ('?' never matches)."""
    det = _as_template(detected)
    code = [int(b) for b in code]
    if len(det) != len(code):
        raise LengthMismatch(f"detected length {len(det)} != code length {len(code)}")
    return sum(1 for d, c in zip(det, code) if d != UNDECIDED and d == c) / len(code)


@dataclass(frozen=True)
class AccusationReport:
    scores: np.ndarray
    threshold: float
    x: float
    accused: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "scores": [float(s) for s in self.scores],
            "threshold": float(self.threshold),
            "x": self.x,
            "accused": list(self.accused),
        }


def threshold_accusation(scores: np.ndarray, x: float = 1.0) -> AccusationReport:
    """Accuse every recipient whose score exceeds ``mean + x * std`` of all scores."""
    scores = np.asarray(scores, dtype=np.float64)
    z = float(scores.mean() + x * scores.std())
    accused = tuple(int(s) for s in np.flatnonzero(scores > z))
    return AccusationReport(scores, z, x, accused)


def tardos_scores(detected, book: Codebook) -> np.ndarray:
    det = _as_template(detected)
    if len(det) != book.length:
        raise LengthMismatch(f"detected length {len(det)} != code length {book.length}")
    ones = np.array([d == 1 for d in det])
    p = book.p[ones]
    codes = book.codes[:, ones]
    pos = np.sqrt((1 - p) / p)
    neg = -np.sqrt(p / (1 - p))
    return np.where(codes == 1, pos, neg).sum(axis=1)


def tardos_accuse(detected, book: Codebook, x: float = 1.0) -> AccusationReport:
    """Score only positions detected as 1; undecided and 0 positions add nothing."""
    if book.p is None:
        raise InvalidParameter("Tardos accusation needs a codebook with biases")
    return threshold_accusation(tardos_scores(detected, book), x)


def hash_accuse(detected, book: Codebook, x: float = 1.0) -> AccusationReport:
    """Hash codes: score recipients by detection confidence and apply the same threshold."""
    scores = np.array([detection_confidence(detected, c) for c in book.codes])
    return threshold_accusation(scores, x)


def accuse(detected, book: Codebook, x: float = 1.0) -> AccusationReport:
    if book.kind == TARDOS:
        return tardos_accuse(detected, book, x)
    return hash_accuse(detected, book, x)
