"""Keyed per-record pseudo-random streams.

The stream for a record is a pure function of the owner key and the record's
primary key, so embedding and detection see the same sequence on any machine::

    seed = SHA-256(key || 0x1F || utf8(pk))
    s_i  = uint64_be(SHA-256(seed || uint64_be(i))[:8])
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import InvalidKey, InvalidParameter

_SEPARATOR = b"\x1f"
_SELECT_MODULUS = 1 << 32


def _as_bytes(key) -> bytes:
    if isinstance(key, str):
        key = key.encode("utf-8")
    return bytes(key)


@dataclass
class RecordStream:
    """Lazily evaluated sequence ``s_0, s_1, ...`` of unsigned 64-bit integers."""

    seed: bytes
    _cache: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, i: int) -> int:
        if i < 0:
            raise IndexError(i)
        try:
            return self._cache[i]
        except KeyError:
            digest = hashlib.sha256(self.seed + i.to_bytes(8, "big")).digest()
            value = self._cache[i] = int.from_bytes(digest[:8], "big")
            return value

    def take(self, count: int) -> list[int]:
        return [self[i] for i in range(count)]


def derive_stream(key, pk) -> RecordStream:
    key = _as_bytes(key)
    if not key:
        raise InvalidKey("the secret key must be non-empty")
    seed = hashlib.sha256(key + _SEPARATOR + str(pk).encode("utf-8")).digest()
    return RecordStream(seed)


def check_gamma(gamma: float) -> None:
    if not gamma >= 1:
        raise InvalidParameter(f"gamma must be >= 1, got {gamma}")


def is_selected(s0: int, gamma: float) -> bool:
    """Select with probability ``1/gamma`` using the low 32 bits of ``s0``."""
    check_gamma(gamma)
    return (s0 % _SELECT_MODULUS) / _SELECT_MODULUS < 1.0 / gamma


def mask_bit(s3: int) -> int:
    return s3 & 1


class Location(NamedTuple):
    """Where (and how) one record carries a mark."""

    attribute: int
    bit: int
    mask: int
    sample_seed: int


def locate(key, pk, gamma: float, v: int, length: int) -> Location | None:
    """Return the mark location for a record, or ``None`` if it is not selected."""
    stream = derive_stream(key, pk)
    if not is_selected(stream[0], gamma):
        return None
    return Location(stream[1] % v, stream[2] % length, mask_bit(stream[3]), stream[4])
