"""Occupation configurations: the group {0,1}^m under bitwise XOR.

A configuration x = (x_1, ..., x_m) records which fermionic modes are filled.
It is stored as an unsigned machine word with bit k-1 holding x_k, so the
integer index of a configuration is sum_k x_k 2^(k-1) and mode 1 is the least
significant bit.  All group operations are single XOR/popcount instructions.

Shifts are configurations used additively; every shift is its own inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import check_modes
from .errors import DimensionError, ValidationError


def _check_mode_index(k: int, m: int) -> None:
    if not 1 <= k <= m:
        raise ValidationError(f"mode index k = {k} out of range 1..{m}")


@dataclass(frozen=True)
class Configuration:
    """An m-bit occupation word; bit k-1 of ``word`` is the occupation x_k."""

    word: int
    m: int

    def __post_init__(self):
        check_modes(self.m)
        if not 0 <= self.word < (1 << self.m):
            raise ValidationError(
                f"word {self.word} out of range for m = {self.m} modes"
            )

    @classmethod
    def from_bits(cls, bits) -> "Configuration":
        """Build from an iterable (x_1, ..., x_m) of 0/1 entries."""
        bits = list(bits)
        word = 0
        for k, b in enumerate(bits, start=1):
            if b not in (0, 1):
                raise ValidationError(f"bit x_{k} must be 0 or 1, got {b!r}")
            word |= b << (k - 1)
        return cls(word, len(bits))

    @classmethod
    def from_string(cls, text: str) -> "Configuration":
        """Parse the serialized form "x1x2...xm", e.g. "0110"."""
        if not text or any(ch not in "01" for ch in text):
            raise ValidationError(f"configuration string must be nonempty 0/1, got {text!r}")
        return cls.from_bits(int(ch) for ch in text)

    def bit(self, k: int) -> int:
        """Occupation x_k, 1-based mode index."""
        _check_mode_index(k, self.m)
        return (self.word >> (k - 1)) & 1

    def bits(self) -> tuple:
        return tuple((self.word >> (k - 1)) & 1 for k in range(1, self.m + 1))

    @property
    def index(self) -> int:
        """Integer index sum_k x_k 2^(k-1); a bijection onto 0..2^m-1."""
        return self.word

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits())


# A shift is just a configuration acting by XOR.
Shift = Configuration


def translate(x: Configuration, t: Shift) -> Configuration:
    """Componentwise addition mod 2: result_k = x_k XOR t_k."""
    if x.m != t.m:
        raise DimensionError(f"mode counts differ: {x.m} vs {t.m}")
    return Configuration(x.word ^ t.word, x.m)


def complement(x: Configuration) -> Configuration:
    """Flip every bit: result_k = 1 - x_k.  Equals translate by all-ones."""
    return Configuration(x.word ^ ((1 << x.m) - 1), x.m)


def generator(k: int, m: int) -> Shift:
    """The shift delta_k with a single 1 in position k."""
    check_modes(m)
    _check_mode_index(k, m)
    return Configuration(1 << (k - 1), m)


def all_ones(m: int) -> Shift:
    check_modes(m)
    return Configuration((1 << m) - 1, m)


def prefix_parity(x: Configuration, k: int) -> int:
    """(x_1 + ... + x_{k-1}) mod 2; zero for k = 1 (empty sum)."""
    _check_mode_index(k, x.m)
    return prefix_parity_word(x.word, k)


def prefix_parity_word(word: int, k: int) -> int:
    """Word-level prefix parity; caller guarantees 1 <= k."""
    return (word & ((1 << (k - 1)) - 1)).bit_count() & 1


def enumerate_configurations(m: int) -> list:
    """All 2^m configurations in increasing integer-index order."""
    check_modes(m)
    return [Configuration(w, m) for w in range(1 << m)]


# ---------------------------------------------------------------------------
# Vectorized index tables.  The direct-integral modules index everything by
# the integer word, so they consume plain numpy arrays rather than
# Configuration objects.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def bit_table(m: int) -> np.ndarray:
    """(2^m, m) int8 array; entry [x, k-1] is bit x_k of word x."""
    check_modes(m)
    words = np.arange(1 << m, dtype=np.uint32)
    return ((words[:, None] >> np.arange(m, dtype=np.uint32)[None, :]) & 1).astype(np.int8)


@lru_cache(maxsize=None)
def prefix_parity_table(m: int) -> np.ndarray:
    """(2^m, m) int8 array; entry [x, k-1] is prefix_parity(x, k)."""
    bits = bit_table(m)
    # cumulative sum of bits strictly below mode k
    csum = np.cumsum(bits, axis=1, dtype=np.int32)
    out = np.empty_like(bits)
    out[:, 0] = 0
    out[:, 1:] = (csum[:, :-1] & 1).astype(np.int8)
    return out


def xor_permutation(m: int, t_word: int) -> np.ndarray:
    """Index array p with p[x] = x XOR t; reindexing by translation."""
    return np.arange(1 << m, dtype=np.intp) ^ np.intp(t_word)


def complement_permutation(m: int) -> np.ndarray:
    """Index array p with p[x] = complement of x."""
    return xor_permutation(m, (1 << m) - 1)
