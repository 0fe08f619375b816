"""Quasi-invariant weights on the occupation space.

A measure here is a nonnegative weight per configuration, stored as a dense
table of length 2^m regardless of how it was constructed.  Normalization is
deliberately not enforced; the uniform measure is the counting measure with
weight 1 per point, and the CLI reports total mass instead.

The frozen-tail kind emulates a Fock vacuum sector: only the first j modes
are dynamical and the remaining tail bits are pinned to 0, so the support is
a proper translate-orbit and its reflection through the all-ones complement
is disjoint from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import occupation
from .config import check_modes
from .errors import DimensionError, SupportError, ValidationError

KINDS = ("uniform", "product", "explicit", "frozen_tail")


def _as_word(x) -> int:
    if isinstance(x, occupation.Configuration):
        return x.word
    return int(x)


@dataclass(frozen=True)
class OccupationMeasure:
    """Weight table over {0,1}^m with a constructor tag.

    ``weights[x]`` is the mass of the singleton {x}; the support is the set
    of strictly positive entries (constructors never emit denormal noise, so
    exact ``> 0`` is the membership test).
    """

    m: int
    weights: np.ndarray
    kind: str = "explicit"
    params: tuple = field(default=())

    def __post_init__(self):
        check_modes(self.m)
        if self.kind not in KINDS:
            raise ValidationError(f"unknown measure kind {self.kind!r}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (1 << self.m,):
            raise ValidationError(
                f"weight table must have length 2^{self.m} = {1 << self.m}, got {w.shape}"
            )
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise ValidationError("total mass must be positive")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    # -- constructors -------------------------------------------------------

    @classmethod
    def uniform(cls, m: int) -> "OccupationMeasure":
        """Counting measure: weight 1 on every configuration."""
        check_modes(m)
        return cls(m, np.ones(1 << m), kind="uniform")

    @classmethod
    def product(cls, p) -> "OccupationMeasure":
        """Bernoulli product weights prod_k p_k^{x_k} (1-p_k)^{1-x_k}."""
        p = np.asarray(list(p), dtype=np.float64)
        m = check_modes(len(p))
        if np.any(p <= 0) or np.any(p >= 1):
            raise ValidationError("product parameters must satisfy 0 < p_k < 1")
        bits = occupation.bit_table(m).astype(np.float64)
        w = np.prod(np.where(bits == 1, p[None, :], 1.0 - p[None, :]), axis=1)
        return cls(m, w, kind="product", params=tuple(p.tolist()))

    @classmethod
    def explicit(cls, m: int, weights) -> "OccupationMeasure":
        """Explicit table; ``weights`` is an array or a {bitstring: mass} dict."""
        check_modes(m)
        if isinstance(weights, dict):
            table = np.zeros(1 << m)
            for key, value in weights.items():
                cfg = occupation.Configuration.from_string(key)
                if cfg.m != m:
                    raise DimensionError(
                        f"weight key {key!r} has {cfg.m} modes, expected {m}"
                    )
                table[cfg.word] = float(value)
        else:
            table = np.asarray(weights, dtype=np.float64)
        return cls(m, table, kind="explicit")

    @classmethod
    def frozen_tail(cls, m: int, active: int) -> "OccupationMeasure":
        """Weight 1 where the tail bits x_{active+1..m} all vanish, else 0."""
        check_modes(m)
        if not 1 <= active <= m:
            raise ValidationError(f"active prefix length {active} out of range 1..{m}")
        words = np.arange(1 << m)
        tail_mask = ((1 << m) - 1) ^ ((1 << active) - 1)
        w = np.where(words & tail_mask == 0, 1.0, 0.0)
        return cls(m, w, kind="frozen_tail", params=(active,))

    # -- basic queries ------------------------------------------------------

    def weight(self, x) -> float:
        return float(self.weights[_as_word(x)])

    @property
    def support_mask(self) -> np.ndarray:
        return self.weights > 0

    def support(self) -> frozenset:
        return frozenset(int(w) for w in np.nonzero(self.support_mask)[0])

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def in_support(self, x) -> bool:
        return self.weights[_as_word(x)] > 0

    # -- the operations -----------------------------------------------------

    def rn_ratio(self, x, t) -> float:
        """weight(x+t) / weight(x); the translation Radon-Nikodym ratio."""
        xw, tw = _as_word(x), _as_word(t)
        base = self.weights[xw]
        if base <= 0:
            raise SupportError(
                f"configuration {occupation.Configuration(xw, self.m)} has weight 0; "
                "ratios are meaningless off the support"
            )
        return float(self.weights[xw ^ tw] / base)

    def rn_ratio_table(self, t_word: int) -> np.ndarray:
        """Vector of weight(x+t)/weight(x) with 0 filled off-support."""
        perm = occupation.xor_permutation(self.m, t_word)
        out = np.zeros(1 << self.m)
        mask = self.support_mask
        out[mask] = self.weights[perm][mask] / self.weights[mask]
        return out

    def reflect(self) -> "OccupationMeasure":
        """The complement-pushforward: weight'(x) = weight(1 - x)."""
        perm = occupation.complement_permutation(self.m)
        w = self.weights[perm]
        if self.kind == "uniform":
            return OccupationMeasure(self.m, w, kind="uniform")
        if self.kind == "product":
            flipped = tuple(1.0 - p for p in self.params)
            return OccupationMeasure(self.m, w, kind="product", params=flipped)
        return OccupationMeasure(self.m, w, kind="explicit")

    def equivalent(self, other: "OccupationMeasure") -> bool:
        """Equal null sets; on a finite space this is equal supports."""
        if self.m != other.m:
            raise DimensionError(f"mode counts differ: {self.m} vs {other.m}")
        return bool(np.array_equal(self.support_mask, other.support_mask))

    def quasi_invariant(self, active) -> bool:
        """True iff the support is invariant under delta_k for each active k."""
        mask = self.support_mask
        for k in active:
            if not 1 <= k <= self.m:
                raise ValidationError(f"active mode {k} out of range 1..{self.m}")
            perm = occupation.xor_permutation(self.m, 1 << (k - 1))
            if not np.array_equal(mask, mask[perm]):
                return False
        return True

    def descriptor(self) -> dict:
        """Canonical JSON form (see the CLI descriptor schema)."""
        if self.kind == "uniform":
            return {"kind": "uniform"}
        if self.kind == "product":
            return {"kind": "product", "p": list(self.params)}
        if self.kind == "frozen_tail":
            return {"kind": "frozen_tail", "active": self.params[0]}
        table = {}
        for w in np.nonzero(self.support_mask)[0]:
            table[str(occupation.Configuration(int(w), self.m))] = float(self.weights[w])
        return {"kind": "explicit", "weights": table}
