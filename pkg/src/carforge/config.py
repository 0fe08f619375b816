"""Size caps and numeric tolerances.

Everything here is a plain module-level default; the mode cap can be raised
through the ``CARFORGE_MAX_MODES`` environment variable for machines that can
afford the 2^m blowup.
"""

import os

from .errors import CapacityError, ValidationError

# Hard cap on the mode count m (space dimension nu * 2^m).  12 modes is a
# 4096-dimensional space at nu = 1, still comfortable on a laptop.
DEFAULT_MAX_MODES = 12

# Densifying an operator is an oracle, not a workhorse; nu * 2^m above this
# refuses rather than allocating a giant matrix.
DENSE_CAP = 1024

# Character sums iterate 4^m monomials; m = 8 is minutes territory already.
MONOMIAL_SWEEP_CAP = 8

# Nullspace extraction for the real commutant is a dense SVD; past this real
# dimension the character-sum route is used instead.
COMMUTANT_SVD_CAP = 64

# Absolute residual tolerance.  Built-in families are exact (+-1 data); the
# tolerance only matters for gauged/explicit inputs and irrational weights.
DEFAULT_TOLERANCE = 1e-12

# Relative singular-value threshold for commutant dimension counting.
SVD_NULL_THRESHOLD = 1e-8

ENV_MAX_MODES = "CARFORGE_MAX_MODES"


def max_modes() -> int:
    """Current mode cap, honoring the ``CARFORGE_MAX_MODES`` override."""
    raw = os.environ.get(ENV_MAX_MODES)
    if raw is None:
        return DEFAULT_MAX_MODES
    try:
        value = int(raw)
    except ValueError as exc:
        raise CapacityError(f"{ENV_MAX_MODES} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise CapacityError(f"{ENV_MAX_MODES} must be positive, got {value}")
    return value


def check_modes(m: int) -> int:
    """Validate a mode count against the cap; returns m for chaining."""
    if m < 1:
        raise ValidationError(f"mode count must be >= 1, got {m}")
    cap = max_modes()
    if m > cap:
        raise CapacityError(
            f"m = {m} exceeds the mode cap {cap} (set {ENV_MAX_MODES} to override)"
        )
    return m
