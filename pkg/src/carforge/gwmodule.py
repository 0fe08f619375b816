"""Representation operators as shift-diagonal operators, and the CAR checks.

Every operator of interest here acts as

    (A f)(x) = sum_t D_t(x) f(x + t)

with finitely many shifts t and a diagonal field D_t of nu x nu blocks.  Each
generator has exactly one shift term, so products and sums stay tiny; the
dense matrix form exists purely as a brute-force oracle for tests.

Conventions fixed project-wide:

  * inner product  <f, g> = sum_x weight(x) (f(x), g(x)),  (u, v) = sum u_i conj(v_i);
  * dense matrix   M[row x, column x+t] = D_t(x);
  * operators built from a triple vanish off the measure's support, and the
    identity of the represented space is the support projector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import occupation
from .cocycle import CocycleFamily
from .config import DEFAULT_TOLERANCE, DENSE_CAP, check_modes
from .errors import (
    CapacityError,
    DimensionError,
    InactiveModeError,
    PreconditionError,
    ValidationError,
)
from .measure import OccupationMeasure


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VectorField:
    """An element of the finite direct integral: one C^nu value per configuration."""

    m: int
    nu: int
    values: np.ndarray  # shape (2^m, nu) complex

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (1 << self.m, self.nu):
            raise ValidationError(
                f"vector field must have shape ({1 << self.m}, {self.nu}), got {v.shape}"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, m: int, nu: int = 1) -> "VectorField":
        return cls(m, nu, np.zeros((1 << m, nu), dtype=np.complex128))

    @classmethod
    def basis(cls, m: int, x: int, component: int = 0, nu: int = 1) -> "VectorField":
        vals = np.zeros((1 << m, nu), dtype=np.complex128)
        vals[x, component] = 1.0
        return cls(m, nu, vals)

    @classmethod
    def random(cls, m: int, nu: int = 1, rng=None) -> "VectorField":
        rng = np.random.default_rng(rng)
        vals = rng.normal(size=(1 << m, nu)) + 1j * rng.normal(size=(1 << m, nu))
        return cls(m, nu, vals)

    def support(self) -> frozenset:
        return frozenset(int(x) for x in np.nonzero(np.abs(self.values).max(axis=1))[0])

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.m, self.nu, self.values + other.values)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.m, self.nu, self.values - other.values)

    def __mul__(self, scalar: complex) -> "VectorField":
        return VectorField(self.m, self.nu, self.values * scalar)

    __rmul__ = __mul__


def inner(f: VectorField, g: VectorField, mu: OccupationMeasure) -> complex:
    """Weighted inner product, linear in the first slot."""
    if f.m != g.m or f.nu != g.nu or mu.m != f.m:
        raise DimensionError("vector/measure dimensions do not match")
    return complex(np.sum(mu.weights[:, None] * f.values * np.conj(g.values)))


def norm(f: VectorField, mu: OccupationMeasure) -> float:
    return float(np.sqrt(max(inner(f, f, mu).real, 0.0)))


# ---------------------------------------------------------------------------
# Shift-diagonal operators
# ---------------------------------------------------------------------------

def _freeze_terms(m: int, nu: int, terms: dict) -> dict:
    out = {}
    for t, block in terms.items():
        t = int(t)
        if not 0 <= t < (1 << m):
            raise ValidationError(f"shift word {t} out of range for m = {m}")
        block = np.asarray(block, dtype=np.complex128)
        if block.shape != (1 << m, nu, nu):
            raise ValidationError(
                f"diagonal field for shift {t} must have shape ({1 << m}, {nu}, {nu})"
            )
        if not block.any():
            continue  # drop exact-zero terms; the zero operator stores nothing
        block = block.copy()
        block.flags.writeable = False
        out[t] = block
    return out


@dataclass(frozen=True)
class ShiftDiagonalOperator:
    """Finite sum of (shift, diagonal field) terms, closed under the algebra ops."""

    m: int
    nu: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        check_modes(self.m)
        object.__setattr__(self, "terms", _freeze_terms(self.m, self.nu, self.terms))

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, m: int, nu: int = 1) -> "ShiftDiagonalOperator":
        return cls(m, nu, {})

    @classmethod
    def identity(cls, m: int, nu: int = 1) -> "ShiftDiagonalOperator":
        eye = np.broadcast_to(np.eye(nu, dtype=np.complex128), (1 << m, nu, nu))
        return cls(m, nu, {0: eye.copy()})

    @classmethod
    def diagonal(cls, m: int, nu: int, field_values: np.ndarray) -> "ShiftDiagonalOperator":
        """Multiplication operator by a (2^m,) scalar or (2^m, nu, nu) block field."""
        field_values = np.asarray(field_values, dtype=np.complex128)
        if field_values.ndim == 1:
            blocks = field_values[:, None, None] * np.eye(nu, dtype=np.complex128)
        else:
            blocks = field_values
        return cls(m, nu, {0: blocks})

    @classmethod
    def single(cls, m: int, nu: int, shift: int, blocks: np.ndarray) -> "ShiftDiagonalOperator":
        return cls(m, nu, {shift: blocks})

    # -- algebra ---------------------------------------------------------------

    def _check_peer(self, other: "ShiftDiagonalOperator") -> None:
        if self.m != other.m or self.nu != other.nu:
            raise DimensionError(
                f"operator shapes differ: (m={self.m}, nu={self.nu}) vs "
                f"(m={other.m}, nu={other.nu})"
            )

    def add(self, other: "ShiftDiagonalOperator") -> "ShiftDiagonalOperator":
        self._check_peer(other)
        terms = {t: b.copy() for t, b in self.terms.items()}
        for t, b in other.terms.items():
            if t in terms:
                terms[t] = terms[t] + b
            else:
                terms[t] = b
        return ShiftDiagonalOperator(self.m, self.nu, terms)

    __add__ = add

    def scale(self, scalar: complex) -> "ShiftDiagonalOperator":
        return ShiftDiagonalOperator(
            self.m, self.nu, {t: scalar * b for t, b in self.terms.items()}
        )

    def __mul__(self, scalar: complex) -> "ShiftDiagonalOperator":
        return self.scale(scalar)

    __rmul__ = __mul__

    def __sub__(self, other: "ShiftDiagonalOperator") -> "ShiftDiagonalOperator":
        return self.add(other.scale(-1.0))

    def __neg__(self) -> "ShiftDiagonalOperator":
        return self.scale(-1.0)

    def compose(self, other: "ShiftDiagonalOperator") -> "ShiftDiagonalOperator":
        """(A o B): D_{t+s}(x) = D^A_t(x) D^B_s(x + t)."""
        self._check_peer(other)
        terms: dict = {}
        for t, da in self.terms.items():
            perm = occupation.xor_permutation(self.m, t)
            for s, db in other.terms.items():
                key = t ^ s
                product = da @ db[perm]
                if key in terms:
                    terms[key] = terms[key] + product
                else:
                    terms[key] = product
        return ShiftDiagonalOperator(self.m, self.nu, terms)

    __matmul__ = compose

    def adjoint(self, mu: OccupationMeasure) -> "ShiftDiagonalOperator":
        """Adjoint in the mu-weighted inner product.

        D*_t(x) = rn_ratio(mu, x, t) * D_t(x + t)^*, restricted to the support.
        """
        if mu.m != self.m:
            raise DimensionError(f"measure has m = {mu.m}, operator has m = {self.m}")
        terms = {}
        for t, db in self.terms.items():
            perm = occupation.xor_permutation(self.m, t)
            ratio = mu.rn_ratio_table(t)
            terms[t] = ratio[:, None, None] * np.conj(np.swapaxes(db[perm], -1, -2))
        return ShiftDiagonalOperator(self.m, self.nu, terms)

    def apply(self, f: VectorField) -> VectorField:
        if f.m != self.m or f.nu != self.nu:
            raise DimensionError("vector shape does not match operator")
        out = np.zeros_like(f.values)
        for t, db in self.terms.items():
            perm = occupation.xor_permutation(self.m, t)
            out += np.einsum("xij,xj->xi", db, f.values[perm])
        return VectorField(self.m, self.nu, out)

    def trace(self) -> complex:
        """Only the shift-0 term can contribute to the trace."""
        d0 = self.terms.get(0)
        if d0 is None:
            return 0.0 + 0.0j
        return complex(np.trace(d0, axis1=-2, axis2=-1).sum())

    def residual_norm(self) -> float:
        """Max entrywise magnitude over all stored blocks; 0 for the zero operator."""
        if not self.terms:
            return 0.0
        return float(max(np.abs(b).max() for b in self.terms.values()))

    def is_zero(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return self.residual_norm() <= tolerance

    @property
    def dim(self) -> int:
        return self.nu << self.m

    def dense(self) -> np.ndarray:
        """Full (nu 2^m) x (nu 2^m) matrix; M[x block, (x+t) block] = D_t(x)."""
        n = self.dim
        if n > DENSE_CAP:
            raise CapacityError(f"dense matrix of size {n} exceeds cap {DENSE_CAP}")
        count = 1 << self.m
        out = np.zeros((count, self.nu, count, self.nu), dtype=np.complex128)
        rows = np.arange(count)
        for t, db in self.terms.items():
            out[rows, :, rows ^ t, :] += db
        return out.reshape(n, n)


def commutator(a: ShiftDiagonalOperator, b: ShiftDiagonalOperator) -> ShiftDiagonalOperator:
    return a.compose(b) - b.compose(a)


def anticommutator(a: ShiftDiagonalOperator, b: ShiftDiagonalOperator) -> ShiftDiagonalOperator:
    return a.compose(b) + b.compose(a)


# ---------------------------------------------------------------------------
# Triples and representation operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GWTriple:
    """A finite-truncation representation datum (measure, multiplicity, cocycle).

    ``active`` lists the modes whose operators exist; the measure must be
    quasi-invariant under exactly those generators.
    """

    m: int
    measure: OccupationMeasure
    cocycle: CocycleFamily
    nu: int = 1
    active: frozenset = None  # type: ignore[assignment]
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        check_modes(self.m)
        if self.active is None:
            object.__setattr__(self, "active", frozenset(range(1, self.m + 1)))
        else:
            object.__setattr__(self, "active", frozenset(int(k) for k in self.active))
        if self.measure.m != self.m or self.cocycle.m != self.m:
            raise DimensionError("measure/cocycle mode counts do not match the triple")
        if self.cocycle.nu != self.nu:
            raise DimensionError(
                f"cocycle multiplicity {self.cocycle.nu} != triple multiplicity {self.nu}"
            )
        for k in self.active:
            if not 1 <= k <= self.m:
                raise ValidationError(f"active mode {k} out of range 1..{self.m}")
        report = self.cocycle.check_conditions()
        if not report.valid(self.tolerance):
            raise ValidationError(
                "cocycle fails its consistency conditions: adjoint residual "
                f"{report.max_adjoint_residual:.3e}, commutation residual "
                f"{report.max_commutation_residual:.3e}"
            )
        if not self.measure.quasi_invariant(self.active):
            raise ValidationError(
                "measure support is not invariant under the active generators"
            )

    @property
    def dim(self) -> int:
        return self.nu << self.m

    @property
    def full_support(self) -> bool:
        return bool(self.measure.support_mask.all())

    def _require_active(self, k: int) -> None:
        if k not in self.active:
            raise InactiveModeError(f"mode {k} is not active (active = {sorted(self.active)})")

    def random_field(self, rng=None) -> VectorField:
        f = VectorField.random(self.m, self.nu, rng)
        masked = f.values * self.measure.support_mask[:, None]
        return VectorField(self.m, self.nu, masked)


def support_projector(triple: GWTriple) -> ShiftDiagonalOperator:
    """The identity of L^2(mu): multiplication by the support indicator."""
    mask = triple.measure.support_mask.astype(np.complex128)
    return ShiftDiagonalOperator.diagonal(triple.m, triple.nu, mask)


def j_basis(triple: GWTriple, k: int) -> ShiftDiagonalOperator:
    """The basis-direction generator: a single shift term at delta_k with

        D(x) = (-1)^(prefix parity + 1) * i * c_k(x) * sqrt(w(x+delta_k)/w(x)).

    Skew-adjoint with square -I on the support.
    """
    triple._require_active(k)
    m, nu = triple.m, triple.nu
    parity = occupation.prefix_parity_table(m)[:, k - 1].astype(np.float64)
    sign = np.where(parity == 0, -1.0, 1.0)  # (-1)^(parity + 1)
    ratio = triple.measure.rn_ratio_table(1 << (k - 1))
    coeff = sign * np.sqrt(ratio)
    blocks = (1j * coeff)[:, None, None] * triple.cocycle.values[k - 1]
    return ShiftDiagonalOperator.single(m, nu, 1 << (k - 1), blocks)


def j_sigma(triple: GWTriple, k: int) -> ShiftDiagonalOperator:
    """The rotated generator: D(x) = (-1)^{x_k} i times the j_basis block."""
    base = j_basis(triple, k)
    bit = occupation.bit_table(triple.m)[:, k - 1].astype(np.float64)
    factor = (1j * np.where(bit == 0, 1.0, -1.0))[:, None, None]
    blocks = factor * base.terms[1 << (k - 1)]
    return ShiftDiagonalOperator.single(triple.m, triple.nu, 1 << (k - 1), blocks)


def j_general(triple: GWTriple, coeffs) -> ShiftDiagonalOperator:
    """Real-linear combination sum_k a_k j_basis + b_k j_sigma.

    ``coeffs`` is (a_1, b_1, ..., a_m, b_m); inactive modes must carry zeros.
    """
    coeffs = np.asarray(list(coeffs), dtype=np.float64)
    if coeffs.shape != (2 * triple.m,):
        raise ValidationError(
            f"expected {2 * triple.m} coefficients (a_1, b_1, ..., a_m, b_m), got {coeffs.shape}"
        )
    out = ShiftDiagonalOperator.zero(triple.m, triple.nu)
    for k in range(1, triple.m + 1):
        a, b = coeffs[2 * k - 2], coeffs[2 * k - 1]
        if k not in triple.active:
            if a != 0.0 or b != 0.0:
                raise InactiveModeError(
                    f"coefficient on inactive mode {k} must be zero"
                )
            continue
        if a != 0.0:
            out = out + j_basis(triple, k).scale(a)
        if b != 0.0:
            out = out + j_sigma(triple, k).scale(b)
    return out


def annihilator(triple: GWTriple, k: int) -> ShiftDiagonalOperator:
    """a_k = (j_sigma + i j_basis) / 2."""
    return (j_sigma(triple, k) + j_basis(triple, k).scale(1j)).scale(0.5)


def creator(triple: GWTriple, k: int) -> ShiftDiagonalOperator:
    """a*_k = (-j_sigma + i j_basis) / 2; equals adjoint(annihilator, mu)."""
    return (j_sigma(triple, k).scale(-1.0) + j_basis(triple, k).scale(1j)).scale(0.5)


def number_ops(triple: GWTriple, k: int):
    """The occupation projections: (N_k f)(x) = x_k f(x) and its complement.

    Both restricted to the support; N_k + N'_k is the support projector.
    """
    triple._require_active(k)
    bit = occupation.bit_table(triple.m)[:, k - 1].astype(np.complex128)
    mask = triple.measure.support_mask.astype(np.complex128)
    n_k = ShiftDiagonalOperator.diagonal(triple.m, triple.nu, bit * mask)
    n_k_prime = ShiftDiagonalOperator.diagonal(triple.m, triple.nu, (1.0 - bit) * mask)
    return n_k, n_k_prime


@dataclass(frozen=True)
class CarReport:
    """Pairwise CAR residuals: rows are (j, k, relation, residual)."""

    rows: tuple
    max_residual: float
    worst_pair: tuple

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return self.max_residual <= tolerance

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {"pair": [j, k], "relation": rel, "residual": res}
                for (j, k, rel, res) in self.rows
            ],
            "max_residual": self.max_residual,
            "worst_pair": list(self.worst_pair),
        }


def verify_car(triple: GWTriple) -> CarReport:
    """Residuals of a_j a_k + a_k a_j and a_j a*_k + a*_k a_j - delta_jk I
    over all active pairs, with the support projector as the identity.
    """
    active = sorted(triple.active)
    ann = {k: annihilator(triple, k) for k in active}
    cre = {k: creator(triple, k) for k in active}
    ident = support_projector(triple)
    rows = []
    worst = (0.0, (active[0], active[0], "aa"))
    for i, j in enumerate(active):
        for k in active[i:]:
            r_aa = anticommutator(ann[j], ann[k]).residual_norm()
            mixed = anticommutator(ann[j], cre[k])
            if j == k:
                mixed = mixed - ident
            r_mixed = mixed.residual_norm()
            rows.append((j, k, "aa", r_aa))
            rows.append((j, k, "aa*", r_mixed))
            if r_aa >= worst[0]:
                worst = (r_aa, (j, k, "aa"))
            if r_mixed >= worst[0]:
                worst = (r_mixed, (j, k, "aa*"))
    return CarReport(rows=tuple(rows), max_residual=worst[0], worst_pair=worst[1])


def gauge_triple(triple: GWTriple, u: np.ndarray) -> GWTriple:
    """The unitarily equivalent triple with cocycle u(x)* c_k(x) u(x+delta_k)."""
    gauged = triple.cocycle.gauge(u, triple.tolerance)
    return GWTriple(
        m=triple.m,
        measure=triple.measure,
        cocycle=gauged,
        nu=triple.nu,
        active=triple.active,
        tolerance=triple.tolerance,
    )


def multiplication_unitary(triple: GWTriple, u: np.ndarray) -> ShiftDiagonalOperator:
    """(U_u f)(x) = u(x) f(x) as a shift-diagonal operator."""
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim == 1:
        u = u[:, None, None]
    return ShiftDiagonalOperator.diagonal(triple.m, triple.nu, u)
