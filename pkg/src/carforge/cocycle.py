"""Unitary structure fields c_k(x) and their consistency conditions.

A family stores one nu x nu unitary block per (mode k, configuration x).
Two conditions make a family usable as representation data:

    adjoint:      c_k(x)^* = c_k(x + delta_k)
    commutation:  c_k(x) c_l(x + delta_k) = c_l(x) c_k(x + delta_l)   (k != l)

and one extra condition ("reality") governs compatibility with the standard
complement conjugation:

    conj(c_k(1 - x)) = (-1)^k c_k(x).

Built-in families have exact +-1 entries, so their residuals are exactly 0;
the tolerance only matters for gauged or explicitly loaded data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import occupation
from .config import DEFAULT_TOLERANCE, check_modes
from .errors import DimensionError, TruncationError, ValidationError


def _unitary_defect(u: np.ndarray) -> float:
    """Max entrywise magnitude of u^* u - I over a (..., nu, nu) stack."""
    nu = u.shape[-1]
    gram = np.conj(np.swapaxes(u, -1, -2)) @ u
    return float(np.abs(gram - np.eye(nu)).max())


@dataclass(frozen=True)
class CocycleFamily:
    """Structure field c: (k, x) -> nu x nu complex unitary.

    ``values`` has shape (m, 2^m, nu, nu); scalar families are nu = 1.
    The multiplicity is constant: at finite truncation the translations act
    transitively, so a translation-invariant multiplicity cannot vary.
    """

    m: int
    nu: int
    values: np.ndarray
    kind: str = "explicit"

    def __post_init__(self):
        check_modes(self.m)
        if self.nu < 1:
            raise ValidationError(f"multiplicity must be >= 1, got {self.nu}")
        v = np.asarray(self.values, dtype=np.complex128)
        expected = (self.m, 1 << self.m, self.nu, self.nu)
        if v.shape != expected:
            raise ValidationError(f"cocycle table must have shape {expected}, got {v.shape}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_scalar_table(cls, table: np.ndarray, kind: str = "explicit") -> "CocycleFamily":
        """Wrap an (m, 2^m) scalar table as a nu = 1 family."""
        table = np.asarray(table, dtype=np.complex128)
        m = table.shape[0]
        return cls(m, 1, table[:, :, None, None], kind=kind)

    @classmethod
    def trivial(cls, m: int, nu: int = 1) -> "CocycleFamily":
        """c_k(x) = identity for all k, x (the Fock structure field)."""
        check_modes(m)
        eye = np.eye(nu, dtype=np.complex128)
        vals = np.broadcast_to(eye, (m, 1 << m, nu, nu)).copy()
        return cls(m, nu, vals, kind="trivial")

    @classmethod
    def gw311(cls, m: int) -> "CocycleFamily":
        """The paired-sign scalar family: even modes carry 1, mode 4l+1 carries
        (-1)^{x_{4l+3}} and mode 4l+3 carries (-1)^{x_{4l+1}}.

        Requires m = 0 mod 4 so every odd mode's partner exists.
        """
        check_modes(m)
        if m % 4 != 0:
            dangling = ((m - 1) // 4) * 4 + 3 if m % 4 in (1, 2) else m + 2
            raise TruncationError(
                f"gw311 needs m = 0 mod 4; at m = {m} the partner index "
                f"{dangling} would fall outside the truncation"
            )
        bits = occupation.bit_table(m)
        table = np.ones((m, 1 << m), dtype=np.complex128)
        for k in range(1, m + 1):
            if k % 2 == 0:
                continue
            partner = k + 2 if k % 4 == 1 else k - 2
            table[k - 1] = np.where(bits[:, partner - 1] == 1, -1.0, 1.0)
        fam = cls.from_scalar_table(table, kind="gw311")
        return fam

    # -- element access ------------------------------------------------------

    def block(self, k: int, x) -> np.ndarray:
        """The nu x nu block c_k(x)."""
        if not 1 <= k <= self.m:
            raise ValidationError(f"mode index k = {k} out of range 1..{self.m}")
        word = x.word if isinstance(x, occupation.Configuration) else int(x)
        return self.values[k - 1, word]

    def scalar(self, k: int, x) -> complex:
        """Scalar value for nu = 1 families."""
        if self.nu != 1:
            raise ValidationError("scalar access on a matrix-valued family")
        return complex(self.block(k, x)[0, 0])

    def scalar_table(self) -> np.ndarray:
        """(m, 2^m) view of a nu = 1 family."""
        if self.nu != 1:
            raise ValidationError("scalar table requested for a matrix-valued family")
        return self.values[:, :, 0, 0]

    # -- conditions ----------------------------------------------------------

    def check_conditions(self) -> "CocycleReport":
        """Residuals of the adjoint and commutation conditions, with worst witnesses."""
        n = 1 << self.m
        vals = self.values
        adj_res = 0.0
        adj_witness = None
        unit_res = 0.0
        for k in range(1, self.m + 1):
            perm = occupation.xor_permutation(self.m, 1 << (k - 1))
            star = np.conj(np.swapaxes(vals[k - 1], -1, -2))
            defect = np.abs(star - vals[k - 1][perm]).max(axis=(-1, -2))
            x = int(np.argmax(defect))
            if defect[x] >= adj_res:
                adj_res = float(defect[x])
                adj_witness = (k, x)
            unit_res = max(unit_res, _unitary_defect(vals[k - 1]))

        comm_res = 0.0
        comm_witness = None
        for k in range(1, self.m + 1):
            perm_k = occupation.xor_permutation(self.m, 1 << (k - 1))
            for l in range(k + 1, self.m + 1):
                perm_l = occupation.xor_permutation(self.m, 1 << (l - 1))
                lhs = vals[k - 1] @ vals[l - 1][perm_k]
                rhs = vals[l - 1] @ vals[k - 1][perm_l]
                defect = np.abs(lhs - rhs).max(axis=(-1, -2))
                x = int(np.argmax(defect))
                if defect[x] >= comm_res:
                    comm_res = float(defect[x])
                    comm_witness = (k, l, x)
        if comm_witness is None:  # m == 1: no pairs to check
            comm_witness = (1, 1, 0)
        if adj_witness is None:
            adj_witness = (1, 0)
        return CocycleReport(
            m=self.m,
            nu=self.nu,
            max_adjoint_residual=adj_res,
            max_commutation_residual=comm_res,
            max_unitarity_residual=unit_res,
            worst_adjoint=adj_witness,
            worst_commutation=comm_witness,
        )

    def is_valid(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return self.check_conditions().valid(tolerance)

    def real_compatible(self, tolerance: float = DEFAULT_TOLERANCE) -> "RealityReport":
        """Check conj(c_k(1-x)) = (-1)^k c_k(x) for all k, x."""
        comp = occupation.complement_permutation(self.m)
        worst = 0.0
        witness = (1, 0)
        for k in range(1, self.m + 1):
            sign = -1.0 if k % 2 else 1.0
            defect = np.abs(np.conj(self.values[k - 1][comp]) - sign * self.values[k - 1])
            defect = defect.max(axis=(-1, -2))
            x = int(np.argmax(defect))
            if defect[x] > worst:
                worst = float(defect[x])
                witness = (k, x)
        return RealityReport(ok=worst <= tolerance, residual=worst, witness=witness)

    # -- gauge action ---------------------------------------------------------

    def gauge(self, u: np.ndarray, tolerance: float = DEFAULT_TOLERANCE) -> "CocycleFamily":
        """Transform by a unitary field: c'_k(x) = u(x)^* c_k(x) u(x + delta_k).

        ``u`` has shape (2^m, nu, nu) (or (2^m,) scalars for nu = 1).
        """
        u = np.asarray(u, dtype=np.complex128)
        if u.ndim == 1 and self.nu == 1:
            u = u[:, None, None]
        if u.shape != (1 << self.m, self.nu, self.nu):
            raise DimensionError(
                f"gauge field must have shape ({1 << self.m}, {self.nu}, {self.nu}), got {u.shape}"
            )
        if _unitary_defect(u) > max(tolerance, 1e-9):
            raise ValidationError("gauge field is not unitary")
        ustar = np.conj(np.swapaxes(u, -1, -2))
        out = np.empty_like(self.values)
        for k in range(1, self.m + 1):
            perm = occupation.xor_permutation(self.m, 1 << (k - 1))
            out[k - 1] = ustar @ self.values[k - 1] @ u[perm]
        return CocycleFamily(self.m, self.nu, out, kind="gauged")

    def descriptor(self) -> dict:
        if self.kind in ("trivial", "gw311"):
            return {"kind": self.kind}
        if self.nu != 1:
            raise ValidationError("descriptors serialize scalar families only")
        values = []
        table = self.scalar_table()
        for k in range(1, self.m + 1):
            for x in range(1 << self.m):
                z = table[k - 1, x]
                if z != 1.0:
                    values.append({
                        "k": k,
                        "x": str(occupation.Configuration(x, self.m)),
                        "re": float(z.real),
                        "im": float(z.imag),
                    })
        return {"kind": "explicit", "values": values}


@dataclass(frozen=True)
class CocycleReport:
    m: int
    nu: int
    max_adjoint_residual: float
    max_commutation_residual: float
    max_unitarity_residual: float
    worst_adjoint: tuple
    worst_commutation: tuple

    def valid(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return (
            self.max_adjoint_residual <= tolerance
            and self.max_commutation_residual <= tolerance
            and self.max_unitarity_residual <= tolerance
        )


@dataclass(frozen=True)
class RealityReport:
    ok: bool
    residual: float
    witness: tuple  # (k, x word) of the worst defect


def random_gauge_field(
    m: int,
    seed: int,
    nu: int = 1,
    conjugate_symmetric: bool = False,
) -> np.ndarray:
    """Random unitary field u(x), shape (2^m, nu, nu).

    With ``conjugate_symmetric`` the field satisfies u(1-x) = conj(u(x)), the
    symmetry that preserves the reality condition under gauging.
    """
    check_modes(m)
    rng = np.random.default_rng(seed)
    n = 1 << m
    if nu == 1:
        theta = rng.uniform(-np.pi, np.pi, size=n)
        if conjugate_symmetric:
            comp = occupation.complement_permutation(m)
            for x in range(n):
                partner = int(comp[x])
                if x < partner:
                    theta[partner] = -theta[x]
            # complement is fixed-point free, so every x is paired
        return np.exp(1j * theta)[:, None, None]
    blocks = rng.normal(size=(n, nu, nu)) + 1j * rng.normal(size=(n, nu, nu))
    u = np.linalg.qr(blocks)[0]
    if conjugate_symmetric:
        comp = occupation.complement_permutation(m)
        for x in range(n):
            partner = int(comp[x])
            if x < partner:
                u[partner] = np.conj(u[x])
    return u
