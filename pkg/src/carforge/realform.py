"""Invariant real structures: existence solver, certificates, standard form.

An antilinear isometric involution S commuting with all the representation
operators is encoded pointwise: a unitary phase field U(x) together with the
reflection weight ratio w(x) = weight(1-x)/weight(x),

    (S f)(x) = U(x) sqrt(w(x)) conj(f(1 - x)).

Existence reduces to a constraint system on U: the flip rule

    U(x + delta_k) = (-1)^k c_k(x)^* U(x) conj(c_k(1 - x))          (edges)

must be globally consistent, and the complement pairing

    U(x) conj(U(1 - x)) = I                                         (pairing)

must close.  The solver seeds U at the base configuration, propagates along
the spanning tree that always flips the lowest differing bit, then sweeps
every edge and every pairing orbit; any defect is returned as a certificate
(the offending loop plus its holonomy) instead of a structure.

The flip rule above is the antilinear-composition form of the intertwining
constraint r(x) c_k(1-x) = (-1)^k c_k(x) r(x + delta_k) with r(x) = U(x) o conj;
see the tests, which check the constraint directly in its operator form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import occupation
from .cocycle import CocycleFamily
from .config import DEFAULT_TOLERANCE, DENSE_CAP
from .errors import (
    CapacityError,
    DimensionError,
    InvarianceError,
    PreconditionError,
    ValidationError,
)
from .gwmodule import (
    GWTriple,
    ShiftDiagonalOperator,
    VectorField,
    gauge_triple,
    inner,
    j_basis,
    j_general,
    j_sigma,
    norm,
    number_ops,
)

MEASURE_NOT_EQUIVALENT = "MeasureNotEquivalent"
MULTIPLICITY_MISMATCH = "MultiplicityMismatch"
CYCLE_INCONSISTENCY = "CycleInconsistency"

# How many witness configurations an obstruction stores before truncating.
_WITNESS_LIMIT = 16


@dataclass(frozen=True)
class Obstruction:
    """Certificate that no invariant real structure exists for the triple."""

    variant: str
    witness: tuple = ()      # bitstrings where supports disagree
    loop: tuple = ()         # generator steps ("d3") and "pairing" markers
    holonomy: complex = None  # scalar defect around the loop (trace/nu if nu > 1)
    detail: str = ""

    def to_json_dict(self) -> dict:
        out = {"variant": self.variant}
        if self.witness:
            out["witness"] = list(self.witness)
        if self.loop:
            out["loop"] = list(self.loop)
        if self.holonomy is not None:
            out["holonomy"] = {"re": float(self.holonomy.real), "im": float(self.holonomy.imag)}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class RealStructure:
    """The data of S: phase field U and reflection weight ratio w."""

    m: int
    nu: int
    phase_field: np.ndarray  # (2^m, nu, nu) complex
    weight_ratio: np.ndarray  # (2^m,) float, 0 off the support

    def __post_init__(self):
        u = np.asarray(self.phase_field, dtype=np.complex128)
        w = np.asarray(self.weight_ratio, dtype=np.float64)
        if u.shape != (1 << self.m, self.nu, self.nu):
            raise ValidationError("phase field has the wrong shape")
        if w.shape != (1 << self.m,):
            raise ValidationError("weight ratio has the wrong shape")
        u = u.copy()
        w = w.copy()
        u.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "phase_field", u)
        object.__setattr__(self, "weight_ratio", w)

    @property
    def dim(self) -> int:
        return self.nu << self.m

    def apply(self, f: VectorField) -> VectorField:
        """(S f)(x) = U(x) sqrt(w(x)) conj(f(1 - x))."""
        if f.m != self.m or f.nu != self.nu:
            raise DimensionError("vector shape does not match the structure")
        comp = occupation.complement_permutation(self.m)
        reflected = np.conj(f.values[comp])
        out = np.sqrt(self.weight_ratio)[:, None] * np.einsum(
            "xij,xj->xi", self.phase_field, reflected
        )
        return VectorField(self.m, self.nu, out)

    def conjugation_matrix(self) -> np.ndarray:
        """Dense M with S f = M conj(f) on coordinate vectors (oracle only)."""
        n = self.dim
        if n > DENSE_CAP:
            raise CapacityError(f"dense conjugation of size {n} exceeds cap {DENSE_CAP}")
        count = 1 << self.m
        comp = occupation.complement_permutation(self.m)
        out = np.zeros((count, self.nu, count, self.nu), dtype=np.complex128)
        rows = np.arange(count)
        out[rows, :, comp, :] = np.sqrt(self.weight_ratio)[:, None, None] * self.phase_field
        return out.reshape(n, n)


def _as_seed(seed, nu: int) -> np.ndarray:
    if seed is None:
        return np.eye(nu, dtype=np.complex128)
    if np.isscalar(seed):
        mat = complex(seed) * np.eye(nu, dtype=np.complex128)
    else:
        mat = np.asarray(seed, dtype=np.complex128)
        if mat.shape != (nu, nu):
            raise ValidationError(f"seed must be a {nu} x {nu} unitary")
    defect = np.abs(np.conj(mat.T) @ mat - np.eye(nu)).max()
    if defect > 1e-9:
        raise ValidationError(f"seed is not unitary (defect {defect:.3e})")
    return mat


def _tree_path(word: int, active_mask: int, rep: int) -> list:
    """Generator steps from the orbit representative to ``word``, lowest bit first."""
    steps = []
    diff = (word ^ rep) & active_mask
    k = 1
    while diff:
        if diff & 1:
            steps.append(k)
        diff >>= 1
        k += 1
    return steps


def _orbit_words(rep: int, active_mask: int) -> list:
    """All words of the translation orbit through ``rep``, ascending."""
    words = []
    sub = 0
    while True:
        words.append(rep ^ sub)
        if sub == active_mask:
            break
        sub = (sub - active_mask) & active_mask
    return sorted(words)


def solve(triple: GWTriple, seed=None, tolerance: float = None):
    """Find the phase field of an invariant real structure, or a certificate.

    Returns a RealStructure on success and an Obstruction otherwise.  The
    seed fixes U at each orbit's base point (identity by default); for scalar
    multiplicity the defect holonomies do not depend on it.
    """
    tol = triple.tolerance if tolerance is None else tolerance
    m, nu = triple.m, triple.nu
    n = 1 << m
    mu = triple.measure
    seed_mat = _as_seed(seed, nu)

    reflected = mu.reflect()
    if not mu.equivalent(reflected):
        disagree = np.nonzero(mu.support_mask != reflected.support_mask)[0]
        witness = tuple(
            str(occupation.Configuration(int(x), m)) for x in disagree[:_WITNESS_LIMIT]
        )
        return Obstruction(
            variant=MEASURE_NOT_EQUIVALENT,
            witness=witness,
            detail=(
                f"supports of the measure and its reflection differ at "
                f"{disagree.size} configurations"
            ),
        )
    # The multiplicity is a single constant here, so nu(x) = nu(1-x) holds by
    # construction and MULTIPLICITY_MISMATCH can never fire at finite truncation.

    active = sorted(triple.active)
    active_mask = 0
    for k in active:
        active_mask |= 1 << (k - 1)
    all_ones = n - 1
    comp = occupation.complement_permutation(m)
    cvals = triple.cocycle.values

    u_field = np.zeros((n, nu, nu), dtype=np.complex128)
    assigned = np.zeros(n, dtype=bool)

    def propagate_orbit(rep: int, seed_value: np.ndarray) -> None:
        u_field[rep] = seed_value
        assigned[rep] = True
        for word in _orbit_words(rep, active_mask):
            if word == rep:
                continue
            diff = (word ^ rep) & active_mask
            low = diff & -diff
            k = low.bit_length()
            parent = word ^ low
            sign = -1.0 if k % 2 else 1.0
            c_at_parent = cvals[k - 1, parent]
            c_at_reflect = cvals[k - 1, parent ^ all_ones]
            u_field[word] = sign * (
                np.conj(c_at_parent.T) @ u_field[parent] @ np.conj(c_at_reflect)
            )
            assigned[word] = True

    for rep in range(n):
        if rep & active_mask or assigned[rep]:
            continue
        propagate_orbit(rep, seed_mat)
        partner_rep = (rep ^ all_ones) & ~active_mask
        if not assigned[partner_rep]:
            # the complement orbit is distinct; pin it through the pairing,
            # U(1-x) = U(x)^T, and let the sweep below judge consistency
            for word in _orbit_words(rep, active_mask):
                u_field[word ^ all_ones] = u_field[word].T
                assigned[word ^ all_ones] = True

    support = mu.support_mask
    eye = np.eye(nu, dtype=np.complex128)

    worst = (tol, None)  # (residual, obstruction payload)
    for k in active:
        sign = -1.0 if k % 2 else 1.0
        delta = 1 << (k - 1)
        for x in range(n):
            if not support[x]:
                continue
            lhs = u_field[x] @ np.conj(cvals[k - 1, x ^ all_ones])
            rhs = sign * cvals[k - 1, x] @ u_field[x ^ delta]
            residual = float(np.abs(lhs - rhs).max())
            if residual > worst[0]:
                path = _tree_path(x, active_mask, x & ~active_mask)
                back = _tree_path(x ^ delta, active_mask, (x ^ delta) & ~active_mask)
                loop = tuple(
                    [f"d{j}" for j in path] + [f"d{k}"] + [f"d{j}" for j in reversed(back)]
                )
                holonomy = sign * np.conj(cvals[k - 1, x].T) @ lhs @ np.conj(
                    u_field[x ^ delta].T
                )
                worst = (
                    residual,
                    Obstruction(
                        variant=CYCLE_INCONSISTENCY,
                        loop=loop,
                        holonomy=complex(np.trace(holonomy) / nu),
                        detail=(
                            f"flip rule for mode {k} fails at "
                            f"{occupation.Configuration(x, m)} (residual {residual:.3e})"
                        ),
                    ),
                )
    if worst[1] is not None:
        return worst[1]

    for x in range(n):
        partner = int(comp[x])
        assert partner != x, "complement is fixed-point free on configurations"
        if x > partner or not support[x]:
            continue
        defect = u_field[x] @ np.conj(u_field[partner])
        residual = float(np.abs(defect - eye).max())
        if residual > tol:
            path = _tree_path(x, active_mask, x & ~active_mask)
            back = _tree_path(partner, active_mask, partner & ~active_mask)
            loop = tuple(
                [f"d{j}" for j in path] + ["pairing"] + [f"d{j}" for j in reversed(back)]
            )
            return Obstruction(
                variant=CYCLE_INCONSISTENCY,
                loop=loop,
                holonomy=complex(np.trace(defect) / nu),
                detail=(
                    f"involution pairing fails on the orbit "
                    f"{{{occupation.Configuration(x, m)}, "
                    f"{occupation.Configuration(partner, m)}}} (residual {residual:.3e})"
                ),
            )

    ratio = np.zeros(n)
    ratio[support] = mu.weights[comp][support] / mu.weights[support]
    return RealStructure(m=m, nu=nu, phase_field=u_field, weight_ratio=ratio)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RealFormVerification:
    involution_residual: float
    isometry_residual: float
    commutation_residual: float
    number_op_residual: float

    @property
    def max_residual(self) -> float:
        return max(
            self.involution_residual,
            self.isometry_residual,
            self.commutation_residual,
            self.number_op_residual,
        )

    def to_json_dict(self) -> dict:
        return {
            "involution": self.involution_residual,
            "isometry": self.isometry_residual,
            "commutation": self.commutation_residual,
            "number_op": self.number_op_residual,
        }


def _antilinear_commutation_residual(ms: np.ndarray, dense_op: np.ndarray) -> float:
    """Residual of S A = A S for antilinear S = (M_S o conj) and linear A."""
    return float(np.abs(ms @ np.conj(dense_op) - dense_op @ ms).max())


def verify(structure: RealStructure, triple: GWTriple, n_random: int = 20, seed: int = 42) -> RealFormVerification:
    """Numerically re-check everything the solver promised.

    Residuals: S^2 = I, norm preservation on random vectors, commutation with
    every generator plus random combinations, and the occupation-swap
    relation S N_k = N'_k S.
    """
    ms = structure.conjugation_matrix()
    n = structure.dim
    involution = float(np.abs(ms @ np.conj(ms) - np.eye(n)).max())

    rng = np.random.default_rng(seed)
    isometry = 0.0
    for _ in range(n_random):
        f = triple.random_field(rng)
        isometry = max(isometry, abs(norm(structure.apply(f), triple.measure) - norm(f, triple.measure)))

    active = sorted(triple.active)
    commutation = 0.0
    for k in active:
        for op in (j_basis(triple, k), j_sigma(triple, k)):
            commutation = max(commutation, _antilinear_commutation_residual(ms, op.dense()))
    for _ in range(n_random):
        coeffs = np.zeros(2 * triple.m)
        for k in active:
            coeffs[2 * k - 2] = rng.normal()
            coeffs[2 * k - 1] = rng.normal()
        coeffs /= np.linalg.norm(coeffs)
        op = j_general(triple, coeffs)
        commutation = max(commutation, _antilinear_commutation_residual(ms, op.dense()))

    number_op = 0.0
    for k in active:
        n_k, n_k_prime = number_ops(triple, k)
        defect = ms @ np.conj(n_k.dense()) - n_k_prime.dense() @ ms
        number_op = max(number_op, float(np.abs(defect).max()))

    return RealFormVerification(
        involution_residual=involution,
        isometry_residual=isometry,
        commutation_residual=commutation,
        number_op_residual=number_op,
    )


# ---------------------------------------------------------------------------
# The real form itself
# ---------------------------------------------------------------------------

def real_form_basis(structure: RealStructure, triple: GWTriple) -> list:
    """An R-orthonormal basis of the fixed space of S.

    One pair of vectors per complement orbit and component: (e + Se) and
    (ie + S(ie)), normalized in the weighted norm.  Together with their
    i-multiples they span the whole space.
    """
    m, nu = structure.m, structure.nu
    comp = occupation.complement_permutation(m)
    support = triple.measure.support_mask
    out = []
    for x in range(1 << m):
        partner = int(comp[x])
        if x > partner or not support[x]:
            continue
        scale = 1.0 / np.sqrt(2.0 * triple.measure.weights[x])
        for i in range(nu):
            e = VectorField.basis(m, x, i, nu)
            for probe in (e, 1j * e):
                vec = probe + structure.apply(probe)
                out.append(scale * vec)
    return out


def _basis_matrix(basis: list) -> np.ndarray:
    return np.stack([b.values.reshape(-1) for b in basis], axis=1)


def restrict(
    triple: GWTriple,
    structure: RealStructure,
    operator: ShiftDiagonalOperator,
    basis: list = None,
    tolerance: float = None,
) -> "RestrictedOperator":
    """Matrix of an S-commuting operator in the real basis.

    Raises InvarianceError when the operator does not commute with S, e.g.
    multiplication by i.
    """
    tol = triple.tolerance if tolerance is None else tolerance
    ms = structure.conjugation_matrix()
    dense_op = operator.dense()
    defect = _antilinear_commutation_residual(ms, dense_op)
    if defect > max(tol, 1e-9):
        raise InvarianceError(
            f"operator does not commute with the real structure (residual {defect:.3e})"
        )
    if basis is None:
        basis = real_form_basis(structure, triple)
    weights = triple.measure.weights
    b = _basis_matrix(basis)  # (n, r) columns in coordinate form
    wvec = np.repeat(weights, triple.nu)
    image = dense_op @ b
    gram = np.conj(b.T) * wvec[None, :] @ image  # <A b_j, b_i> transposed below
    entries = gram.T  # entries[i, j] = <A b_j, b_i>
    matrix = entries.real.copy()
    imag_residual = float(np.abs(entries.imag).max())
    recon = image - b @ matrix
    recon_residual = float(np.sqrt((wvec[:, None] * np.abs(recon) ** 2).sum(axis=0).max()))
    return RestrictedOperator(
        matrix=matrix,
        imag_residual=imag_residual,
        reconstruction_residual=recon_residual,
        commutation_residual=defect,
    )


@dataclass(frozen=True)
class RestrictedOperator:
    matrix: np.ndarray
    imag_residual: float
    reconstruction_residual: float
    commutation_residual: float


# ---------------------------------------------------------------------------
# Standard conjugation form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StandardizeReport:
    gauge_field: np.ndarray          # (2^m, nu, nu)
    phase_field_residual: float      # new U field vs identity
    reality_residual: float          # reality condition on the new cocycle
    conditions_residual: float       # cocycle consistency of the new family
    intertwiner_unitarity: float     # unitarity defect of the gauge field
    intertwiner_residual: float      # U_u J'_z - J_z U_u over all generators

    @property
    def max_residual(self) -> float:
        return max(
            self.phase_field_residual,
            self.reality_residual,
            self.conditions_residual,
            self.intertwiner_unitarity,
            self.intertwiner_residual,
        )


def standardize(triple: GWTriple, structure: RealStructure):
    """Gauge the triple so its real structure becomes plain conjugation.

    The needed gauge factorizes the phase field across complement orbits,
    U(x) = u(x) u(1-x)^T: put the whole block on the orbit representative and
    the identity on its partner.  Returns (new triple, report); the report's
    residuals certify the new cocycle satisfies the reality condition and the
    gauge unitary intertwines the two representations.
    """
    m, nu = structure.m, structure.nu
    n = 1 << m
    comp = occupation.complement_permutation(m)
    u = np.empty((n, nu, nu), dtype=np.complex128)
    eye = np.eye(nu, dtype=np.complex128)
    for x in range(n):
        partner = int(comp[x])
        if x < partner:
            u[x] = structure.phase_field[x]
            u[partner] = eye

    new_triple = gauge_triple(triple, u)

    ustar = np.conj(np.swapaxes(u, -1, -2))
    new_phase = ustar @ structure.phase_field @ np.conj(u[comp])
    phase_residual = float(np.abs(new_phase - eye).max())

    reality = new_triple.cocycle.real_compatible()
    conditions = new_triple.cocycle.check_conditions()
    unit_defect = float(
        np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - eye).max()
    )

    from .gwmodule import multiplication_unitary

    u_op = multiplication_unitary(triple, u)
    intertwiner = 0.0
    for k in sorted(triple.active):
        for build in (j_basis, j_sigma):
            lhs = u_op.compose(build(new_triple, k))
            rhs = build(triple, k).compose(u_op)
            intertwiner = max(intertwiner, (lhs - rhs).residual_norm())

    report = StandardizeReport(
        gauge_field=u,
        phase_field_residual=phase_residual,
        reality_residual=reality.residual,
        conditions_residual=max(
            conditions.max_adjoint_residual, conditions.max_commutation_residual
        ),
        intertwiner_unitarity=unit_defect,
        intertwiner_residual=intertwiner,
    )
    return new_triple, report


# ---------------------------------------------------------------------------
# The mod-4 splitting table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CartanPhase:
    m: int
    holonomy: complex
    predicted: int
    split: bool

    @property
    def agrees(self) -> bool:
        return abs(self.holonomy - self.predicted) <= 1e-12


def cartan_phase(m: int) -> CartanPhase:
    """Propagated pairing phase for the trivial family on the counting measure.

    The pairing holonomy equals (-1)^(m(m+1)/2); the module splits exactly
    when it is +1, i.e. for m = 0, 3 mod 4.
    """
    from .measure import OccupationMeasure

    triple = GWTriple(
        m=m,
        measure=OccupationMeasure.uniform(m),
        cocycle=CocycleFamily.trivial(m),
    )
    result = solve(triple)
    if isinstance(result, RealStructure):
        holonomy = 1.0 + 0.0j
        split = True
    else:
        holonomy = result.holonomy
        split = False
    predicted = -1 if (m * (m + 1) // 2) % 2 else 1
    return CartanPhase(m=m, holonomy=holonomy, predicted=predicted, split=split)
