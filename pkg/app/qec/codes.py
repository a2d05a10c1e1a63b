import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from app import settings
from app.qec.operators import (
    HADAMARD,
    I2,
    PHASE_GATE,
    X,
    Z,
    Operator,
    PauliString,
    StateVector,
    anticommutes,
    bloch_components,
    dagger,
    from_bloch,
    is_hermitian,
    is_unitary,
    lift,
    max_abs,
    qubit_count,
    to_matrix,
)
from app.services.errors import DimensionMismatchError, InvalidStabilizerError, MissingConjugatorsError

logger = logging.getLogger(__name__)

# Conjugating unitaries U with U X U^dag equal to the letter
PAULI_CONJUGATORS = {"X": I2, "Y": PHASE_GATE, "Z": HADAMARD}

FIVE_QUBIT_CODE_GENERATORS = ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")


def rotation_to_axis(axis: Sequence[float]) -> Operator:
    """One-qubit unitary U with U X U^dag = axis.sigma for a unit Bloch vector."""
    m = np.asarray(axis, dtype=float)
    m = m / np.linalg.norm(m)
    if m[0] >= 1 - 1e-12:
        return I2.copy()
    if m[0] <= -1 + 1e-12:
        return Z.copy()
    rotation_axis = np.cross([1.0, 0.0, 0.0], m)
    rotation_axis /= np.linalg.norm(rotation_axis)
    theta = np.arccos(np.clip(m[0], -1.0, 1.0))
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * from_bloch(rotation_axis)


@dataclass(frozen=True, eq=False)
class GeneralizedStabilizer:
    """
    S = s_1 x ... x s_n with every s_j a traceless Hermitian involution.
    `conjugators`, when known, are local unitaries with U_j X U_j^dag = s_j.
    """
    factors: Tuple[Operator, ...]
    conjugators: Optional[Tuple[Operator, ...]] = None

    def __post_init__(self):
        factors = tuple(np.asarray(f, dtype=complex) for f in self.factors)
        if not factors:
            raise InvalidStabilizerError("A stabilizer needs at least one factor")
        if len(factors) > settings.MAX_QUBITS:
            raise InvalidStabilizerError(f"{len(factors)} qubits exceeds the supported maximum of {settings.MAX_QUBITS}")
        for j, f in enumerate(factors, start=1):
            if f.shape != (2, 2):
                raise InvalidStabilizerError(f"Factor on qubit {j} is not a one-qubit operator")
            if not is_hermitian(f, tol=settings.FACTOR_TOL):
                raise InvalidStabilizerError(f"Factor on qubit {j} is not Hermitian")
            if abs(np.trace(f)) > settings.FACTOR_TOL:
                raise InvalidStabilizerError(f"Factor on qubit {j} is not traceless")
            if max_abs(f @ f - I2) > settings.FACTOR_TOL:
                raise InvalidStabilizerError(f"Factor on qubit {j} does not square to the identity")
        object.__setattr__(self, "factors", factors)

        if self.conjugators is not None:
            conjugators = tuple(np.asarray(u, dtype=complex) for u in self.conjugators)
            if len(conjugators) != len(factors):
                raise InvalidStabilizerError("One conjugating unitary is required per factor")
            for j, (u, f) in enumerate(zip(conjugators, factors), start=1):
                if not is_unitary(u):
                    raise InvalidStabilizerError(f"Conjugator on qubit {j} is not unitary")
                if max_abs(u @ X @ dagger(u) - f) > settings.INVOLUTION_TOL:
                    raise InvalidStabilizerError(f"Conjugator on qubit {j} does not map X onto the factor")
            object.__setattr__(self, "conjugators", conjugators)

    @classmethod
    def from_pauli(cls, letters: str) -> "GeneralizedStabilizer":
        if set(letters) - set("XYZ"):
            raise InvalidStabilizerError(f"'{letters}' is not a product of non-identity Pauli letters")
        return cls(
            factors=tuple(to_matrix(letter) for letter in letters),
            conjugators=tuple(PAULI_CONJUGATORS[letter] for letter in letters),
        )

    @classmethod
    def from_axes(cls, axes: Sequence[Sequence[float]]) -> "GeneralizedStabilizer":
        units = [np.asarray(a, dtype=float) / np.linalg.norm(a) for a in axes]
        return cls(
            factors=tuple(from_bloch(m) for m in units),
            conjugators=tuple(rotation_to_axis(m) for m in units),
        )

    @property
    def n_qubits(self) -> int:
        return len(self.factors)

    def factor(self, qubit: int) -> Operator:
        return self.factors[qubit - 1]

    @cached_property
    def matrix(self) -> Operator:
        return to_matrix(self.factors)

    @cached_property
    def axes(self) -> np.ndarray:
        return np.array([bloch_components(f)[1].real for f in self.factors])

    def __str__(self):
        return " x ".join(f"({a[0]:+.3f},{a[1]:+.3f},{a[2]:+.3f})" for a in self.axes)


@dataclass(frozen=True, eq=False)
class EncodedOperators:
    xbar: Tuple[Operator, ...]
    zbar: Tuple[Operator, ...]

    @property
    def n_logical(self) -> int:
        return len(self.xbar)

    def logical(self, letters: str) -> Operator:
        """Encoded operator for a logical Pauli word, e.g. 'XX' -> Xbar_1 Xbar_2."""
        if len(letters) != self.n_logical:
            raise DimensionMismatchError(f"'{letters}' does not cover {self.n_logical} logical qubits")
        dim = self.xbar[0].shape[0] if self.xbar else 2
        result = np.eye(dim, dtype=complex)
        for mu, letter in enumerate(letters):
            if letter == "X":
                result = result @ self.xbar[mu]
            elif letter == "Z":
                result = result @ self.zbar[mu]
            elif letter == "Y":
                result = result @ (1j * self.xbar[mu] @ self.zbar[mu])
            elif letter != "I":
                raise ValueError(f"Invalid logical Pauli letter '{letter}'")
        return result


@dataclass(frozen=True, eq=False)
class Codespace:
    projector: Operator
    # columns are the orthonormal codewords
    codewords: np.ndarray
    stabilizer: Optional[GeneralizedStabilizer] = None
    generators: Tuple[PauliString, ...] = field(default_factory=tuple)

    @property
    def dimension(self) -> int:
        return self.codewords.shape[1]

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.projector.shape[0])

    @property
    def n_logical(self) -> int:
        return qubit_count(self.dimension)


def _span_basis(projector: Operator, rank: int) -> np.ndarray:
    # Gram-Schmidt over P|k> in computational order, so P|0...0> comes first
    basis = []
    for k in range(projector.shape[0]):
        v = projector[:, k].copy()
        for b in basis:
            v -= b * np.vdot(b, v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
        if len(basis) == rank:
            break
    return np.column_stack(basis)


def encoded_operators(S: GeneralizedStabilizer) -> EncodedOperators:
    if S.conjugators is None:
        raise MissingConjugatorsError(
            "Encoded operators need the local unitaries U_j with S = U X^n U^dag; none were provided"
        )
    n = S.n_qubits
    u = S.conjugators
    z_last = lift(u[-1] @ Z @ dagger(u[-1]), n, n)
    xbar = tuple(lift(u[mu - 1] @ X @ dagger(u[mu - 1]), mu, n) for mu in range(1, n))
    zbar = tuple(lift(u[mu - 1] @ Z @ dagger(u[mu - 1]), mu, n) @ z_last for mu in range(1, n))
    return EncodedOperators(xbar=xbar, zbar=zbar)


def build_codespace(S: GeneralizedStabilizer) -> Codespace:
    matrix = S.matrix
    dim = matrix.shape[0]
    if max_abs(matrix @ matrix - np.eye(dim)) > settings.INVOLUTION_TOL:
        raise InvalidStabilizerError("Stabilizer is not an involution")
    projector = 0.5 * (np.eye(dim) + matrix)
    rank = dim // 2

    if S.conjugators is None:
        codewords = _span_basis(projector, rank)
    else:
        ops = encoded_operators(S)
        # +1 eigenstate of every Zbar, so the Xbar products give a logical computational basis
        fiducial = projector @ reduce(np.kron, [u[:, 0] for u in S.conjugators])
        fiducial /= np.linalg.norm(fiducial)
        columns = []
        for bits in itertools.product((0, 1), repeat=S.n_qubits - 1):
            w = fiducial
            for mu, bit in enumerate(bits):
                if bit:
                    w = ops.xbar[mu] @ w
            columns.append(w)
        codewords = np.column_stack(columns)

    if max_abs(matrix @ codewords - codewords) > settings.INVOLUTION_TOL:
        raise InvalidStabilizerError("Codeword construction left the +1 eigenspace")
    logger.debug(f"Built codespace of dimension {rank} for stabilizer {S}")
    return Codespace(projector=projector, codewords=codewords, stabilizer=S)


def encode(logical: StateVector, cs: Codespace, ops: Optional[EncodedOperators] = None) -> StateVector:
    """
    Map a logical state on n-1 qubits into the codespace.
    With `ops`, codewords are regenerated from the fiducial as Xbar products;
    otherwise the codespace's stored basis is used.
    """
    logical = np.asarray(logical, dtype=complex).reshape(-1)
    if logical.shape[0] != cs.dimension:
        raise DimensionMismatchError(
            f"Logical state has dimension {logical.shape[0]}, codespace has {cs.dimension}"
        )
    if ops is None:
        return cs.codewords @ logical
    fiducial = cs.codewords[:, 0]
    psi = np.zeros_like(fiducial)
    for index, bits in enumerate(itertools.product((0, 1), repeat=ops.n_logical)):
        w = fiducial
        for mu, bit in enumerate(bits):
            if bit:
                w = ops.xbar[mu] @ w
        psi = psi + logical[index] * w
    return psi


class KLResult(NamedTuple):
    ok: bool
    lam: float
    residual: float


def kl_check(E: Operator, cs: Codespace) -> KLResult:
    """Knill-Laflamme test <w_mu|E^dag E|w_nu> = lambda delta_mu_nu over the codeword basis."""
    ede = dagger(E) @ E
    gram = dagger(cs.codewords) @ ede @ cs.codewords
    lam = float(np.real(np.trace(gram))) / cs.dimension
    residual = max_abs(gram - lam * np.eye(cs.dimension))
    ok = residual <= settings.KL_TOL * max(1.0, max_abs(ede))
    return KLResult(ok=ok, lam=lam, residual=residual)


def stabilizer_group_codespace(generators: Sequence[Union[PauliString, str]]) -> Codespace:
    """Joint +1 eigenspace of commuting Hermitian Pauli generators."""
    paulis = tuple(PauliString.parse(g) if isinstance(g, str) else g for g in generators)
    if not paulis:
        raise InvalidStabilizerError("At least one generator is required")
    for g in paulis:
        if g.phase % 2:
            raise InvalidStabilizerError(f"Generator {g} is not Hermitian")
    for g, h in itertools.combinations(paulis, 2):
        if anticommutes(g, h):
            raise InvalidStabilizerError(f"Generators {g} and {h} anticommute")
    dim = 2 ** paulis[0].n_qubits
    identity = np.eye(dim, dtype=complex)
    projector = reduce(lambda acc, g: acc @ (0.5 * (identity + to_matrix(g))), paulis, identity)
    rank = int(round(np.real(np.trace(projector))))
    if rank == 0:
        raise InvalidStabilizerError("Generators stabilize no state")
    return Codespace(projector=projector, codewords=_span_basis(projector, rank), generators=paulis)


def five_qubit_stabilizer_for_qubit(qubit: int) -> PauliString:
    """First five-qubit code generator acting as X on the given qubit."""
    for letters in FIVE_QUBIT_CODE_GENERATORS:
        if letters[qubit - 1] == "X":
            return PauliString(letters)
    raise InvalidStabilizerError(f"No five-qubit code generator acts as X on qubit {qubit}")
