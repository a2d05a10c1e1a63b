import logging
from dataclasses import dataclass
from functools import reduce
from typing import Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from app import settings
from app.services.errors import DimensionMismatchError, NumericalIntegrityError

logger = logging.getLogger(__name__)

Operator = npt.NDArray[np.complex128]
DensityMatrix = Operator
StateVector = npt.NDArray[np.complex128]

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA = (X, Y, Z)
PAULI_MATRICES = {"I": I2, "X": X, "Y": Y, "Z": Z}

# |0><1|, decay from |1> to |0>
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE_GATE = np.array([[1, 0], [0, 1j]], dtype=complex)

_PHASE_VALUES = (1, 1j, -1, -1j)
_PHASE_PREFIXES = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}

# (left, right) -> (power of i, letter)
_SITE_PRODUCTS = {
    ("X", "Y"): (1, "Z"),
    ("Y", "Z"): (1, "X"),
    ("Z", "X"): (1, "Y"),
    ("Y", "X"): (3, "Z"),
    ("Z", "Y"): (3, "X"),
    ("X", "Z"): (3, "Y"),
}


@dataclass(frozen=True)
class PauliString:
    """
    Element of the n-qubit Pauli group: i^phase times a tensor product of letters.
    Qubit 1 is the leftmost letter.
    """
    letters: str
    phase: int = 0

    def __post_init__(self):
        if not self.letters or set(self.letters) - set("IXYZ"):
            raise ValueError(f"Invalid Pauli letters '{self.letters}'")
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        text = text.strip()
        body = text.lstrip("+-i")
        prefix = text[:len(text) - len(body)]
        if prefix not in _PHASE_PREFIXES:
            raise ValueError(f"Invalid Pauli phase prefix '{prefix}' in '{text}'")
        return cls(letters=body, phase=_PHASE_PREFIXES[prefix])

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def phase_value(self) -> complex:
        return _PHASE_VALUES[self.phase]

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def __str__(self):
        prefix = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase]
        return f"{prefix}{self.letters}"


def _check_lengths(p: PauliString, q: PauliString):
    if p.n_qubits != q.n_qubits:
        raise DimensionMismatchError(
            f"Pauli strings act on different registers: {p.n_qubits} vs {q.n_qubits} qubits"
        )


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    _check_lengths(p, q)
    power = p.phase + q.phase
    letters = []
    for a, b in zip(p.letters, q.letters):
        if a == "I":
            letters.append(b)
        elif b == "I":
            letters.append(a)
        elif a == b:
            letters.append("I")
        else:
            extra, letter = _SITE_PRODUCTS[(a, b)]
            power += extra
            letters.append(letter)
    return PauliString(letters="".join(letters), phase=power)


def anticommutes(p: PauliString, q: PauliString) -> bool:
    _check_lengths(p, q)
    clashes = sum(1 for a, b in zip(p.letters, q.letters) if a != "I" and b != "I" and a != b)
    return clashes % 2 == 1


def qubit_count(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 0 or 2 ** n != dim:
        raise DimensionMismatchError(f"Dimension {dim} is not a power of two")
    if n > settings.MAX_QUBITS:
        raise DimensionMismatchError(f"{n} qubits exceeds the supported maximum of {settings.MAX_QUBITS}")
    return n


def to_matrix(expr: Union[PauliString, str, Sequence[Operator]]) -> Operator:
    """
    Kronecker product of one-qubit factors, qubit 1 leftmost.
    Accepts a PauliString, its text form, or a sequence of 2x2 operators.
    """
    if isinstance(expr, str):
        expr = PauliString.parse(expr)
    if isinstance(expr, PauliString):
        factors = [PAULI_MATRICES[letter] for letter in expr.letters]
        scale = expr.phase_value
    else:
        factors = [np.asarray(f, dtype=complex) for f in expr]
        scale = 1.0
        if not factors or any(f.shape != (2, 2) for f in factors):
            raise DimensionMismatchError("Tensor factors must be a non-empty sequence of 2x2 operators")
    if len(factors) > settings.MAX_QUBITS:
        raise DimensionMismatchError(f"{len(factors)} qubits exceeds the supported maximum of {settings.MAX_QUBITS}")
    return scale * reduce(np.kron, factors)


def lift(op: Operator, qubit: int, n: int) -> Operator:
    """Embed a one-qubit operator at 1-based position `qubit` of an n-qubit register."""
    if not 1 <= qubit <= n:
        raise DimensionMismatchError(f"Qubit index {qubit} outside 1..{n}")
    factors = [I2] * n
    factors[qubit - 1] = np.asarray(op, dtype=complex)
    return to_matrix(factors)


def dagger(op: Operator) -> Operator:
    return np.conjugate(np.swapaxes(op, -1, -2))


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def anticommutator(a: Operator, b: Operator) -> Operator:
    return a @ b + b @ a


def max_abs(op: Operator) -> float:
    return float(np.max(np.abs(op))) if np.size(op) else 0.0


def is_hermitian(op: Operator, tol: float = settings.HERMITIAN_TOL) -> bool:
    return max_abs(op - dagger(op)) <= tol


def is_unitary(op: Operator, tol: float = settings.UNITARY_TOL) -> bool:
    return max_abs(dagger(op) @ op - np.eye(op.shape[0])) <= tol


def hermitize(op: Operator) -> Operator:
    return 0.5 * (op + dagger(op))


def _check_shapes(c: Operator, rho: Operator):
    if c.shape != rho.shape[-2:] or c.shape[0] != c.shape[1]:
        raise DimensionMismatchError(f"Operator shape {c.shape} does not match state shape {rho.shape}")


def dissipator(c: Operator, rho: DensityMatrix) -> Operator:
    """D[c]rho = c rho c^dag - (c^dag c rho + rho c^dag c)/2"""
    _check_shapes(c, rho)
    cd = dagger(c)
    cdc = cd @ c
    return c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)


def h_superop(c: Operator, rho: DensityMatrix) -> Operator:
    """H[c]rho = c rho + rho c^dag - rho tr(c rho + rho c^dag)"""
    _check_shapes(c, rho)
    m = c @ rho + rho @ dagger(c)
    return m - rho * np.trace(m)


def bloch_components(op: Operator) -> Tuple[complex, np.ndarray]:
    """
    Pauli-basis coefficients of a 2x2 operator: op = s*I + v.sigma.
    :return: (s, v) with v complex; v is real for Hermitian op.
    """
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise DimensionMismatchError(f"Expected a one-qubit operator, got shape {op.shape}")
    scalar = np.trace(op) / 2
    vector = np.array([np.trace(s @ op) / 2 for s in SIGMA])
    return complex(scalar), vector


def from_bloch(vector: Sequence[float]) -> Operator:
    return sum(v * s for v, s in zip(vector, SIGMA))


def ket(bits: str) -> StateVector:
    index = int(bits, 2) if bits else 0
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[index] = 1.0
    return psi


def density_matrix(psi: StateVector) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def validate_density_matrix(rho: DensityMatrix, step: int = None) -> DensityMatrix:
    """Raise NumericalIntegrityError on a trace, Hermiticity or positivity breach."""
    trace = np.trace(rho)
    if abs(trace - 1) > settings.TRACE_TOL:
        raise NumericalIntegrityError("trace drifted from 1", step=step, value=complex(trace))
    if not is_hermitian(rho):
        raise NumericalIntegrityError("state lost Hermiticity", step=step, value=max_abs(rho - dagger(rho)))
    smallest = float(np.linalg.eigvalsh(hermitize(rho))[0])
    if smallest < -settings.POSITIVITY_TOL:
        raise NumericalIntegrityError("negative eigenvalue", step=step, value=smallest)
    return rho
