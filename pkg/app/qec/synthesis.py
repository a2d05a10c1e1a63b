import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pydantic
from scipy.linalg import expm

from app import settings
from app.qec.codes import Codespace, GeneralizedStabilizer, build_codespace, kl_check
from app.qec.operators import (
    I2,
    SIGMA_MINUS,
    Operator,
    anticommutator,
    bloch_components,
    dagger,
    from_bloch,
    is_hermitian,
    is_unitary,
    lift,
    max_abs,
    qubit_count,
)
from app.services.errors import (
    AnticommutationError,
    CertificateError,
    ChannelLayoutError,
    DimensionMismatchError,
    KnillLaflammeError,
    NonHermitianOperatorError,
    SchemeModeError,
)

logger = logging.getLogger(__name__)

MODES = ("jump", "diffusive", "pulse")

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class ErrorChannel:
    """
    A continuously detected error on one qubit.
    The full-space jump operator is sqrt(kappa) * c on `qubit`; gamma = inf flags the diffusive limit.
    """
    qubit: int
    c: Operator
    kappa: float = 1.0
    phi: float = 0.0
    gamma: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex)
        if c.shape != (2, 2):
            raise DimensionMismatchError(f"Jump operator on qubit {self.qubit} must be 2x2, got {c.shape}")
        if self.qubit < 1:
            raise ValueError(f"Qubit index {self.qubit} must be >= 1")
        if self.kappa < 0:
            raise ValueError(f"Rate kappa must be non-negative, got {self.kappa}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"Detection efficiency eta must lie in [0, 1], got {self.eta}")
        if self.gamma < 0 or math.isnan(self.gamma):
            raise ValueError(f"Offset gamma must be real and non-negative, got {self.gamma}")
        object.__setattr__(self, "c", c)

    @classmethod
    def spontaneous_emission(cls, qubit: int, kappa: float = 1.0, phi: float = 0.0, gamma: float = 0.0, eta: float = 1.0):
        return cls(qubit=qubit, c=2 * SIGMA_MINUS, kappa=kappa, phi=phi, gamma=gamma, eta=eta)

    @property
    def is_diffusive(self) -> bool:
        return math.isinf(self.gamma)

    @property
    def phased(self) -> Operator:
        """c~ = e^{-i phi} sqrt(kappa) c"""
        return np.exp(-1j * self.phi) * np.sqrt(self.kappa) * self.c

    @property
    def offset(self) -> Operator:
        """E = c~ + gamma, defined for finite gamma only."""
        if self.is_diffusive:
            raise SchemeModeError(f"Channel on qubit {self.qubit} is in the diffusive limit; E = c + gamma is undefined")
        return self.phased + self.gamma * I2

    @property
    def rate_bound(self) -> float:
        # largest jump rate the channel can reach in any state
        bound = self.kappa * float(np.linalg.norm(self.c, 2)) ** 2
        if not self.is_diffusive:
            bound = float(np.linalg.norm(self.offset, 2)) ** 2
        return bound

    def with_gamma(self, gamma: float) -> "ErrorChannel":
        return replace(self, gamma=gamma)

    def with_eta(self, eta: float) -> "ErrorChannel":
        return replace(self, eta=eta)

    def lifted(self, op: Operator, n: int) -> Operator:
        return lift(op, self.qubit, n)


@dataclass(frozen=True, eq=False)
class OneQubitDecomposition:
    """c~ = chi I + A + i B with A, B traceless Hermitian."""
    chi: complex
    A: Operator
    B: Operator

    @property
    def a(self) -> np.ndarray:
        return bloch_components(self.A)[1].real

    @property
    def b(self) -> np.ndarray:
        return bloch_components(self.B)[1].real

    def reconstruct(self) -> Operator:
        return self.chi * I2 + self.A + 1j * self.B


def decompose(ch: ErrorChannel) -> OneQubitDecomposition:
    c = ch.phased
    chi = complex(np.trace(c) / 2)
    A = 0.5 * (c + dagger(c)) - chi.real * I2
    B = (c - dagger(c)) / 2j - chi.imag * I2
    return OneQubitDecomposition(chi=chi, A=A, B=B)


def error_hermitian_D(ch: ErrorChannel, gamma: Optional[float] = None) -> Operator:
    """Traceless part of E^dag E for E = c~ + gamma."""
    channel = ch if gamma is None else ch.with_gamma(gamma)
    E = channel.offset
    ede = dagger(E) @ E
    return ede - 0.5 * np.trace(ede) * I2


def error_hermitian_D_closed_form(ch: ErrorChannel, gamma: Optional[float] = None) -> Operator:
    """D = 2Re(z) A + 2Im(z) B - 2 (a x b).sigma with z = chi + gamma."""
    gamma = ch.gamma if gamma is None else gamma
    if math.isinf(gamma):
        raise SchemeModeError("Closed form needs a finite offset gamma")
    dec = decompose(ch)
    z = dec.chi + gamma
    return 2 * z.real * dec.A + 2 * z.imag * dec.B - 2 * from_bloch(np.cross(dec.a, dec.b))


def relevant_hermitian(ch: ErrorChannel) -> Operator:
    """The operator the stabilizer factor must anticommute with: D, or A in the diffusive limit."""
    if ch.is_diffusive:
        return decompose(ch).A
    return error_hermitian_D(ch)


def correctable(S: GeneralizedStabilizer, ch: ErrorChannel) -> bool:
    return _anticommutation_residual(S, ch) <= settings.HERMITIAN_TOL


def _anticommutation_residual(S: GeneralizedStabilizer, ch: ErrorChannel) -> float:
    if ch.qubit > S.n_qubits:
        raise DimensionMismatchError(f"Channel on qubit {ch.qubit} lies outside a {S.n_qubits}-qubit stabilizer")
    return max_abs(anticommutator(S.factor(ch.qubit), relevant_hermitian(ch)))


def _orthogonal_axis(d: np.ndarray, scale: float) -> np.ndarray:
    norm = float(np.linalg.norm(d))
    if norm <= settings.HERMITIAN_TOL * max(1.0, scale):
        return X_AXIS
    direction = d / norm
    for axis in (X_AXIS, Z_AXIS, Y_AXIS):
        if abs(direction @ axis) <= settings.TIE_BREAK_TOL:
            return axis
    m = np.cross(direction, Z_AXIS)
    return m / np.linalg.norm(m)


def _check_layout(channels: Sequence[ErrorChannel], n_qubits: Optional[int]) -> int:
    qubits = [ch.qubit for ch in channels]
    duplicates = sorted({q for q in qubits if qubits.count(q) > 1})
    if duplicates:
        raise ChannelLayoutError(f"More than one channel on qubit(s) {duplicates} is not supported")
    n = n_qubits if n_qubits is not None else max(qubits, default=0)
    if n < 1:
        raise ChannelLayoutError("At least one qubit is required")
    if n > settings.MAX_QUBITS:
        raise ChannelLayoutError(f"{n} qubits exceeds the supported maximum of {settings.MAX_QUBITS}")
    outside = [q for q in qubits if q > n]
    if outside:
        raise ChannelLayoutError(f"Channels on qubit(s) {outside} lie outside a {n}-qubit register")
    return n


def synth_stabilizer(channels: Sequence[ErrorChannel], n_qubits: Optional[int] = None) -> GeneralizedStabilizer:
    """
    One stabilizer factor per qubit, each anticommuting with its channel's D (or A when diffusive).
    Qubits without a channel get X.
    """
    n = _check_layout(channels, n_qubits)
    by_qubit = {ch.qubit: ch for ch in channels}
    axes = []
    for q in range(1, n + 1):
        ch = by_qubit.get(q)
        if ch is None:
            axes.append(X_AXIS)
            continue
        target = relevant_hermitian(ch)
        scale = ch.rate_bound
        axes.append(_orthogonal_axis(bloch_components(target)[1].real, scale))
    S = GeneralizedStabilizer.from_axes(axes)
    logger.info(f"Synthesized stabilizer {S}")
    return S


def _anticommutation_failures(S: GeneralizedStabilizer, channels: Sequence[ErrorChannel]) -> List[str]:
    failures = []
    for ch in channels:
        residual = _anticommutation_residual(S, ch)
        if residual > settings.HERMITIAN_TOL:
            name = "{s, A}" if ch.is_diffusive else "{s, D}"
            failures.append(f"channel on qubit {ch.qubit}: {name} != 0 (residual {residual:.3e})")
    return failures


def feedback_diffusive(ch: ErrorChannel, S: GeneralizedStabilizer) -> Operator:
    """F = B - i A S with A, B acting on the channel's qubit."""
    n = S.n_qubits
    dec = decompose(ch)
    F = ch.lifted(dec.B, n) - 1j * ch.lifted(dec.A, n) @ S.matrix
    if not is_hermitian(F):
        raise NonHermitianOperatorError(
            "Feedback operator is not Hermitian",
            failures=[f"channel on qubit {ch.qubit}: {{s, A}} != 0 (residual {max_abs(F - dagger(F)):.3e})"],
        )
    return F


def diffusive_correction(ch: ErrorChannel, S: GeneralizedStabilizer) -> Operator:
    """H_chi = (i/2)(chi L^dag - conj(chi) L) with L = A (I - S); zero for traceless c."""
    n = S.n_qubits
    dec = decompose(ch)
    L = ch.lifted(dec.A, n) @ (np.eye(2 ** n) - S.matrix)
    return 0.5j * (dec.chi * dagger(L) - np.conj(dec.chi) * L)


def driving_hamiltonian(channels: Sequence[ErrorChannel], S: GeneralizedStabilizer, mode: str) -> Operator:
    if mode not in MODES:
        raise SchemeModeError(f"Unknown mode '{mode}', expected one of {MODES}")
    n = S.n_qubits
    H = np.zeros((2 ** n, 2 ** n), dtype=complex)
    if mode == "pulse":
        return H
    for ch in channels:
        if mode == "jump":
            if ch.is_diffusive:
                raise SchemeModeError(f"Channel on qubit {ch.qubit} has infinite gamma in jump mode")
            c = ch.phased
            H += 0.5j * ch.lifted(error_hermitian_D(ch), n) @ S.matrix
            H += 0.5j * ch.gamma * ch.lifted(c - dagger(c), n)
        else:
            c = ch.lifted(ch.phased, n)
            F = feedback_diffusive(ch, S)
            H += -0.5 * (dagger(c) @ F + F @ c) + diffusive_correction(ch, S)
    if not is_hermitian(H, tol=settings.HERMITIAN_TOL * max(1.0, max_abs(H))):
        raise NonHermitianOperatorError(
            "Driving Hamiltonian is not Hermitian", failures=_anticommutation_failures(S, channels)
        )
    return H


def recovery_unitary(ch: ErrorChannel, cs: Codespace, gamma: Optional[float] = None) -> Operator:
    """
    Unitary U with U E w_mu = sqrt(Lambda) w_mu on every codeword.
    The orthonormalized images E w_mu are mapped back onto the codewords; both complements are
    matched in the eigenbasis order of their projectors.
    """
    channel = ch if gamma is None else ch.with_gamma(gamma)
    n = cs.n_qubits
    dim = 2 ** n
    E = channel.lifted(channel.offset, n)
    kl = kl_check(E, cs)
    if not kl.ok:
        raise KnillLaflammeError(
            "No recovery exists", failures=[f"channel on qubit {ch.qubit}: KL condition (residual {kl.residual:.3e})"]
        )
    if kl.lam <= settings.KL_TOL:
        return np.eye(dim, dtype=complex)

    W = cs.codewords
    Q, R = np.linalg.qr(E @ W / np.sqrt(kl.lam))
    Q = Q * np.where(np.real(np.diag(R)) < 0, -1.0, 1.0)
    U = np.hstack([W, _complement(W)]) @ dagger(np.hstack([Q, _complement(Q)]))
    if not is_unitary(U):
        raise CertificateError("Recovery construction lost unitarity", failures=[f"channel on qubit {ch.qubit}"])
    return U


def _complement(V: np.ndarray) -> np.ndarray:
    dim = V.shape[0]
    values, vectors = np.linalg.eigh(np.eye(dim) - V @ dagger(V))
    return vectors[:, values > 0.5]


@dataclass(frozen=True, eq=False)
class FeedbackScheme:
    """
    Synthesized protection scheme. Per-channel tuples follow the order of `channels`:
    recovery unitaries in jump and pulse mode, Hermitian feedback operators in diffusive mode.
    """
    mode: str
    driving_H: Operator
    channels: Tuple[ErrorChannel, ...]
    stabilizer: Optional[GeneralizedStabilizer] = None
    recovery_unitaries: Optional[Tuple[Operator, ...]] = None
    feedback_operators: Optional[Tuple[Operator, ...]] = None
    pulse: Optional[Operator] = None
    period: Optional[float] = None
    notes: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise SchemeModeError(f"Unknown mode '{self.mode}', expected one of {MODES}")
        H = np.asarray(self.driving_H, dtype=complex)
        object.__setattr__(self, "driving_H", H)
        object.__setattr__(self, "channels", tuple(self.channels))
        if not is_hermitian(H, tol=settings.HERMITIAN_TOL * max(1.0, max_abs(H))):
            raise NonHermitianOperatorError("Driving Hamiltonian is not Hermitian")
        if self.mode in ("jump", "pulse"):
            if self.recovery_unitaries is None or len(self.recovery_unitaries) != len(self.channels):
                raise SchemeModeError(f"{self.mode} mode needs one recovery unitary per channel")
            for ch, U in zip(self.channels, self.recovery_unitaries):
                if not is_unitary(U):
                    raise CertificateError("Recovery is not unitary", failures=[f"channel on qubit {ch.qubit}"])
        if self.mode == "diffusive":
            if self.feedback_operators is None or len(self.feedback_operators) != len(self.channels):
                raise SchemeModeError("diffusive mode needs one feedback operator per channel")
            for ch, F in zip(self.channels, self.feedback_operators):
                if not is_hermitian(F):
                    raise NonHermitianOperatorError("Feedback operator is not Hermitian", failures=[f"channel on qubit {ch.qubit}"])
        if self.mode == "pulse":
            if self.pulse is None or self.period is None or self.period <= 0:
                raise SchemeModeError("pulse mode needs a pulse operator and a positive period")

    @classmethod
    def passive(cls, channels: Sequence[ErrorChannel], mode: str, n_qubits: int) -> "FeedbackScheme":
        """No driving and no correction; the unprotected baseline."""
        dim = 2 ** n_qubits
        channels = tuple(channels)
        if mode == "diffusive":
            return cls(
                mode=mode,
                driving_H=np.zeros((dim, dim), dtype=complex),
                channels=tuple(ch.with_gamma(math.inf) for ch in channels),
                feedback_operators=tuple(np.zeros((dim, dim), dtype=complex) for _ in channels),
            )
        if mode != "jump":
            raise SchemeModeError(f"Passive schemes exist for jump and diffusive modes, not '{mode}'")
        return cls(
            mode=mode,
            driving_H=np.zeros((dim, dim), dtype=complex),
            channels=channels,
            recovery_unitaries=tuple(np.eye(dim, dtype=complex) for _ in channels),
        )

    @property
    def dim(self) -> int:
        return self.driving_H.shape[0]

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.dim)

    def operators(self) -> Dict[str, Operator]:
        ops = {"driving_H": self.driving_H}
        if self.stabilizer is not None:
            ops["stabilizer"] = self.stabilizer.matrix
        for ch, U in zip(self.channels, self.recovery_unitaries or ()):
            ops[f"recovery_unitary_{ch.qubit}"] = U
        for ch, F in zip(self.channels, self.feedback_operators or ()):
            ops[f"feedback_operator_{ch.qubit}"] = F
        if self.pulse is not None:
            ops["pulse"] = self.pulse
        return ops


def jump_operators(scheme: FeedbackScheme) -> List[Operator]:
    """Full-space E_j = c~_j + gamma_j for jump and pulse schemes."""
    if scheme.mode == "diffusive":
        raise SchemeModeError("Diffusive schemes have no jump operators")
    return [ch.lifted(ch.offset, scheme.n_qubits) for ch in scheme.channels]


def measurement_operators(scheme: FeedbackScheme) -> List[Operator]:
    """Full-space L_j = c~_j - i F_j for diffusive schemes."""
    if scheme.mode != "diffusive":
        raise SchemeModeError(f"Measurement operators are defined for diffusive schemes, not '{scheme.mode}'")
    return [
        ch.lifted(ch.phased, scheme.n_qubits) - 1j * F
        for ch, F in zip(scheme.channels, scheme.feedback_operators)
    ]


def effective_hamiltonian(scheme: FeedbackScheme, hamiltonian: Optional[Operator] = None) -> Operator:
    """
    Hermitian part of the no-jump generator.
    Jump: H - sum (i gamma/2)(c~ - c~^dag). Diffusive: H + sum (c~^dag F + F c~)/2.
    """
    n = scheme.n_qubits
    H = scheme.driving_H.copy()
    if hamiltonian is not None:
        H = H + hamiltonian
    if scheme.mode == "diffusive":
        for ch, F in zip(scheme.channels, scheme.feedback_operators):
            c = ch.lifted(ch.phased, n)
            H = H + 0.5 * (dagger(c) @ F + F @ c)
        return H
    for ch in scheme.channels:
        c = ch.phased
        H = H - 0.5j * ch.gamma * ch.lifted(c - dagger(c), n)
    return H


def no_jump_generator(scheme: FeedbackScheme, hamiltonian: Optional[Operator] = None) -> Operator:
    """G = -i H_eff - 1/2 sum K^dag K, with K the jump or measurement operators."""
    ops = measurement_operators(scheme) if scheme.mode == "diffusive" else jump_operators(scheme)
    G = -1j * effective_hamiltonian(scheme, hamiltonian)
    for K in ops:
        G = G - 0.5 * dagger(K) @ K
    return G


def pulse_period_propagator(scheme: FeedbackScheme) -> Operator:
    """No-jump propagator over one period: free evolution for T_c/2, pulse, free evolution, pulse."""
    if scheme.mode != "pulse":
        raise SchemeModeError(f"Pulse propagator requested for a '{scheme.mode}' scheme")
    free = expm(no_jump_generator(scheme) * scheme.period / 2)
    return scheme.pulse @ free @ scheme.pulse @ free


def pulse_scheme(channels: Sequence[ErrorChannel], S: GeneralizedStabilizer, period: float) -> FeedbackScheme:
    if period is None or period <= 0:
        raise SchemeModeError(f"Pulse period must be positive, got {period}")
    offsets = [ch.qubit for ch in channels if ch.gamma != 0]
    if offsets:
        raise SchemeModeError(f"Pulse schemes need gamma = 0; channels on qubit(s) {offsets} have an offset")
    failures = _anticommutation_failures(S, channels)
    if failures:
        raise AnticommutationError("Stabilizer does not anticommute with the error terms", failures=failures)
    cs = build_codespace(S)
    return FeedbackScheme(
        mode="pulse",
        driving_H=np.zeros((2 ** S.n_qubits,) * 2, dtype=complex),
        channels=tuple(channels),
        stabilizer=S,
        recovery_unitaries=tuple(recovery_unitary(ch, cs) for ch in channels),
        pulse=S.matrix,
        period=period,
    )


def synthesize_scheme(
    channels: Sequence[ErrorChannel],
    mode: str,
    n_qubits: Optional[int] = None,
    period: Optional[float] = None,
) -> FeedbackScheme:
    """Stabilizer, driving Hamiltonian and per-channel corrections for the given detected channels."""
    if mode not in MODES:
        raise SchemeModeError(f"Unknown mode '{mode}', expected one of {MODES}")
    channels = list(channels)
    if mode == "diffusive":
        channels = [ch.with_gamma(math.inf) for ch in channels]
    elif any(ch.is_diffusive for ch in channels):
        raise SchemeModeError(f"Infinite gamma is only meaningful in diffusive mode, not '{mode}'")

    S = synth_stabilizer(channels, n_qubits)
    failures = _anticommutation_failures(S, channels)
    if failures:
        raise AnticommutationError("Stabilizer does not anticommute with the error terms", failures=failures)

    if mode == "pulse":
        scheme = pulse_scheme(channels, S, period)
    elif mode == "jump":
        cs = build_codespace(S)
        scheme = FeedbackScheme(
            mode=mode,
            driving_H=driving_hamiltonian(channels, S, mode),
            channels=tuple(channels),
            stabilizer=S,
            recovery_unitaries=tuple(recovery_unitary(ch, cs) for ch in channels),
        )
    else:
        scheme = FeedbackScheme(
            mode=mode,
            driving_H=driving_hamiltonian(channels, S, mode),
            channels=tuple(channels),
            stabilizer=S,
            feedback_operators=tuple(feedback_diffusive(ch, S) for ch in channels),
        )
    logger.info(f"Synthesized {mode} scheme for {len(channels)} channel(s) on {S.n_qubits} qubit(s)")
    return scheme


def large_gamma_scheme(channels: Sequence[ErrorChannel], S: GeneralizedStabilizer, gamma: float) -> FeedbackScheme:
    """
    Finite-offset jump scheme that approaches diffusive feedback as gamma grows.
    Correction exp(-iV) with V = F/gamma + V2/gamma^2, V2 = -(c~^dag F + F c~)/2, driving K = -gamma sum F.
    """
    if not 0 < gamma < math.inf:
        raise SchemeModeError(f"Offset gamma must be finite and positive, got {gamma}")
    n = S.n_qubits
    limit = [ch.with_gamma(math.inf) for ch in channels]
    K = np.zeros((2 ** n, 2 ** n), dtype=complex)
    unitaries = []
    for ch in limit:
        F = feedback_diffusive(ch, S)
        c = ch.lifted(ch.phased, n)
        V = F / gamma - 0.5 * (dagger(c) @ F + F @ c) / gamma ** 2
        unitaries.append(expm(-1j * V))
        K = K - gamma * F + diffusive_correction(ch, S)
    return FeedbackScheme(
        mode="jump",
        driving_H=0.5 * (K + dagger(K)),
        channels=tuple(ch.with_gamma(gamma) for ch in channels),
        stabilizer=S,
        recovery_unitaries=tuple(unitaries),
        notes={"origin": f"large-gamma scheme at gamma={gamma}"},
    )


class CertificateCheck(pydantic.BaseModel):
    name: str
    qubit: Optional[int] = None
    passed: bool
    residual: float
    tolerance: float

    def describe(self) -> str:
        where = f"channel on qubit {self.qubit}" if self.qubit is not None else "scheme"
        return f"{where}: {self.name} (residual {self.residual:.3e}, tolerance {self.tolerance:.1e})"


class CertificateReport(pydantic.BaseModel):
    mode: str
    checks: List[CertificateCheck] = []

    @property
    def ok(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CertificateCheck]:
        return [check for check in self.checks if not check.passed]

    def raise_for_failures(self):
        if not self.ok:
            raise CertificateError("Scheme failed its certificates", failures=[f.describe() for f in self.failures])


def _record(report: CertificateReport, name: str, residual: float, tolerance: float, qubit: Optional[int] = None):
    report.checks.append(
        CertificateCheck(name=name, qubit=qubit, passed=residual <= tolerance, residual=residual, tolerance=tolerance)
    )


def _scalar_residual(M: Operator, P: Operator) -> float:
    """Distance of M P from (scalar) P, the scalar taken as the codespace average."""
    scalar = np.trace(P @ M @ P) / np.trace(P)
    return max_abs(M @ P - scalar * P)


def check_scheme(scheme: FeedbackScheme, cs: Optional[Codespace] = None) -> CertificateReport:
    """Verify a scheme against the codespace; every failing check names its channel."""
    if cs is None:
        if scheme.stabilizer is None:
            raise SchemeModeError("A codespace or stabilizer is required to certify a scheme")
        cs = build_codespace(scheme.stabilizer)
    if cs.n_qubits != scheme.n_qubits:
        raise DimensionMismatchError(f"Codespace on {cs.n_qubits} qubits, scheme on {scheme.n_qubits}")
    n = scheme.n_qubits
    P = cs.projector
    report = CertificateReport(mode=scheme.mode)
    H = scheme.driving_H
    _record(report, "driving_hamiltonian_hermitian", max_abs(H - dagger(H)), settings.HERMITIAN_TOL * max(1.0, max_abs(H)))

    if scheme.stabilizer is not None:
        for ch in scheme.channels:
            _record(report, "anticommutation", _anticommutation_residual(scheme.stabilizer, ch), settings.HERMITIAN_TOL, ch.qubit)

    if scheme.mode == "diffusive":
        for ch, F in zip(scheme.channels, scheme.feedback_operators):
            _record(report, "feedback_hermitian", max_abs(F - dagger(F)), settings.HERMITIAN_TOL, ch.qubit)
            dec = decompose(ch)
            L = ch.lifted(ch.phased, n) - 1j * F - dec.chi * np.eye(2 ** n)
            _record(
                report, "lindblad_annihilation", max_abs(L @ P),
                settings.ANNIHILATION_TOL * max(1.0, max_abs(F)), ch.qubit,
            )
    else:
        for ch, E, U in zip(scheme.channels, jump_operators(scheme), scheme.recovery_unitaries):
            kl = kl_check(E, cs)
            _record(report, "kl_condition", kl.residual, settings.KL_TOL * max(1.0, max_abs(dagger(E) @ E)), ch.qubit)
            _record(report, "recovery_unitary", max_abs(dagger(U) @ U - np.eye(2 ** n)), settings.UNITARY_TOL, ch.qubit)
            W = cs.codewords
            returned = max_abs(U @ E @ W - np.sqrt(max(kl.lam, 0.0)) * W)
            _record(report, "codespace_return", returned, settings.RECOVERY_TOL * max(1.0, max_abs(E)), ch.qubit)

    G = no_jump_generator(scheme)
    if scheme.mode == "pulse":
        _record(report, "pulse_involution", max_abs(scheme.pulse @ scheme.pulse - np.eye(2 ** n)), settings.INVOLUTION_TOL)
        propagator = pulse_period_propagator(scheme)
        scalar = np.trace(propagator) / propagator.shape[0]
        _record(report, "period_scalar", max_abs(propagator - scalar * np.eye(2 ** n)), settings.HERMITIAN_TOL)
    else:
        _record(report, "no_jump_scalar", _scalar_residual(G, P), settings.HERMITIAN_TOL * max(1.0, max_abs(G)))

    for failure in report.failures:
        logger.warning(f"Certificate failed for {failure.describe()}")
    return report
