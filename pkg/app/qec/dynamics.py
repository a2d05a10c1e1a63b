import asyncio
import dataclasses
import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pydantic
from scipy.linalg import expm

from app import settings
from app.qec.metrics import state_fidelity, trace_distance
from app.qec.operators import (
    DensityMatrix,
    Operator,
    StateVector,
    dagger,
    density_matrix,
    dissipator,
    hermitize,
    qubit_count,
    validate_density_matrix,
)
from app.qec.synthesis import (
    ErrorChannel,
    FeedbackScheme,
    effective_hamiltonian,
    jump_operators,
    measurement_operators,
    no_jump_generator,
)
from app.services.errors import (
    DetectionEfficiencyError,
    DimensionMismatchError,
    EnsembleMismatchError,
    NumericalIntegrityError,
    SchemeModeError,
    StepSizeError,
)

logger = logging.getLogger(__name__)

UNRAVELINGS = ("jump", "diffusive")


class TrajectoryConfig(pydantic.BaseModel):
    dt: pydantic.PositiveFloat
    t_final: pydantic.PositiveFloat
    seed: int = 0
    unraveling: str = "jump"
    n_traj: pydantic.conint(ge=0) = 0
    record_stride: pydantic.conint(ge=1) = 1

    class Config:
        extra = "forbid"

    @pydantic.validator("unraveling")
    def valid_unraveling(cls, v):
        if v not in UNRAVELINGS:
            raise ValueError(f"unraveling must be one of {UNRAVELINGS}")
        return v

    @pydantic.validator("t_final")
    def whole_number_of_steps(cls, v, values):
        dt = values.get("dt")
        if dt is not None:
            steps = v / dt
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps) or round(steps) < 1:
                raise ValueError(f"t_final={v} is not a whole number of steps of dt={dt}")
        return v

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def recorded_steps(self) -> List[int]:
        steps = list(range(0, self.n_steps + 1, self.record_stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return steps

    @property
    def times(self) -> np.ndarray:
        return np.array(self.recorded_steps, dtype=float) * self.dt


class JumpEvent(NamedTuple):
    step: int
    time: float
    channel: int
    qubit: int


@dataclasses.dataclass(eq=False)
class StateSeries:
    """Density matrices of a deterministic integration at the recorded times."""
    times: np.ndarray
    states: np.ndarray

    @property
    def final_state(self) -> DensityMatrix:
        return self.states[-1]

    def fidelity(self, psi: StateVector) -> np.ndarray:
        return np.array([state_fidelity(rho, psi) for rho in self.states])


@dataclasses.dataclass(eq=False)
class TrajectoryRecord:
    unraveling: str
    seed: int
    times: np.ndarray
    fidelity_series: np.ndarray
    # state vectors for jump records, density matrices for diffusive ones
    states: np.ndarray
    events: List[JumpEvent] = dataclasses.field(default_factory=list)
    # dQ/dt per step and channel
    currents: Optional[np.ndarray] = None
    recorded_steps: List[int] = dataclasses.field(default_factory=list)
    n_channels: int = 0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def density_matrices(self) -> np.ndarray:
        if self.states.ndim == 2:
            return np.einsum("ti,tj->tij", self.states, self.states.conj())
        return self.states

    def jump_counts(self) -> np.ndarray:
        """Cumulative jumps per channel at every recorded time."""
        counts = np.zeros((len(self.recorded_steps), self.n_channels), dtype=int)
        for event in self.events:
            for k, step in enumerate(self.recorded_steps):
                if event.step < step:
                    counts[k, event.channel] += 1
        return counts

    def current_series(self) -> np.ndarray:
        """Mean current over each recording interval; zero at t = 0."""
        series = np.zeros((len(self.recorded_steps), self.n_channels))
        if self.currents is None:
            return series
        for k in range(1, len(self.recorded_steps)):
            window = self.currents[self.recorded_steps[k - 1]:self.recorded_steps[k]]
            series[k] = window.mean(axis=0)
        return series


@dataclasses.dataclass(eq=False)
class EnsembleAverage:
    times: np.ndarray
    states: np.ndarray
    fidelity_mean: np.ndarray
    fidelity_stderr: np.ndarray
    counts_mean: np.ndarray
    currents_mean: np.ndarray
    n_traj: int
    max_trace_distance: Optional[float] = None


def rate_bound(channels: Sequence[ErrorChannel], unraveling: str = "jump") -> float:
    if not channels:
        return 0.0
    if unraveling == "diffusive":
        return max(ch.kappa * float(np.linalg.norm(ch.c, 2)) ** 2 for ch in channels)
    return max(ch.rate_bound for ch in channels)


def check_step_bound(channels: Sequence[ErrorChannel], dt: float, unraveling: str = "jump"):
    bound = rate_bound(channels, unraveling)
    if dt * bound > settings.STEP_BOUND:
        raise StepSizeError(
            f"dt={dt} gives a per-step jump probability bound of {dt * bound:.3g}, above {settings.STEP_BOUND}; "
            f"use dt <= {settings.STEP_BOUND / bound:.3g}"
        )


def suggest_time_step(channels: Sequence[ErrorChannel], t_final: float, unraveling: str = "jump") -> float:
    """Largest dt dividing t_final into whole steps that respects the step bound."""
    bound = rate_bound(channels, unraveling)
    n_steps = max(1, math.ceil(t_final * bound / settings.STEP_BOUND))
    return t_final / n_steps


def _rk4_step(rhs: Callable[[DensityMatrix], DensityMatrix], rho: DensityMatrix, dt: float) -> DensityMatrix:
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * dt * k1)
    k3 = rhs(rho + 0.5 * dt * k2)
    k4 = rhs(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _as_density(state) -> DensityMatrix:
    state = np.asarray(state, dtype=complex)
    return density_matrix(state) if state.ndim == 1 else state


def _integrate(
    rhs: Callable[[DensityMatrix], DensityMatrix],
    rho0: DensityMatrix,
    cfg: TrajectoryConfig,
    kick: Optional[Callable[[int, DensityMatrix], DensityMatrix]] = None,
) -> StateSeries:
    rho = validate_density_matrix(_as_density(rho0).copy(), step=0)
    recorded = set(cfg.recorded_steps)
    states = [rho.copy()]
    for step in range(1, cfg.n_steps + 1):
        rho = hermitize(_rk4_step(rhs, rho, cfg.dt))
        if kick is not None:
            rho = kick(step, rho)
        if step in recorded:
            states.append(validate_density_matrix(rho, step=step).copy())
    return StateSeries(times=cfg.times, states=np.array(states))


def _full_operators(channels: Sequence[Union[ErrorChannel, Operator]], dim: int) -> List[Operator]:
    n = qubit_count(dim)
    ops = []
    for ch in channels:
        if isinstance(ch, ErrorChannel):
            ops.append(ch.lifted(np.sqrt(ch.kappa) * ch.c, n))
        else:
            op = np.asarray(ch, dtype=complex)
            if op.shape != (dim, dim):
                raise DimensionMismatchError(f"Jump operator of shape {op.shape} on a {dim}-dimensional state")
            ops.append(op)
    return ops


def integrate_lindblad(
    rho0: DensityMatrix,
    H: Optional[Operator],
    channels: Sequence[Union[ErrorChannel, Operator]],
    cfg: TrajectoryConfig,
) -> StateSeries:
    """RK4 for rho' = -i[H, rho] + sum D[c]rho; ErrorChannels contribute sqrt(kappa) c."""
    rho0 = _as_density(rho0)
    dim = rho0.shape[0]
    H = np.zeros((dim, dim), dtype=complex) if H is None else np.asarray(H, dtype=complex)
    error_channels = [ch for ch in channels if isinstance(ch, ErrorChannel)]
    check_step_bound(error_channels, cfg.dt)
    ops = _full_operators(channels, dim)

    def rhs(rho):
        drho = -1j * (H @ rho - rho @ H)
        for c in ops:
            drho = drho + dissipator(c, rho)
        return drho

    return _integrate(rhs, rho0, cfg)


def _with_channels(scheme: FeedbackScheme, channels: Optional[Sequence[ErrorChannel]]) -> FeedbackScheme:
    """The scheme acting on the physical channels, which may differ from the ones it was built for."""
    if channels is None:
        return scheme
    channels = list(channels)
    if [ch.qubit for ch in channels] != [ch.qubit for ch in scheme.channels]:
        raise DimensionMismatchError("Physical channels must match the scheme's channels qubit by qubit")
    if scheme.mode == "diffusive":
        channels = [ch.with_gamma(math.inf) for ch in channels]
    return dataclasses.replace(scheme, channels=tuple(channels))


def _require_mode(scheme: FeedbackScheme, *modes: str):
    if scheme.mode not in modes:
        raise SchemeModeError(f"Expected a scheme in mode {' or '.join(modes)}, got '{scheme.mode}'")


def _jump_feedback_rhs(scheme: FeedbackScheme, hamiltonian: Optional[Operator]):
    G = no_jump_generator(scheme, hamiltonian)
    Gd = dagger(G)
    branches = []
    for ch, E, U in zip(scheme.channels, jump_operators(scheme), scheme.recovery_unitaries):
        branches.append((ch.eta, U @ E, E))

    def rhs(rho):
        drho = G @ rho + rho @ Gd
        for eta, corrected, E in branches:
            drho = drho + eta * corrected @ rho @ dagger(corrected)
            if eta < 1:
                drho = drho + (1 - eta) * E @ rho @ dagger(E)
        return drho

    return rhs


def integrate_feedback_me_jump(
    rho0: DensityMatrix,
    scheme: FeedbackScheme,
    channels: Optional[Sequence[ErrorChannel]],
    cfg: TrajectoryConfig,
    hamiltonian: Optional[Operator] = None,
) -> StateSeries:
    """
    Average dynamics of immediate jump correction. Detected jumps (fraction eta) are followed by U_j,
    missed ones are not. `hamiltonian` adds an extra term such as an encoded gate.
    """
    _require_mode(scheme, "jump")
    scheme = _with_channels(scheme, channels)
    check_step_bound(scheme.channels, cfg.dt)
    return _integrate(_jump_feedback_rhs(scheme, hamiltonian), rho0, cfg)


def integrate_feedback_me_diffusive(
    rho0: DensityMatrix,
    scheme: FeedbackScheme,
    channels: Optional[Sequence[ErrorChannel]],
    cfg: TrajectoryConfig,
    hamiltonian: Optional[Operator] = None,
) -> StateSeries:
    """rho' = -i[H', rho] + sum D[c~ - iF]rho + sum ((1 - eta)/eta) D[F]rho"""
    _require_mode(scheme, "diffusive")
    scheme = _with_channels(scheme, channels)
    blind = [ch.qubit for ch in scheme.channels if ch.eta == 0]
    if blind:
        raise DetectionEfficiencyError(f"Diffusive feedback needs eta > 0; channels on qubit(s) {blind} have eta = 0")
    check_step_bound(scheme.channels, cfg.dt, "diffusive")

    H = effective_hamiltonian(scheme, hamiltonian)
    terms = [
        (L, F, (1 - ch.eta) / ch.eta)
        for ch, L, F in zip(scheme.channels, measurement_operators(scheme), scheme.feedback_operators)
    ]

    def rhs(rho):
        drho = -1j * (H @ rho - rho @ H)
        for L, F, excess in terms:
            drho = drho + dissipator(L, rho)
            if excess:
                drho = drho + excess * dissipator(F, rho)
        return drho

    return _integrate(rhs, rho0, cfg)


def _half_period_steps(scheme: FeedbackScheme, dt: float) -> int:
    half = scheme.period / 2 / dt
    if abs(half - round(half)) > 1e-9 * max(1.0, half) or round(half) < 1:
        raise StepSizeError(f"Half period T_c/2 = {scheme.period / 2} is not a multiple of dt = {dt}")
    return int(round(half))


def integrate_pulse_me(
    rho0: DensityMatrix,
    scheme: FeedbackScheme,
    channels: Optional[Sequence[ErrorChannel]],
    cfg: TrajectoryConfig,
) -> StateSeries:
    """Jump-corrected average dynamics with the pulse applied at every multiple of T_c/2."""
    _require_mode(scheme, "pulse")
    scheme = _with_channels(scheme, channels)
    check_step_bound(scheme.channels, cfg.dt)
    half_steps = _half_period_steps(scheme, cfg.dt)
    pulse = scheme.pulse

    def kick(step, rho):
        if step % half_steps == 0:
            return pulse @ rho @ dagger(pulse)
        return rho

    return _integrate(_jump_feedback_rhs(scheme, None), rho0, cfg, kick=kick)


def _normalized(psi: StateVector, step: int) -> StateVector:
    norm = np.linalg.norm(psi)
    if not np.isfinite(norm) or norm <= 0:
        raise NumericalIntegrityError("state vector collapsed", step=step, value=float(norm))
    return psi / norm


def _jump_record(
    psi0: StateVector,
    scheme: FeedbackScheme,
    cfg: TrajectoryConfig,
    hamiltonian: Optional[Operator],
    reference: Optional[StateVector],
    pulse_half_steps: Optional[int] = None,
    postselect: bool = False,
) -> TrajectoryRecord:
    psi = _normalized(np.asarray(psi0, dtype=complex).reshape(-1), 0)
    if psi.shape[0] != scheme.dim:
        raise DimensionMismatchError(f"Initial state of dimension {psi.shape[0]} for a {scheme.dim}-dimensional scheme")
    if any(ch.eta < 1 for ch in scheme.channels):
        raise DetectionEfficiencyError("Conditioned trajectories need perfect detection (eta = 1)")
    reference = psi.copy() if reference is None else np.asarray(reference, dtype=complex)

    rng = np.random.default_rng(cfg.seed)
    draws = rng.random((cfg.n_steps, len(scheme.channels)))
    propagator = expm(no_jump_generator(scheme, hamiltonian) * cfg.dt)
    ops = jump_operators(scheme)
    corrected = [U @ E for U, E in zip(scheme.recovery_unitaries, ops)]

    recorded = set(cfg.recorded_steps)
    states = [psi.copy()]
    events = []
    for step in range(1, cfg.n_steps + 1):
        jumped = False
        if not postselect:
            for j, (E, UE) in enumerate(zip(ops, corrected)):
                probability = float(np.linalg.norm(E @ psi) ** 2) * cfg.dt
                if draws[step - 1, j] < probability:
                    psi = _normalized(UE @ psi, step)
                    events.append(JumpEvent(step=step - 1, time=(step - 1) * cfg.dt, channel=j, qubit=scheme.channels[j].qubit))
                    jumped = True
        if not jumped:
            psi = _normalized(propagator @ psi, step)
        if pulse_half_steps and step % pulse_half_steps == 0:
            psi = scheme.pulse @ psi
        if step in recorded:
            states.append(psi.copy())

    states = np.array(states)
    return TrajectoryRecord(
        unraveling="jump",
        seed=cfg.seed,
        times=cfg.times,
        fidelity_series=np.array([state_fidelity(s, reference) for s in states]),
        states=states,
        events=events,
        recorded_steps=cfg.recorded_steps,
        n_channels=len(scheme.channels),
    )


def trajectory_jump(
    psi0: StateVector,
    scheme: FeedbackScheme,
    channels: Optional[Sequence[ErrorChannel]],
    cfg: TrajectoryConfig,
    hamiltonian: Optional[Operator] = None,
    reference: Optional[StateVector] = None,
) -> TrajectoryRecord:
    """
    Quantum-jump trajectory with immediate correction. Per step and channel a jump happens with
    probability <E^dag E> dt and is followed by U_j; without a jump the state follows exp(G dt).
    """
    _require_mode(scheme, "jump")
    scheme = _with_channels(scheme, channels)
    check_step_bound(scheme.channels, cfg.dt)
    return _jump_record(psi0, scheme, cfg, hamiltonian, reference)


def run_pulse_scheme(
    psi0: StateVector,
    scheme: FeedbackScheme,
    channels: Optional[Sequence[ErrorChannel]],
    cfg: TrajectoryConfig,
    reference: Optional[StateVector] = None,
    postselect: bool = False,
) -> TrajectoryRecord:
    """Jump trajectory without driving; the pulse acts at every multiple of T_c/2. `postselect` suppresses jumps."""
    _require_mode(scheme, "pulse")
    scheme = _with_channels(scheme, channels)
    check_step_bound(scheme.channels, cfg.dt)
    half_steps = _half_period_steps(scheme, cfg.dt)
    return _jump_record(psi0, scheme, cfg, None, reference, pulse_half_steps=half_steps, postselect=postselect)


def _purest_vector(rho: DensityMatrix) -> StateVector:
    values, vectors = np.linalg.eigh(hermitize(rho))
    return vectors[:, -1]


def trajectory_diffusive(
    rho0: DensityMatrix,
    scheme: FeedbackScheme,
    channels: Optional[Sequence[ErrorChannel]],
    cfg: TrajectoryConfig,
    hamiltonian: Optional[Operator] = None,
    reference: Optional[StateVector] = None,
) -> TrajectoryRecord:
    """
    Homodyne trajectory with current feedback. Each step applies
    M = I + G dt + sum L_j dQ_j with dQ_j = <c~_j + c~_j^dag> dt + dW_j, then renormalizes.
    """
    _require_mode(scheme, "diffusive")
    scheme = _with_channels(scheme, channels)
    if any(ch.eta < 1 for ch in scheme.channels):
        raise DetectionEfficiencyError("Conditioned trajectories need perfect detection (eta = 1)")
    check_step_bound(scheme.channels, cfg.dt, "diffusive")

    rho = validate_density_matrix(_as_density(rho0).copy(), step=0)
    if rho.shape[0] != scheme.dim:
        raise DimensionMismatchError(f"Initial state of dimension {rho.shape[0]} for a {scheme.dim}-dimensional scheme")
    reference = _purest_vector(rho) if reference is None else np.asarray(reference, dtype=complex)

    n_ch = len(scheme.channels)
    rng = np.random.default_rng(cfg.seed)
    noise = rng.standard_normal((cfg.n_steps, n_ch)) * np.sqrt(cfg.dt)
    drift = np.eye(scheme.dim) + no_jump_generator(scheme, hamiltonian) * cfg.dt
    ops = measurement_operators(scheme)
    quadratures = [
        ch.lifted(ch.phased + dagger(ch.phased), scheme.n_qubits) for ch in scheme.channels
    ]

    recorded = set(cfg.recorded_steps)
    states = [rho.copy()]
    currents = np.zeros((cfg.n_steps, n_ch))
    for step in range(1, cfg.n_steps + 1):
        M = drift.copy()
        for j, (L, quadrature) in enumerate(zip(ops, quadratures)):
            dQ = float(np.real(np.trace(quadrature @ rho))) * cfg.dt + noise[step - 1, j]
            currents[step - 1, j] = dQ / cfg.dt
            M = M + L * dQ
        rho = hermitize(M @ rho @ dagger(M))
        rho = rho / np.real(np.trace(rho))
        if step in recorded:
            states.append(validate_density_matrix(rho, step=step).copy())

    return TrajectoryRecord(
        unraveling="diffusive",
        seed=cfg.seed,
        times=cfg.times,
        fidelity_series=np.array([state_fidelity(s, reference) for s in states]),
        states=np.array(states),
        currents=currents,
        recorded_steps=cfg.recorded_steps,
        n_channels=n_ch,
    )


def ensemble_average(records: Sequence[TrajectoryRecord], reference: Optional[StateSeries] = None) -> EnsembleAverage:
    """Pointwise mean of the conditional states, with standard errors of the fidelity series."""
    if not records:
        raise EnsembleMismatchError("Cannot average an empty ensemble")
    first = records[0]
    for record in records[1:]:
        if record.unraveling != first.unraveling or not np.array_equal(record.times, first.times):
            raise EnsembleMismatchError(f"Trajectory with seed {record.seed} does not share the ensemble's grid")

    n = len(records)
    states = sum(record.density_matrices() for record in records) / n
    fidelities = np.array([record.fidelity_series for record in records])
    stderr = fidelities.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(len(first.times))
    counts = np.mean([record.jump_counts() for record in records], axis=0)
    currents = np.mean([record.current_series() for record in records], axis=0)

    distance = None
    if reference is not None:
        if not np.allclose(reference.times, first.times):
            raise EnsembleMismatchError("Reference solution is on a different time grid")
        distance = max(trace_distance(a, b) for a, b in zip(states, reference.states))
        logger.info(f"Ensemble of {n} trajectories: max trace distance to reference {distance:.4f}")

    return EnsembleAverage(
        times=first.times,
        states=states,
        fidelity_mean=fidelities.mean(axis=0),
        fidelity_stderr=stderr,
        counts_mean=counts,
        currents_mean=currents,
        n_traj=n,
        max_trace_distance=distance,
    )


async def run_ensemble(
    trajectory_fn: Callable[..., TrajectoryRecord],
    initial: Union[StateVector, DensityMatrix],
    scheme: FeedbackScheme,
    channels: Optional[Sequence[ErrorChannel]],
    cfg: TrajectoryConfig,
    max_workers: Optional[int] = None,
    **kwargs,
) -> List[TrajectoryRecord]:
    """Run cfg.n_traj trajectories concurrently; trajectory i uses seed cfg.seed + i and results keep that order."""
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max_workers or settings.ENSEMBLE_MAX_WORKERS) as executor:
        tasks = [
            loop.run_in_executor(
                executor,
                functools.partial(
                    trajectory_fn, initial, scheme, channels, cfg.copy(update={"seed": cfg.seed + i}), **kwargs
                ),
            )
            for i in range(cfg.n_traj)
        ]
        records = await asyncio.gather(*tasks)
    logger.info(f"Ensemble of {len(records)} {cfg.unraveling} trajectories complete (base seed {cfg.seed})")
    return list(records)
