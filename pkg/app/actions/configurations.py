import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import pydantic

from app.actions.core import ScenarioConfig
from app.qec.synthesis import ErrorChannel, FeedbackScheme, synthesize_scheme


class TwoQubitJumpConfig(ScenarioConfig):
    scenario: Literal["two-qubit-jump"] = "two-qubit-jump"
    n_qubits: Literal[2] = 2
    mode: Literal["jump"] = "jump"
    # also integrate the unprotected Lindblad equation as a negative control
    baseline: bool = True


class TwoQubitDiffusiveConfig(ScenarioConfig):
    scenario: Literal["two-qubit-diffusive"] = "two-qubit-diffusive"
    n_qubits: Literal[2] = 2
    mode: Literal["diffusive"] = "diffusive"
    baseline: bool = True


class NQubitSpontConfig(ScenarioConfig):
    scenario: Literal["n-qubit-spont"] = "n-qubit-spont"
    n_qubits: pydantic.conint(ge=2) = 3
    mode: Literal["jump", "diffusive"] = "jump"
    t_final: pydantic.PositiveFloat = 3.0
    kappas: Optional[List[pydantic.confloat(ge=0)]] = None
    # draw kappas uniformly from kappa_range with the scenario seed
    random_kappas: bool = False
    kappa_range: Tuple[pydantic.confloat(ge=0), pydantic.confloat(ge=0)] = (0.5, 2.0)
    baseline: bool = True

    @pydantic.root_validator(skip_on_failure=True)
    def kappas_cover_register(cls, values):
        if values.get("channels") is not None:
            raise ValueError("n-qubit-spont builds its channels from kappas; use general-channel for explicit channels")
        kappas = values.get("kappas")
        if kappas is not None and len(kappas) != values["n_qubits"]:
            raise ValueError(f"Expected {values['n_qubits']} kappas, got {len(kappas)}")
        if kappas is not None and values.get("random_kappas"):
            raise ValueError("Give kappas or random_kappas, not both")
        low, high = values["kappa_range"]
        if low > high:
            raise ValueError(f"Empty kappa range ({low}, {high})")
        return values

    def rates(self) -> List[float]:
        if self.kappas is not None:
            return list(self.kappas)
        if self.random_kappas:
            rng = np.random.default_rng(self.seed)
            return [float(k) for k in rng.uniform(*self.kappa_range, size=self.n_qubits)]
        return [1.0] * self.n_qubits

    def resolved_channels(self) -> List[ErrorChannel]:
        phi = -math.pi / 2 if self.mode == "diffusive" else 0.0
        return [
            ErrorChannel.spontaneous_emission(q, kappa=kappa, phi=phi)
            for q, kappa in enumerate(self.rates(), start=1)
        ]


class GeneralChannelConfig(ScenarioConfig):
    scenario: Literal["general-channel"] = "general-channel"
    mode: Literal["jump", "diffusive"] = "jump"
    t_final: pydantic.PositiveFloat = 2.0
    baseline: bool = True

    @pydantic.root_validator(skip_on_failure=True)
    def channels_given(cls, values):
        if not values.get("channels"):
            raise ValueError("general-channel needs at least one explicit channel")
        return values


class ImperfectEtaSweepConfig(ScenarioConfig):
    scenario: Literal["imperfect-eta-sweep"] = "imperfect-eta-sweep"
    mode: Literal["jump"] = "jump"
    etas: List[pydantic.confloat(gt=0, le=1)] = [0.8, 0.9, 0.99, 1.0]
    dt: pydantic.PositiveFloat = 5e-3
    t_final: pydantic.PositiveFloat = 4.0
    record_stride: pydantic.conint(ge=1) = 10

    @pydantic.validator("etas")
    def at_least_one_eta(cls, v):
        if not v:
            raise ValueError("The sweep needs at least one eta")
        return v


class EncodedGateConfig(ScenarioConfig):
    scenario: Literal["encoded-gate"] = "encoded-gate"
    n_qubits: pydantic.conint(ge=2) = 3
    mode: Literal["jump", "diffusive"] = "jump"
    initial_state: Optional[str] = "00"
    # logical Pauli word generating the gate, e.g. "XI" for Xbar_1 or "XX" for Xbar_1 Xbar_2
    gate: pydantic.constr(regex=r"^[IXYZ]+$") = "XI"
    # rotation exp(-i angle G) spread evenly over t_final
    angle: float = math.pi / 2
    t_final: pydantic.PositiveFloat = 1.0

    @pydantic.root_validator(skip_on_failure=True)
    def gate_covers_logical_qubits(cls, values):
        if len(values["gate"]) != values["n_qubits"] - 1:
            raise ValueError(f"Gate '{values['gate']}' must name one Pauli per logical qubit ({values['n_qubits'] - 1})")
        return values


class PulseVsDrivingConfig(ScenarioConfig):
    scenario: Literal["pulse-vs-driving"] = "pulse-vs-driving"
    mode: Literal["pulse"] = "pulse"
    period: pydantic.PositiveFloat = 0.2
    dt: pydantic.PositiveFloat = 0.01
    t_final: pydantic.PositiveFloat = 2.0
    record_stride: pydantic.conint(ge=1) = 10

    @pydantic.root_validator(skip_on_failure=True)
    def half_period_on_grid(cls, values):
        half = values["period"] / 2 / values["dt"]
        if abs(half - round(half)) > 1e-9 * max(1.0, half) or round(half) < 1:
            raise ValueError(f"period/2 = {values['period'] / 2} must be a whole number of steps of dt = {values['dt']}")
        return values

    def synthesize(self) -> Dict[str, FeedbackScheme]:
        channels = self.resolved_channels()
        return {
            "pulse": synthesize_scheme(channels, "pulse", self.n_qubits, period=self.period),
            "jump": synthesize_scheme(channels, "jump", self.n_qubits),
        }


class LargeGammaLimitConfig(ScenarioConfig):
    scenario: Literal["large-gamma-limit"] = "large-gamma-limit"
    mode: Literal["diffusive"] = "diffusive"
    gammas: List[pydantic.confloat(gt=0)] = [5.0, 10.0, 20.0]
    # computational basis state the comparison starts from; a codeword would make every gamma exact
    physical_state: pydantic.constr(regex=r"^[01]+$") = "01"
    dt: pydantic.PositiveFloat = 1e-4
    t_final: pydantic.PositiveFloat = 1.0
    record_stride: pydantic.conint(ge=1) = 1000

    @pydantic.root_validator(skip_on_failure=True)
    def physical_state_covers_register(cls, values):
        if len(values["physical_state"]) != values["n_qubits"]:
            raise ValueError(f"physical_state must have {values['n_qubits']} bits")
        if values.get("channels") and any(spec.gamma != 0 for spec in values["channels"]):
            raise ValueError("Offsets are set by gammas; leave channel gamma at 0")
        return values

