import importlib
import inspect
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pydantic

from app import settings
from app.actions.utils import CHANNEL_OPERATORS, channel_matrix, split_logical_state
from app.qec.dynamics import TrajectoryConfig
from app.qec.synthesis import MODES, ErrorChannel, FeedbackScheme, synthesize_scheme

# one entry of a 2x2 channel matrix: a real number or [re, im]
MatrixEntry = Union[float, Tuple[float, float]]


class ChannelSpec(pydantic.BaseModel):
    qubit: pydantic.conint(ge=1)
    operator: Optional[str] = None
    matrix: Optional[List[List[MatrixEntry]]] = None
    kappa: pydantic.confloat(ge=0) = 1.0
    phi: float = 0.0
    gamma: pydantic.confloat(ge=0) = 0.0
    eta: pydantic.confloat(ge=0, le=1) = 1.0

    class Config:
        extra = "forbid"

    @pydantic.validator("operator")
    def known_operator(cls, v):
        if v is not None and v not in CHANNEL_OPERATORS:
            raise ValueError(f"Unknown operator '{v}', expected one of {sorted(CHANNEL_OPERATORS)} or a matrix")
        return v

    @pydantic.validator("matrix")
    def two_by_two(cls, v):
        if v is not None and (len(v) != 2 or any(len(row) != 2 for row in v)):
            raise ValueError("Channel matrix must be 2x2")
        return v

    @pydantic.root_validator(skip_on_failure=True)
    def operator_or_matrix(cls, values):
        if values.get("operator") is not None and values.get("matrix") is not None:
            raise ValueError("Give either an operator name or a matrix, not both")
        if values.get("operator") is None and values.get("matrix") is None:
            values["operator"] = "spontaneous_emission"
        return values

    def to_channel(self) -> ErrorChannel:
        c = channel_matrix(self.operator, self.matrix)
        return ErrorChannel(qubit=self.qubit, c=c, kappa=self.kappa, phi=self.phi, gamma=self.gamma, eta=self.eta)


class ScenarioConfig(pydantic.BaseModel):
    """Common fields of every scenario; units are 1/kappa_ref for times and kappa_ref for rates."""
    scenario: str
    n_qubits: pydantic.conint(ge=2) = 2
    mode: str = "jump"
    channels: Optional[List[ChannelSpec]] = None
    # one symbol of 0, 1, +, -, i, -i per logical qubit
    initial_state: Optional[str] = None
    dt: pydantic.PositiveFloat = 1e-3
    t_final: pydantic.PositiveFloat = 5.0
    n_traj: pydantic.conint(ge=0) = 0
    seed: int = 0
    record_stride: pydantic.conint(ge=1) = 100
    output_dir: Optional[str] = None

    class Config:
        extra = "forbid"

    @pydantic.validator("n_qubits")
    def register_size(cls, v):
        if v > settings.MAX_QUBITS:
            raise ValueError(f"At most {settings.MAX_QUBITS} qubits are supported, got {v}")
        return v

    @pydantic.validator("mode")
    def known_mode(cls, v):
        if v not in MODES:
            raise ValueError(f"Unknown mode '{v}', expected one of {MODES}")
        return v

    @pydantic.root_validator(skip_on_failure=True)
    def consistent_layout(cls, values):
        n = values["n_qubits"]
        for spec in values.get("channels") or []:
            if spec.qubit > n:
                raise ValueError(f"Channel on qubit {spec.qubit} is outside the {n}-qubit register")
        if values.get("initial_state") is not None:
            symbols = split_logical_state(values["initial_state"])
            if len(symbols) != n - 1:
                raise ValueError(
                    f"Initial state '{values['initial_state']}' names {len(symbols)} logical qubits, "
                    f"the code has {n - 1}"
                )
        try:
            TrajectoryConfig(dt=values["dt"], t_final=values["t_final"])
        except pydantic.ValidationError as e:
            raise ValueError(str(e.errors()[0]["msg"]))
        return values

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir or settings.OUTPUT_DIR) / self.scenario

    @property
    def n_logical(self) -> int:
        return self.n_qubits - 1

    @property
    def logical_state_spec(self) -> str:
        return self.initial_state or "+" + "0" * (self.n_logical - 1)

    @property
    def unraveling(self) -> str:
        return "diffusive" if self.mode == "diffusive" else "jump"

    def default_channels(self) -> List[ErrorChannel]:
        # homodyne phase -pi/2 selects X^n in the diffusive limit
        phi = -math.pi / 2 if self.mode == "diffusive" else 0.0
        return [ErrorChannel.spontaneous_emission(q, phi=phi) for q in range(1, self.n_qubits + 1)]

    def resolved_channels(self) -> List[ErrorChannel]:
        if self.channels is None:
            return self.default_channels()
        return [spec.to_channel() for spec in self.channels]

    def trajectory_config(self, **overrides) -> TrajectoryConfig:
        values = dict(
            dt=self.dt, t_final=self.t_final, seed=self.seed, unraveling=self.unraveling,
            n_traj=self.n_traj, record_stride=self.record_stride,
        )
        values.update(overrides)
        return TrajectoryConfig(**values)

    def synthesize(self) -> Dict[str, FeedbackScheme]:
        """Schemes the scenario certifies before any dynamics, keyed by label."""
        scheme = synthesize_scheme(
            self.resolved_channels(), self.mode, self.n_qubits, period=getattr(self, "period", None)
        )
        return {self.mode: scheme}


def discover_actions(module_name, prefix):
    action_handlers = {}

    # Import the module using importlib
    module = importlib.import_module(module_name)
    all_members = inspect.getmembers(module)

    # Handlers named action_two_qubit_jump register as "two-qubit-jump"
    for name, func in all_members:
        if name.startswith(prefix) and inspect.isfunction(func):
            key = name[len(prefix):].replace("_", "-")
            parameter = inspect.signature(func).parameters.get("action_config")
            if parameter is not None and parameter.annotation != inspect.Parameter.empty:
                config_model = parameter.annotation
            else:
                config_model = ScenarioConfig
            action_handlers[key] = (func, config_model)

    return action_handlers


def describe_actions(action_handlers) -> Dict[str, str]:
    """First docstring line of each handler, keyed by scenario name."""
    descriptions = {}
    for key, (func, _) in sorted(action_handlers.items()):
        doc = inspect.getdoc(func) or ""
        descriptions[key] = doc.splitlines()[0] if doc else ""
    return descriptions
