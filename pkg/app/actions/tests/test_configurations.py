import math
import sys
import types

import numpy as np
import pydantic
import pytest

from app.actions.configurations import (
    EncodedGateConfig,
    GeneralChannelConfig,
    ImperfectEtaSweepConfig,
    LargeGammaLimitConfig,
    NQubitSpontConfig,
    PulseVsDrivingConfig,
    TwoQubitDiffusiveConfig,
    TwoQubitJumpConfig,
)
from app.actions.core import ChannelSpec, ScenarioConfig, describe_actions, discover_actions
from app.qec.operators import Z


class TestChannelSpec:
    def test_defaults_to_spontaneous_emission(self):
        spec = ChannelSpec(qubit=1)
        channel = spec.to_channel()

        assert spec.operator == "spontaneous_emission"
        np.testing.assert_allclose(channel.c, np.array([[0, 2], [0, 0]]))
        assert channel.kappa == 1.0

    def test_matrix_channel(self):
        channel = ChannelSpec(qubit=2, matrix=[[1, 0], [0, -1]], kappa=0.5).to_channel()

        np.testing.assert_allclose(channel.c, Z)
        assert channel.qubit == 2

    @pytest.mark.parametrize(
        "data",
        [
            {"qubit": 0},
            {"qubit": 1, "operator": "H"},
            {"qubit": 1, "matrix": [[1, 0, 0], [0, 1, 0]]},
            {"qubit": 1, "operator": "Z", "matrix": [[1, 0], [0, -1]]},
            {"qubit": 1, "eta": 1.5},
            {"qubit": 1, "kappa": -1},
            {"qubit": 1, "color": "blue"},
        ],
    )
    def test_invalid(self, data):
        with pytest.raises(pydantic.ValidationError):
            ChannelSpec.parse_obj(data)


class TestScenarioConfig:
    def test_defaults(self, two_qubit_jump_config, output_dir):
        assert two_qubit_jump_config.n_logical == 1
        assert two_qubit_jump_config.logical_state_spec == "+"
        assert two_qubit_jump_config.unraveling == "jump"
        assert two_qubit_jump_config.run_dir == output_dir / "two-qubit-jump"

    def test_default_logical_state_on_larger_registers(self):
        config = NQubitSpontConfig(n_qubits=4)
        assert config.logical_state_spec == "+00"

    def test_trajectory_config(self, two_qubit_jump_config):
        cfg = two_qubit_jump_config.trajectory_config(n_traj=3)

        assert cfg.n_steps == 500
        assert cfg.n_traj == 3
        assert cfg.record_stride == 50

    def test_round_trip(self, two_qubit_jump_config):
        assert TwoQubitJumpConfig.parse_raw(two_qubit_jump_config.json()) == two_qubit_jump_config

    @pytest.mark.parametrize(
        "overrides",
        [
            {"extra_field": True},
            {"n_qubits": 3},
            {"mode": "diffusive"},
            {"initial_state": "00"},
            {"initial_state": "q"},
            {"t_final": 0.0005},
            {"channels": [{"qubit": 3}]},
            {"record_stride": 0},
        ],
    )
    def test_invalid_two_qubit_jump(self, two_qubit_jump_config_data, overrides):
        with pytest.raises(pydantic.ValidationError):
            TwoQubitJumpConfig.parse_obj({**two_qubit_jump_config_data, **overrides})

    def test_register_size_limit(self, mocker):
        mocker.patch("app.settings.MAX_QUBITS", 3)
        with pytest.raises(pydantic.ValidationError):
            NQubitSpontConfig(n_qubits=4)

    def test_diffusive_default_channels_use_homodyne_phase(self):
        channels = TwoQubitDiffusiveConfig().resolved_channels()
        assert [ch.phi for ch in channels] == [-math.pi / 2, -math.pi / 2]

    def test_synthesize_keys_by_mode(self):
        assert set(TwoQubitDiffusiveConfig().synthesize()) == {"diffusive"}


class TestNQubitSpontConfig:
    def test_uniform_rates(self):
        assert NQubitSpontConfig(n_qubits=3).rates() == [1.0, 1.0, 1.0]

    def test_explicit_kappas(self):
        channels = NQubitSpontConfig(n_qubits=3, kappas=[0.5, 1.0, 2.0]).resolved_channels()
        assert [ch.kappa for ch in channels] == [0.5, 1.0, 2.0]
        assert [ch.qubit for ch in channels] == [1, 2, 3]

    def test_random_kappas_follow_seed(self):
        first = NQubitSpontConfig(n_qubits=4, random_kappas=True, seed=3).rates()
        second = NQubitSpontConfig(n_qubits=4, random_kappas=True, seed=3).rates()
        other = NQubitSpontConfig(n_qubits=4, random_kappas=True, seed=4).rates()

        assert first == second
        assert first != other
        assert all(0.5 <= k <= 2.0 for k in first)

    @pytest.mark.parametrize(
        "data",
        [
            {"n_qubits": 3, "kappas": [1.0, 1.0]},
            {"n_qubits": 2, "kappas": [1.0, 1.0], "random_kappas": True},
            {"n_qubits": 2, "kappa_range": [2.0, 1.0]},
            {"n_qubits": 2, "channels": [{"qubit": 1}]},
        ],
    )
    def test_invalid(self, data):
        with pytest.raises(pydantic.ValidationError):
            NQubitSpontConfig.parse_obj(data)


class TestScenarioSpecificConfigs:
    def test_general_channel_requires_channels(self):
        with pytest.raises(pydantic.ValidationError):
            GeneralChannelConfig()

    def test_general_channel(self):
        config = GeneralChannelConfig(channels=[{"qubit": 1, "operator": "Z"}, {"qubit": 2, "kappa": 0.3}])
        channels = config.resolved_channels()

        np.testing.assert_allclose(channels[0].c, Z)
        assert channels[1].kappa == 0.3

    def test_eta_sweep_defaults(self):
        config = ImperfectEtaSweepConfig()
        assert config.etas == [0.8, 0.9, 0.99, 1.0]
        assert config.trajectory_config().n_steps == 800

    @pytest.mark.parametrize("etas", [[], [0.0], [1.2]])
    def test_eta_sweep_invalid(self, etas):
        with pytest.raises(pydantic.ValidationError):
            ImperfectEtaSweepConfig(etas=etas)

    def test_encoded_gate_word_covers_logical_qubits(self):
        assert EncodedGateConfig(gate="XZ").gate == "XZ"
        with pytest.raises(pydantic.ValidationError):
            EncodedGateConfig(gate="X")
        with pytest.raises(pydantic.ValidationError):
            EncodedGateConfig(gate="XA")

    def test_pulse_period_on_the_grid(self):
        assert PulseVsDrivingConfig(period=0.2, dt=0.01).period == 0.2
        with pytest.raises(pydantic.ValidationError):
            PulseVsDrivingConfig(period=0.015, dt=0.01, t_final=0.03)

    def test_pulse_synthesizes_both_schemes(self):
        schemes = PulseVsDrivingConfig().synthesize()
        assert set(schemes) == {"pulse", "jump"}
        assert schemes["pulse"].period == 0.2

    def test_large_gamma_physical_state_length(self):
        with pytest.raises(pydantic.ValidationError):
            LargeGammaLimitConfig(physical_state="011")

    def test_large_gamma_rejects_channel_offsets(self):
        with pytest.raises(pydantic.ValidationError):
            LargeGammaLimitConfig(channels=[{"qubit": 1, "gamma": 2.0}])


class TestActionDiscovery:
    def test_every_scenario_is_registered(self):
        handlers = discover_actions(module_name="app.actions.handlers", prefix="action_")
        assert sorted(handlers) == sorted([
            "encoded-gate",
            "general-channel",
            "imperfect-eta-sweep",
            "large-gamma-limit",
            "n-qubit-spont",
            "pulse-vs-driving",
            "two-qubit-diffusive",
            "two-qubit-jump",
        ])

    def test_config_models_come_from_annotations(self):
        handlers = discover_actions(module_name="app.actions.handlers", prefix="action_")

        _, config_model = handlers["large-gamma-limit"]

        assert config_model is LargeGammaLimitConfig
        assert issubclass(config_model, ScenarioConfig)

    def test_descriptions(self):
        descriptions = describe_actions(discover_actions(module_name="app.actions.handlers", prefix="action_"))
        assert descriptions["two-qubit-jump"].startswith("Two qubits")

    def test_unannotated_handler_falls_back_to_base_config(self, monkeypatch):
        async def action_plain_run(action_config):
            return {}

        async def action_typed_run(action_config: TwoQubitJumpConfig):
            return {}

        def helper():
            pass

        module = types.ModuleType("scenario_plugins")
        module.action_plain_run = action_plain_run
        module.action_typed_run = action_typed_run
        module.helper = helper
        monkeypatch.setitem(sys.modules, "scenario_plugins", module)

        handlers = discover_actions(module_name="scenario_plugins", prefix="action_")

        assert sorted(handlers) == ["plain-run", "typed-run"]
        assert handlers["plain-run"] == (action_plain_run, ScenarioConfig)
        assert handlers["typed-run"][1] is TwoQubitJumpConfig
