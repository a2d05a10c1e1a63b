import asyncio

import pytest

from app.actions.configurations import TwoQubitJumpConfig
from app.services.action_runner import (
    EXIT_CONFIG_ERROR,
    EXIT_FAILURE,
    EXIT_OK,
    execute_action,
    execute_certification,
    exit_code_for,
    resolve_scenario,
)
from app.services.errors import (
    CertificateError,
    ConfigurationNotFound,
    InvalidStabilizerError,
    NumericalIntegrityError,
    ScenarioNotFound,
)
from app.services.events import ScenarioFailed


@pytest.fixture
def patched_runner(mocker, mock_publish_event, mock_action_handlers):
    mocker.patch("app.services.action_runner.action_handlers", mock_action_handlers)
    mocker.patch("app.services.activity_logger.publish_event", mock_publish_event)
    mocker.patch("app.services.action_runner.publish_event", mock_publish_event)
    return mock_action_handlers


@pytest.mark.parametrize(
    "error,expected",
    [
        (CertificateError("bad"), 3),
        (NumericalIntegrityError("negative trace", step=3, value=-1.0), 4),
        (ConfigurationNotFound("missing"), 2),
        (InvalidStabilizerError("not hermitian"), 2),
        (RuntimeError("boom"), 1),
    ],
)
def test_exit_code_for(error, expected):
    assert exit_code_for(error) == expected


class TestResolveScenario:
    def test_resolves_handler_and_parses_config(self, patched_runner, two_qubit_jump_config_data):
        handler, config = resolve_scenario(two_qubit_jump_config_data)

        assert handler is patched_runner["two-qubit-jump"][0]
        assert config.t_final == 0.5
        assert config.mode == "jump"

    def test_overrides_win(self, patched_runner, two_qubit_jump_config_data):
        _, config = resolve_scenario(two_qubit_jump_config_data, {"seed": 7, "t_final": 0.25})

        assert config.seed == 7
        assert config.t_final == 0.25
        # the caller's mapping is left alone
        assert two_qubit_jump_config_data["t_final"] == 0.5

    def test_unknown_scenario(self, patched_runner):
        with pytest.raises(ScenarioNotFound):
            resolve_scenario({"scenario": "three-body-problem"})


class TestExecuteAction:
    @pytest.mark.asyncio
    async def test_success(self, patched_runner, two_qubit_jump_config_data):
        response = await execute_action(two_qubit_jump_config_data)

        assert response == {"exit_code": EXIT_OK, "result": {"final_fidelity": 1.0}}
        handler, config_model = patched_runner["two-qubit-jump"]
        assert handler.called
        assert isinstance(handler.call_args.kwargs["action_config"], config_model)

    @pytest.mark.asyncio
    async def test_with_config_overrides(self, patched_runner, two_qubit_jump_config_data):
        response = await execute_action(two_qubit_jump_config_data, config_overrides={"seed": 11})

        assert response["exit_code"] == EXIT_OK
        handler, _ = patched_runner["two-qubit-jump"]
        assert handler.call_args.kwargs["action_config"].seed == 11

    @pytest.mark.asyncio
    async def test_unknown_scenario(self, patched_runner, mock_publish_event):
        response = await execute_action({"scenario": "three-body-problem"})

        assert response["exit_code"] == EXIT_CONFIG_ERROR
        assert "three-body-problem" in response["detail"]["error"]
        assert isinstance(mock_publish_event.call_args.kwargs["event"], ScenarioFailed)

    @pytest.mark.asyncio
    @pytest.mark.parametrize(
        "bad_field",
        [
            {"unknown_key": 1},
            {"dt": -1.0},
            {"initial_state": "+0"},
            {"t_final": 0.00125},
        ],
    )
    async def test_invalid_config(self, patched_runner, two_qubit_jump_config_data, bad_field):
        response = await execute_action({**two_qubit_jump_config_data, **bad_field})

        assert response["exit_code"] == EXIT_CONFIG_ERROR
        handler, _ = patched_runner["two-qubit-jump"]
        assert not handler.called

    @pytest.mark.asyncio
    async def test_handler_errors_map_to_exit_codes(
            self, mocker, mock_publish_event, failing_action_handlers, two_qubit_jump_config_data
    ):
        handlers, expected_exit_code = failing_action_handlers
        mocker.patch("app.services.action_runner.action_handlers", handlers)
        mocker.patch("app.services.action_runner.publish_event", mock_publish_event)

        response = await execute_action(two_qubit_jump_config_data)

        assert response["exit_code"] == expected_exit_code
        failed = mock_publish_event.call_args.kwargs["event"]
        assert failed.payload.exit_code == expected_exit_code
        assert failed.payload.error_traceback

    @pytest.mark.asyncio
    async def test_error_detail_carries_failures_and_step(
            self, mocker, mock_publish_event, two_qubit_jump_config_data
    ):
        handler = mocker.AsyncMock(side_effect=NumericalIntegrityError("trace drifted", step=42, value=1.5))
        mocker.patch("app.services.action_runner.action_handlers", {"two-qubit-jump": (handler, TwoQubitJumpConfig)})
        mocker.patch("app.services.action_runner.publish_event", mock_publish_event)

        response = await execute_action(two_qubit_jump_config_data)

        assert response["exit_code"] == NumericalIntegrityError.exit_code
        assert response["detail"]["step"] == 42
        assert response["detail"]["value"] == 1.5

    @pytest.mark.asyncio
    async def test_timeout(self, mocker, mock_publish_event, two_qubit_jump_config_data):
        async def slow_handler(action_config):
            await asyncio.sleep(5)

        mocker.patch("app.services.action_runner.action_handlers", {"two-qubit-jump": (slow_handler, TwoQubitJumpConfig)})
        mocker.patch("app.services.action_runner.publish_event", mock_publish_event)
        mocker.patch("app.settings.MAX_SCENARIO_EXECUTION_TIME", 0.01)

        response = await execute_action(two_qubit_jump_config_data)

        assert response["exit_code"] == EXIT_FAILURE
        assert "timed out" in response["detail"]["error"]


class TestExecuteCertification:
    @pytest.mark.asyncio
    async def test_two_qubit_jump_certifies(self, mocker, mock_publish_event, two_qubit_jump_config_data):
        mocker.patch("app.services.action_runner.publish_event", mock_publish_event)

        response = await execute_certification(two_qubit_jump_config_data)

        assert response["exit_code"] == EXIT_OK
        assert response["result"]["certificates_ok"] is True
        assert set(response["result"]["certificates"]) == {"jump"}
        assert not mock_publish_event.called

    @pytest.mark.asyncio
    async def test_failed_certificate_exits_with_certificate_code(
            self, mocker, mock_publish_event, two_qubit_jump_config_data
    ):
        report = mocker.MagicMock()
        report.ok = False
        report.dict.return_value = {"checks": []}
        mocker.patch("app.services.action_runner.certify", return_value=({}, {"jump": report}))
        mocker.patch("app.services.action_runner.publish_event", mock_publish_event)

        response = await execute_certification(two_qubit_jump_config_data)

        assert response["exit_code"] == CertificateError.exit_code
        assert response["result"]["certificates_ok"] is False

    @pytest.mark.asyncio
    async def test_invalid_config(self, mocker, mock_publish_event):
        mocker.patch("app.services.action_runner.publish_event", mock_publish_event)

        response = await execute_certification({"scenario": "two-qubit-jump", "n_qubits": 3})

        assert response["exit_code"] == EXIT_CONFIG_ERROR
