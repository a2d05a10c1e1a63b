import json
from unittest.mock import AsyncMock

import pytest

from app.actions.configurations import TwoQubitJumpConfig
from app.services.errors import CertificateError, NumericalIntegrityError


@pytest.fixture
def output_dir(tmp_path):
    return tmp_path / "runs"


@pytest.fixture
def mock_publish_event():
    mock_publish_event = AsyncMock()
    mock_publish_event.return_value = {}
    return mock_publish_event


@pytest.fixture
def two_qubit_jump_config_data(output_dir):
    """A short two-qubit jump run writing under a temporary directory"""
    return {
        "scenario": "two-qubit-jump",
        "initial_state": "+",
        "dt": 1e-3,
        "t_final": 0.5,
        "record_stride": 50,
        "output_dir": str(output_dir),
    }


@pytest.fixture
def two_qubit_jump_config(two_qubit_jump_config_data):
    return TwoQubitJumpConfig.parse_obj(two_qubit_jump_config_data)


@pytest.fixture
def write_config(tmp_path):
    """Factory writing a scenario mapping to a JSON file and returning its path"""
    def _write(data, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path
    return _write


@pytest.fixture
def mock_action_handlers():
    mock_two_qubit_jump_handler = AsyncMock()
    mock_two_qubit_jump_handler.return_value = {"final_fidelity": 1.0}
    return {
        "two-qubit-jump": (mock_two_qubit_jump_handler, TwoQubitJumpConfig),
    }


@pytest.fixture(params=["certificate", "numerical", "generic"])
def failing_action_handlers(request):
    """Handlers raising each family of errors, with the exit code the runner must map them to"""
    errors = {
        "certificate": (CertificateError("Scheme failed its certificates", failures=["kl_condition"]), 3),
        "numerical": (NumericalIntegrityError("negative eigenvalue", step=12, value=-0.2), 4),
        "generic": (RuntimeError("boom"), 1),
    }
    error, exit_code = errors[request.param]
    handler = AsyncMock(side_effect=error)
    return {"two-qubit-jump": (handler, TwoQubitJumpConfig)}, exit_code
