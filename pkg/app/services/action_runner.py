import asyncio
import logging
import time
import traceback

import pydantic

from app import settings
from app.actions import action_handlers
from app.actions.utils import certify
from app.services.activity_logger import publish_event
from app.services.errors import (
    CertificateError,
    ConfigurationError,
    DimensionMismatchError,
    InvalidStabilizerError,
    ScenarioNotFound,
    SchemeModeError,
)
from app.services.events import ScenarioExecutionFailed, ScenarioFailed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = ConfigurationError.exit_code

# value errors raised while building a scheme from a config that asks for something impossible
CONFIG_VALUE_ERRORS = (DimensionMismatchError, InvalidStabilizerError, SchemeModeError)


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, (pydantic.ValidationError, *CONFIG_VALUE_ERRORS)):
        return EXIT_CONFIG_ERROR
    return getattr(exc, "exit_code", EXIT_FAILURE)


async def _handle_error(exc: Exception, scenario: str, config_data=None, exit_code: int = None):
    """
    Logs the error, publishes a failure event for the activity log and
    returns a result mapping with the exit code and error details.
    """
    exit_code = exit_code if exit_code is not None else exit_code_for(exc)
    message = f"Error in scenario '{scenario}': {type(exc).__name__}: {exc}"
    logger.exception(message)

    error_details = {
        "scenario": scenario,
        "config_data": config_data or {},
        "error": message,
        "exit_code": exit_code,
        "error_traceback": traceback.format_exc(),
    }
    if failures := getattr(exc, "failures", None):
        error_details["failures"] = failures
    if (step := getattr(exc, "step", None)) is not None:
        error_details.update({"step": step, "value": getattr(exc, "value", None)})

    await publish_event(
        event=ScenarioFailed(
            payload=ScenarioExecutionFailed(
                scenario=scenario,
                config_data=config_data or {},
                error=message,
                exit_code=exit_code,
                error_traceback=error_details["error_traceback"],
            )
        ),
    )
    return {"exit_code": exit_code, "detail": error_details}


def resolve_scenario(config_data: dict, config_overrides: dict = None):
    """Handler and parsed config for a raw scenario mapping; raises ScenarioNotFound or ValidationError."""
    config_data = dict(config_data or {})
    if config_overrides:
        config_data.update(config_overrides)
    scenario = config_data.get("scenario")
    try:  # There must be one handler implemented for the scenario
        handler, config_model = action_handlers[scenario]
    except KeyError:
        raise ScenarioNotFound(f"Scenario '{scenario}' is not supported. Known scenarios: {sorted(action_handlers)}")
    return handler, config_model.parse_obj(config_data)


async def execute_action(config_data: dict, config_overrides: dict = None):
    scenario = (config_data or {}).get("scenario", "<missing>")
    logger.info(f"Executing scenario '{scenario}'...")

    try:  # Find the handler and parse the scenario configuration
        handler, parsed_config = resolve_scenario(config_data, config_overrides)
    except (ScenarioNotFound, pydantic.ValidationError) as e:
        return await _handle_error(e, scenario, config_data, EXIT_CONFIG_ERROR)

    try:  # Execute the scenario handler with a timeout
        start_time = time.monotonic()
        result = await asyncio.wait_for(
            handler(action_config=parsed_config),
            timeout=settings.MAX_SCENARIO_EXECUTION_TIME
        )
    except asyncio.TimeoutError:
        return await _handle_error(
            asyncio.TimeoutError(f"Scenario '{scenario}' timed out"),
            scenario, parsed_config.dict(), EXIT_FAILURE
        )
    except Exception as e:
        return await _handle_error(e, scenario, parsed_config.dict())

    # Success. Log the execution time and return the result
    execution_time = time.monotonic() - start_time
    logger.info(f"Scenario '{scenario}' completed in {execution_time:.2f} seconds.")
    return {"exit_code": EXIT_OK, "result": result}


async def execute_certification(config_data: dict, config_overrides: dict = None):
    """Synthesis and certificates only; exit code 3 when any check fails."""
    scenario = (config_data or {}).get("scenario", "<missing>")
    try:
        _, parsed_config = resolve_scenario(config_data, config_overrides)
        _, reports = certify(parsed_config)
    except Exception as e:
        return await _handle_error(e, scenario, config_data)
    ok = all(report.ok for report in reports.values())
    return {
        "exit_code": EXIT_OK if ok else CertificateError.exit_code,
        "result": {
            "scenario": scenario,
            "certificates_ok": ok,
            "certificates": {label: {"ok": report.ok, **report.dict()} for label, report in reports.items()},
        },
    }
