import json
import logging
from functools import wraps
from pathlib import Path
from typing import Optional, Union

from app.services.events import (
    CustomActivityLog,
    ScenarioComplete,
    ScenarioCustomLog,
    ScenarioExecutionComplete,
    ScenarioExecutionFailed,
    ScenarioExecutionStarted,
    ScenarioFailed,
    ScenarioStarted,
    SystemEventBaseModel,
)
from app.services.utils import to_jsonable

logger = logging.getLogger(__name__)

EVENTS_FILE = "events.jsonl"


def scenario_id_from_handler(name: str) -> str:
    return name.replace("action_", "", 1).replace("_", "-")


# Publish events as structured logs, and into the run directory when there is one
async def publish_event(event: SystemEventBaseModel, run_dir: Optional[Union[str, Path]] = None):
    payload = json.loads(event.json())
    logger.info(f"{event.event_type}: scenario '{event.scenario}'", extra={"event": payload})
    if run_dir is not None:
        path = Path(run_dir) / EVENTS_FILE
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a") as f:
                f.write(json.dumps(payload, default=str) + "\n")
        except OSError as e:
            # losing an event never fails the run
            logger.exception(f"Error writing event {event.event_type} to {path}: {e}")
    return payload


async def log_scenario_activity(
        scenario: str, title: str, level="INFO", config_data: dict = None, data: dict = None, run_dir=None
):
    """
        Helper to record a custom activity entry for a scenario run.
        :param scenario: name of the scenario being executed
        :param title: A human-readable string describing the activity
        :param level: The level of the log, e.g. DEBUG, INFO, WARNING, ERROR
        :param data: Any extra data to be logged as a dict
        :param run_dir: run directory whose events.jsonl receives the entry
        :return: the published payload
        """
    logger.debug(f"Logging custom activity: {title}. Scenario: {scenario}.")
    return await publish_event(
        event=ScenarioCustomLog(
            payload=CustomActivityLog(
                scenario=scenario,
                title=title,
                level=level,
                config_data=config_data or {},
                data=to_jsonable(data) if data is not None else None,
            )
        ),
        run_dir=run_dir,
    )


def activity_logger(on_start=True, on_completion=True, on_error=True):
    def decorator(func):
        @wraps(func)
        async def wrapper(*args, **kwargs):
            scenario = scenario_id_from_handler(func.__name__)
            action_config = kwargs.get("action_config")
            config_data = json.loads(action_config.json()) if action_config else {}
            run_dir = getattr(action_config, "run_dir", None)
            if on_start:
                await publish_event(
                    event=ScenarioStarted(
                        payload=ScenarioExecutionStarted(scenario=scenario, config_data=config_data)
                    ),
                    run_dir=run_dir,
                )
            try:
                result = await func(*args, **kwargs)
            except Exception as e:
                if on_error:
                    await publish_event(
                        event=ScenarioFailed(
                            payload=ScenarioExecutionFailed(
                                scenario=scenario,
                                config_data=config_data,
                                error=str(e),
                                exit_code=getattr(e, "exit_code", None),
                            )
                        ),
                        run_dir=run_dir,
                    )
                raise e
            else:
                if on_completion:
                    await publish_event(
                        event=ScenarioComplete(
                            payload=ScenarioExecutionComplete(
                                scenario=scenario,
                                config_data=config_data,
                                result=to_jsonable(result),
                            )
                        ),
                        run_dir=run_dir,
                    )
                return result
        return wrapper
    return decorator
