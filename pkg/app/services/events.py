from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Optional
from uuid import UUID, uuid4

from pydantic import BaseModel, Field


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class ScenarioExecutionStarted(BaseModel):
    scenario: str
    config_data: Dict[str, Any] = Field(default_factory=dict)


class ScenarioExecutionComplete(BaseModel):
    scenario: str
    config_data: Dict[str, Any] = Field(default_factory=dict)
    result: Optional[Dict[str, Any]] = None


class ScenarioExecutionFailed(BaseModel):
    scenario: str
    config_data: Dict[str, Any] = Field(default_factory=dict)
    error: str
    exit_code: Optional[int] = None
    error_traceback: Optional[str] = None


class CustomActivityLog(BaseModel):
    scenario: str
    title: str
    level: LogLevel = LogLevel.INFO
    config_data: Dict[str, Any] = Field(default_factory=dict)
    data: Optional[Dict[str, Any]] = None


class SystemEventBaseModel(BaseModel):
    event_id: UUID = Field(default_factory=uuid4)
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    schema_version: str = "v1"
    event_type: str
    payload: BaseModel

    @property
    def scenario(self) -> str:
        return self.payload.scenario


class ScenarioStarted(SystemEventBaseModel):
    event_type: str = "ScenarioStarted"
    payload: ScenarioExecutionStarted


class ScenarioComplete(SystemEventBaseModel):
    event_type: str = "ScenarioComplete"
    payload: ScenarioExecutionComplete


class ScenarioFailed(SystemEventBaseModel):
    event_type: str = "ScenarioFailed"
    payload: ScenarioExecutionFailed


class ScenarioCustomLog(SystemEventBaseModel):
    event_type: str = "ScenarioCustomLog"
    payload: CustomActivityLog
