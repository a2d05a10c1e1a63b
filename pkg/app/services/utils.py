import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np

from app import settings
from app.services.errors import ConfigurationNotFound, ConfigurationValidationError


def format_significant(value, digits: int = None) -> str:
    """Fixed-precision text for CSV cells, so identical runs give identical bytes."""
    digits = digits or settings.CSV_SIGNIFICANT_DIGITS
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return str(value)
    return format(value, f".{digits}g")


def to_jsonable(obj: Any) -> Any:
    """Plain-JSON view of results; complex arrays become {"real": ..., "imag": ...}."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"real": obj.real.tolist(), "imag": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return {"real": float(obj.real), "imag": float(obj.imag)}
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "dict") and callable(obj.dict):
        return to_jsonable(obj.dict())
    return obj


def dumps(obj: Any, **kwargs) -> str:
    return json.dumps(to_jsonable(obj), default=str, **kwargs)


def load_scenario_file(path: Union[str, Path]) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationNotFound(f"Scenario configuration '{path}' does not exist")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigurationValidationError(f"Scenario configuration '{path}' is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigurationValidationError(f"Scenario configuration '{path}' must be a JSON object")
    return data
