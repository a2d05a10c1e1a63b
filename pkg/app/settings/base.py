import logging.config
import sys
from environs import Env

env = Env()
env.read_env()

LOGGING_LEVEL = env.str("LOGGING_LEVEL", "INFO")
LOGGING_FORMAT = env.str("LOGGING_FORMAT", "text")  # text | json

DEFAULT_LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "text": {
            "format": "%(asctime)s %(levelname)s [%(name)s] %(message)s",
        },
        "json": {
            "()": "pythonjsonlogger.jsonlogger.JsonFormatter",
            "format": "%(asctime)s %(levelname)s %(name)s %(message)s",
        },
    },
    "handlers": {
        "console": {
            "level": LOGGING_LEVEL,
            "class": "logging.StreamHandler",
            "formatter": "json" if LOGGING_FORMAT == "json" else "text",
            # stdout is reserved for command output
            "stream": sys.stderr,
        },
    },
    "loggers": {
        "": {
            "handlers": ["console"],
            "level": LOGGING_LEVEL,
        },
    },
}
logging.config.dictConfig(DEFAULT_LOGGING)

# Where scenario runs write manifests, time series and summaries
OUTPUT_DIR = env.str("OUTPUT_DIR", "runs")
CSV_SIGNIFICANT_DIGITS = env.int("CSV_SIGNIFICANT_DIGITS", 17)

MAX_SCENARIO_EXECUTION_TIME = env.int("MAX_SCENARIO_EXECUTION_TIME", 60 * 30)
ENSEMBLE_MAX_WORKERS = env.int("ENSEMBLE_MAX_WORKERS", 4)
MAX_QUBITS = env.int("MAX_QUBITS", 8)
