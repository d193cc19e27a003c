"""Logging configuration for the qgsp entry points.

Library modules only create loggers. Handlers are installed here, once per process; sweep
workers reach it through Celery's ``setup_logging`` signal or the local pool initializer in
``modules.sweeps.tasks``. Logs always go to stderr.
"""

import logging
import sys

from pythonjsonlogger import jsonlogger

PLAIN_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(level: str = "INFO", json_format: bool = False) -> None:
    """Install a single stderr handler on the root logger.

    Args:
        level: Log level name
        json_format: Emit structured JSON records instead of plain text
    """
    handler = logging.StreamHandler(sys.stderr)
    if json_format:
        formatter = jsonlogger.JsonFormatter('%(asctime)s %(name)s %(levelname)s %(message)s')
        handler.setFormatter(formatter)
    else:
        handler.setFormatter(logging.Formatter(PLAIN_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level.upper())
