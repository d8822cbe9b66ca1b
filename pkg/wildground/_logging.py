"""Logger class and logging configuration."""
from __future__ import annotations

import logging
import sys
from enum import IntEnum
from typing import Any, Optional, Union


class LogLevels(IntEnum):
    """All available log levels."""

    NOTSET = 0
    DEBUG = 10
    VERBOSE = 15
    INFO = 20
    NOTICE = 25
    WARNING = 30
    ERROR = 40
    CRITICAL = 50

    @classmethod
    def from_verbosity(cls, verbosity: int) -> LogLevels:
        """Map a count of ``-v`` flags to a log level."""
        if verbosity <= 0:
            return cls.INFO
        if verbosity == 1:
            return cls.VERBOSE
        return cls.DEBUG


logging.addLevelName(LogLevels.VERBOSE, LogLevels.VERBOSE.name)
logging.addLevelName(LogLevels.NOTICE, LogLevels.NOTICE.name)


class WildgroundLogger(logging.Logger):
    """Extend built-in logger with additional levels."""

    def verbose(self, msg: Union[Exception, str], *args: Any, **kwargs: Any) -> None:
        """Log 'msg % args' with severity `VERBOSE`.

        Args:
            msg: String template or exception to use for the log record.

        """
        if self.isEnabledFor(LogLevels.VERBOSE):
            self._log(LogLevels.VERBOSE, msg, args, **kwargs)

    def notice(self, msg: Union[Exception, str], *args: Any, **kwargs: Any) -> None:
        """Log 'msg % args' with severity `NOTICE`.

        Args:
            msg: String template or exception to use for the log record.

        """
        if self.isEnabledFor(LogLevels.NOTICE):
            self._log(LogLevels.NOTICE, msg, args, **kwargs)


def setup_logging(verbosity: int = 0, *, stream: Optional[Any] = None) -> None:
    """Configure the ``wildground`` logger hierarchy for command line use.

    Args:
        verbosity: Number of ``-v`` flags given on the command line.
        stream: Stream for the handler (default ``sys.stderr``).

    """
    level = LogLevels.from_verbosity(verbosity)
    root = logging.getLogger("wildground")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(
        logging.Formatter(
            "[%(asctime)s] %(levelname)s %(name)s: %(message)s"
            if level < LogLevels.INFO
            else "%(levelname)s: %(message)s"
        )
    )
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False
