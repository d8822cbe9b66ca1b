"""Identify the source tree a run was produced with."""
from __future__ import annotations

import logging
import subprocess
from pathlib import Path
from typing import TYPE_CHECKING, Optional, cast

from .. import __version__
from ..mixins import CliInterfaceMixin

if TYPE_CHECKING:
    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))


class GitDescribe(CliInterfaceMixin):
    """``git describe`` of a working tree."""

    EXECUTABLE = "git"

    def __init__(self, cwd: Optional[Path] = None) -> None:
        """Instantiate class.

        Args:
            cwd: Directory inside the working tree (default: this package).

        """
        self.cwd = cwd or Path(__file__).parent

    def describe(self) -> Optional[str]:
        """Tag, commit distance and dirty marker, or ``None`` outside a repository."""
        if not self.found_in_path():
            return None
        try:
            output = self._run_command(
                self.generate_command("describe", always=True, dirty=True, tags=True)
            )
        except (OSError, subprocess.CalledProcessError) as exc:
            LOGGER.debug("git describe failed: %s", exc)
            return None
        return output or None


def build_id(cwd: Optional[Path] = None) -> str:
    """``git describe`` output, falling back to the installed package version."""
    return GitDescribe(cwd).describe() or f"wildground-{__version__}"
