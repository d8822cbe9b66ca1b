"""Pytest fixtures and plugins."""
from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from _pytest.config import Config


# pylint: disable=unused-argument
def pytest_ignore_collect(collection_path: Any, config: Config) -> bool:
    """Only collect functional tests when asked to."""
    return not config.option.functional
