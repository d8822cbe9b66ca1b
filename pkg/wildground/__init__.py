"""3D visual grounding in dynamic scenes from point clouds, images and language."""
import logging
from importlib.metadata import PackageNotFoundError, version

from ._logging import WildgroundLogger

# must run before any submodule creates its module level logger
logging.setLoggerClass(WildgroundLogger)

__all__ = ["__version__"]

try:  # cov: ignore
    __version__ = version(__name__)
except PackageNotFoundError:  # cov: ignore
    # package is not installed
    __version__ = "0.0.0"
