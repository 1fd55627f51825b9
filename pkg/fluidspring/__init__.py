"""fluidspring - compressible fluid in a spring-driven container."""

from importlib.metadata import (
    PackageNotFoundError,
    version,
)

__all__ = ["__version__"]

try:
    __version__ = version("fluidspring")
except PackageNotFoundError:
    __version__ = "0.0.0"
