"""FastAPI service wrapping the core package."""

from .app import create_app  # noqa: F401
from .store import DataStore  # noqa: F401
