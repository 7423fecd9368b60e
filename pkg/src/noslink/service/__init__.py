"""FastAPI service wrapping the simulation toolkit."""

from .app import create_app

__all__ = ["create_app"]
