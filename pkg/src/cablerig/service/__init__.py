"""HTTP bridge: a FastAPI app exposing one live rig session to UI clients."""

from .app import create_app

__all__ = ["create_app"]
