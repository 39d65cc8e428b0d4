from .app import create_app
from .engine import SessionEngine

__all__ = ["create_app", "SessionEngine"]
