from .app import ServiceHandle, create_app, serve_api
from .sessions import SessionStore, apply_edit

__all__ = ["ServiceHandle", "create_app", "serve_api", "SessionStore", "apply_edit"]
