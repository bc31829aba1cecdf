"""Service layer: request/response schemas, handlers, and the HTTP app.

The CLI calls the same handlers in process; the FastAPI app exposes them
over HTTP for long-running or multi-client use.
"""

from .app import create_app

__all__ = ["create_app"]
