"""Service layer: pydantic schemas, shared runners, FastAPI app."""

from . import models, runners

__all__ = ["models", "runners"]
