"""Request bodies and error translation shared by the API routers."""

from collections.abc import Iterator
from contextlib import contextmanager
from typing import Literal

from fastapi import HTTPException
from pydantic import BaseModel, Field

from server.services.dsl import parse_model
from server.services.errors import DiagnosticError, SchemaViolation, TmError
from server.services.events import EventOverlay, parse_overlay
from server.services.model import StaticModel
from server.services.schema import from_json


class ModelSource(BaseModel):
  """A static model as `.tm` text or `.tm.json`."""

  source: str = Field(..., description='Model text')
  format: Literal['tm', 'json'] = Field(default='tm', description="'tm' or 'json'")


class OverlaySource(ModelSource):
  """A static model plus the `.ev` text of an overlay on it."""

  overlay: str = Field(..., description='Overlay text')


@contextmanager
def tm_errors() -> Iterator[None]:
  """Turn TmErrors raised in the block into HTTP errors."""
  try:
    yield
  except DiagnosticError as e:
    detail = [d.model_dump() for d in e.diagnostics]
    raise HTTPException(status_code=422, detail=detail) from e
  except SchemaViolation as e:
    detail = {'pointer': e.pointer, 'message': e.message}
    raise HTTPException(status_code=422, detail=detail) from e
  except TmError as e:
    raise HTTPException(status_code=400, detail=f'{type(e).__name__}: {e}') from e


def load_model(body: ModelSource) -> StaticModel:
  """Parse the request's model in its declared format."""
  if body.format == 'json':
    return from_json(body.source)
  return parse_model(body.source, file='<model>')


def load_overlay(text: str, model: StaticModel) -> EventOverlay:
  """Parse overlay text against an already-parsed model."""
  return parse_overlay(text, model, file='<overlay>')
