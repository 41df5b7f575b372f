"""Static model endpoints: validation, transforms, JSON interchange and rendering."""

from typing import Literal

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from server.routers.common import ModelSource, load_model, load_overlay, tm_errors
from server.services.dsl import print_model
from server.services.events import infer_behavior
from server.services.render import RenderOptions, render
from server.services.schema import WireModel, to_wire
from server.services.validator import ValidationReport, elaborate, simplify, validate

router = APIRouter()


class CheckResponse(BaseModel):
  """Validation outcome for one model."""

  model: str
  report: ValidationReport


class ModelText(BaseModel):
  """A model in canonical `.tm` form."""

  name: str
  simplified: bool
  source: str


class RenderRequest(ModelSource):
  """What to draw: the model alone, or with an overlay for the event views."""

  overlay: str | None = Field(default=None, description='Overlay text, for overlay/behavior views')
  view: Literal['static', 'overlay', 'behavior'] = 'static'
  show_labels: bool = False
  simplified: bool = False
  declared: bool = Field(default=False, description='Draw the declared chronology')


class RenderResponse(BaseModel):
  """Rendered DOT text."""

  dot: str


@router.post('/check', response_model=CheckResponse)
async def check_model(body: ModelSource):
  """Validate a model; simplified models skip the machine-boundary checks."""
  with tm_errors():
    model = load_model(body)
    report = validate(model, suspend_boundary=model.simplified)
    return CheckResponse(model=model.name, report=report)


@router.post('/simplify', response_model=ModelText)
async def simplify_model(body: ModelSource):
  """Contract boundary chains and return the canonical text."""
  with tm_errors():
    result = simplify(load_model(body))
    return ModelText(name=result.name, simplified=result.simplified, source=print_model(result))


@router.post('/elaborate', response_model=ModelText)
async def elaborate_model(body: ModelSource):
  """Expand a simplified model back into full boundary chains."""
  with tm_errors():
    result = elaborate(load_model(body))
    return ModelText(name=result.name, simplified=result.simplified, source=print_model(result))


@router.post('/json', response_model=WireModel, response_model_exclude_defaults=True)
async def model_json(body: ModelSource):
  """The `.tm.json` interchange form of a `.tm` text."""
  with tm_errors():
    return to_wire(load_model(body))


@router.post('/render', response_model=RenderResponse)
async def render_model(body: RenderRequest):
  """Graphviz DOT for one of the three views."""
  with tm_errors():
    model = load_model(body)
    overlay = behavior = None
    if body.view != 'static':
      if body.overlay is None:
        raise HTTPException(status_code=400, detail=f'the {body.view} view needs an overlay')
      overlay = load_overlay(body.overlay, model)
    if body.view == 'behavior':
      if body.declared and overlay.declared is None:
        raise HTTPException(status_code=400, detail='the overlay has no chronology block')
      behavior = overlay.declared if body.declared else infer_behavior(model, overlay)
    opts = RenderOptions(view=body.view, show_labels=body.show_labels, simplified=body.simplified)
    return RenderResponse(dot=render(body.view, model, overlay, behavior, opts))
