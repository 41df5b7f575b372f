"""Event overlay endpoints: coverage, behaviour inference and simulation."""

from typing import Literal

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from server.routers.common import OverlaySource, load_model, load_overlay, tm_errors
from server.services.events import (
  BehaviorDiff,
  CoverageReport,
  check_behavior,
  check_coverage,
  guarded_acyclic,
  infer_behavior,
)
from server.services.simulator import parse_scenario, simulate

router = APIRouter()


class BehaviorRequest(OverlaySource):
  """An overlay, optionally diffed against its chronology block."""

  declared: bool = Field(default=False, description='Diff the chronology block against inference')


class BehaviorResponse(BaseModel):
  """Inferred edges in chronology notation, plus the diff when asked for."""

  events: list[str]
  edges: list[str]
  guarded_acyclic: bool
  diff: BehaviorDiff | None = None


class SimulateRequest(OverlaySource):
  """An overlay plus the scenario to run on it."""

  scenario: str = Field(..., description='Scenario text')
  declared: bool = Field(default=False, description='Run the declared chronology')


class Step(BaseModel):
  """One fired event."""

  tick: int
  event: str


class TraceResponse(BaseModel):
  """A simulation trace."""

  scenario: str
  steps: list[Step]
  terminal: Literal['completed', 'deadlocked', 'step-limit']


@router.post('/coverage', response_model=CoverageReport)
async def coverage(body: OverlaySource):
  """Check the overlay's regions and list actions no event covers."""
  with tm_errors():
    model = load_model(body)
    return check_coverage(load_overlay(body.overlay, model), model)


@router.post('/behavior', response_model=BehaviorResponse)
async def behavior(body: BehaviorRequest):
  """Infer the behaviour graph; with `declared`, diff it against the chronology block."""
  with tm_errors():
    model = load_model(body)
    overlay = load_overlay(body.overlay, model)
    inferred = infer_behavior(model, overlay)
    diff = None
    if body.declared:
      if overlay.declared is None:
        raise HTTPException(status_code=400, detail='the overlay has no chronology block')
      diff = check_behavior(overlay.declared, inferred)
    return BehaviorResponse(
      events=list(inferred.nodes),
      edges=[str(e) for e in inferred.edges],
      guarded_acyclic=guarded_acyclic(inferred),
      diff=diff,
    )


@router.post('/simulate', response_model=TraceResponse)
async def run_simulation(body: SimulateRequest):
  """Run a scenario over the inferred (or declared) behaviour graph."""
  with tm_errors():
    model = load_model(body)
    overlay = load_overlay(body.overlay, model)
    scenario = parse_scenario(body.scenario, file='<scenario>')
    if body.declared:
      if overlay.declared is None:
        raise HTTPException(status_code=400, detail='the overlay has no chronology block')
      graph = overlay.declared
    else:
      graph = infer_behavior(model, overlay)
    trace = simulate(model, overlay, graph, scenario)
    return TraceResponse(
      scenario=scenario.name,
      steps=[Step(tick=s.tick, event=s.event) for s in trace.steps],
      terminal=trace.terminal,
    )
