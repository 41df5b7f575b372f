"""`.tm.json` interchange form of a static model."""

from __future__ import annotations

import json
import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from server.services.errors import ModelError, SchemaViolation
from server.services.model import (
  Action,
  ActionKind,
  FlowArc,
  Guard,
  Machine,
  StaticModel,
  Storage,
  Thing,
  TriggerArc,
  add_action,
  add_flow,
  add_machine,
  add_storage,
  add_thing,
  add_trigger,
)

logger = logging.getLogger(__name__)


class _Wire(BaseModel):
  model_config = ConfigDict(extra='forbid', populate_by_name=True)


class WireMachine(_Wire):
  """Machine record."""

  id: str
  name: str
  parent: str | None = None


class WireThing(_Wire):
  """Thing record."""

  id: str
  name: str
  home: str


class WireStorage(_Wire):
  """Storage record."""

  id: str
  owner: str
  name: str
  thing: str


class WireAction(_Wire):
  """Action record."""

  id: str
  kind: ActionKind
  owner: str
  thing: str
  label: str | None = None


class WireGuard(_Wire):
  """Trigger guard record."""

  key: str = Field(min_length=1)
  value: str = Field(min_length=1)


class WireFlow(_Wire):
  """Flow record; `from` and `to` on the wire."""

  id: str
  source: str = Field(alias='from')
  target: str = Field(alias='to')


class WireTrigger(_Wire):
  """Trigger record; `from` and `to` on the wire."""

  id: str
  source: str = Field(alias='from')
  target: str = Field(alias='to')
  guard: WireGuard | None = None


class WireModel(_Wire):
  """Top-level `.tm.json` document."""

  name: str
  machines: list[WireMachine]
  things: list[WireThing]
  actions: list[WireAction]
  flows: list[WireFlow]
  triggers: list[WireTrigger]
  storages: list[WireStorage]
  simplified: bool = False


def to_wire(model: StaticModel) -> WireModel:
  """Mirror a static model into its wire form."""
  return WireModel(
    name=model.name,
    machines=[WireMachine(id=m.id, name=m.name, parent=m.parent) for m in model.machines],
    things=[WireThing(id=t.id, name=t.name, home=t.home) for t in model.things],
    actions=[
      WireAction(id=a.id, kind=a.kind, owner=a.owner, thing=a.thing, label=a.label)
      for a in model.actions
    ],
    flows=[WireFlow(id=f.id, source=f.source, target=f.target) for f in model.flows],
    triggers=[
      WireTrigger(
        id=t.id,
        source=t.source,
        target=t.target,
        guard=WireGuard(key=t.guard.key, value=t.guard.value) if t.guard else None,
      )
      for t in model.triggers
    ],
    storages=[
      WireStorage(id=s.id, owner=s.owner, name=s.name, thing=s.thing) for s in model.storages
    ],
    simplified=model.simplified,
  )


def to_json(model: StaticModel) -> str:
  """Compact JSON with sorted keys; `simplified` appears only when set."""
  document = to_wire(model).model_dump(mode='json', by_alias=True)
  if not model.simplified:
    del document['simplified']
  return json.dumps(document, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def _pointer(loc: tuple) -> str:
  return ''.join(f'/{part}' for part in loc)


def from_wire(wire: WireModel) -> StaticModel:
  """Rebuild a static model, reporting rejected elements by JSON pointer."""
  model = StaticModel(name=wire.name, simplified=wire.simplified)

  def insert(pointer: str, adder, element):
    try:
      return adder(model, element)
    except (ModelError, ValueError) as e:
      raise SchemaViolation(pointer, str(e)) from e

  machines = sorted(enumerate(wire.machines), key=lambda item: item[1].id.count('.'))
  for i, m in machines:
    model = insert(f'/machines/{i}', add_machine, Machine(id=m.id, name=m.name, parent=m.parent))
  for i, t in enumerate(wire.things):
    model = insert(f'/things/{i}', add_thing, Thing(id=t.id, name=t.name, home=t.home))
  for i, s in enumerate(wire.storages):
    storage = Storage(id=s.id, owner=s.owner, name=s.name, thing=s.thing)
    model = insert(f'/storages/{i}', add_storage, storage)
  for i, a in enumerate(wire.actions):
    action = Action(id=a.id, kind=a.kind, owner=a.owner, thing=a.thing, label=a.label)
    model = insert(f'/actions/{i}', add_action, action)
  for i, f in enumerate(wire.flows):
    flow = FlowArc(source=f.source, target=f.target)
    if flow.id != f.id:
      raise SchemaViolation(f'/flows/{i}/id', f'expected {flow.id!r}')
    model = insert(f'/flows/{i}', add_flow, flow)
  for i, t in enumerate(wire.triggers):
    try:
      guard = Guard(t.guard.key, t.guard.value) if t.guard else None
    except ModelError as e:
      raise SchemaViolation(f'/triggers/{i}/guard', str(e)) from e
    trigger = TriggerArc(source=t.source, target=t.target, guard=guard)
    if trigger.id != t.id:
      raise SchemaViolation(f'/triggers/{i}/id', f'expected {trigger.id!r}')
    model = insert(f'/triggers/{i}', add_trigger, trigger)
  return model


def from_json(text: str | bytes) -> StaticModel:
  """Parse `.tm.json`; any problem surfaces as SchemaViolation with a JSON pointer."""
  try:
    data = json.loads(text)
  except (json.JSONDecodeError, UnicodeDecodeError) as e:
    raise SchemaViolation('', f'invalid JSON: {e}') from e
  try:
    wire = WireModel.model_validate(data)
  except ValidationError as e:
    first = e.errors()[0]
    raise SchemaViolation(_pointer(first['loc']), first['msg']) from e
  model = from_wire(wire)
  logger.debug('decoded %s from JSON', model.name)
  return model
