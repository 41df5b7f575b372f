"""In-memory static plane of a TM model.

A StaticModel is an immutable value: machines, things, actions, storages, flow arcs and
trigger arcs, each collection sorted by id. The add_* functions return a new model or raise
a ModelError, so every model reachable through them keeps referential integrity, the
same-thing flow rule and per-thing flow acyclicity.
"""

from __future__ import annotations

import dataclasses
import logging
import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import NamedTuple

import networkx as nx

from server.services.errors import (
  CrossThingFlow,
  DanglingReference,
  DuplicateId,
  FlowCycle,
  InvalidId,
  SelfLoopArc,
  UnknownAction,
)

logger = logging.getLogger(__name__)

NAME_RE = re.compile(r'[A-Za-z_][A-Za-z0-9_]*')


def is_name(text: str) -> bool:
  """True when text is a single DSL identifier."""
  return bool(NAME_RE.fullmatch(text))


class ActionKind(str, Enum):
  """The five generic actions; arrive and accept are folded into RECEIVE."""

  CREATE = 'create'
  PROCESS = 'process'
  RELEASE = 'release'
  TRANSFER = 'transfer'
  RECEIVE = 'receive'


class ArcKind(str, Enum):
  """Solid flow arrow or dashed trigger arrow."""

  FLOW = 'flow'
  TRIGGER = 'trigger'


@dataclass(frozen=True)
class Guard:
  """key=value condition selecting one branch of an alternative."""

  key: str
  value: str

  def __post_init__(self):
    if not is_name(self.key) or not is_name(self.value):
      raise InvalidId(f'guard tokens must be identifiers: {self.key}={self.value}')

  def __str__(self) -> str:
    return f'{self.key}={self.value}'


@dataclass(frozen=True)
class Machine:
  """Dotted-path machine, nested under an optional parent."""

  id: str
  name: str
  parent: str | None = None


@dataclass(frozen=True)
class Thing:
  """Something that flows; declared in its home machine."""

  id: str
  name: str
  home: str


@dataclass(frozen=True)
class Action:
  """One of the five generic actions, owned by a machine and acting on a thing."""

  id: str
  kind: ActionKind
  owner: str
  thing: str
  label: str | None = None

  @property
  def name(self) -> str:
    """Local name within the owning machine."""
    return self.id[len(self.owner) + 1 :]


@dataclass(frozen=True)
class Storage:
  """Store attached to a machine, holding one thing."""

  id: str
  owner: str
  name: str
  thing: str


@dataclass(frozen=True)
class FlowArc:
  """Solid arrow moving one thing between two nodes (actions or storages)."""

  source: str
  target: str
  id: str = field(init=False)

  def __post_init__(self):
    object.__setattr__(self, 'id', f'{self.source} -> {self.target}')


@dataclass(frozen=True)
class TriggerArc:
  """Dashed arrow from one action to another, optionally guarded."""

  source: str
  target: str
  guard: Guard | None = None
  id: str = field(init=False)

  def __post_init__(self):
    object.__setattr__(self, 'id', f'{self.source} ~> {self.target}')


class Successor(NamedTuple):
  """Arc leaving an action."""

  kind: ArcKind
  target: str
  guard: Guard | None
  arc: str


def _by_id(items: Iterable) -> tuple:
  return tuple(sorted(items, key=lambda item: item.id))


@dataclass(frozen=True)
class StaticModel:
  """The static plane: machines, actions, things, arcs and storages."""

  name: str
  machines: tuple[Machine, ...] = ()
  things: tuple[Thing, ...] = ()
  actions: tuple[Action, ...] = ()
  flows: tuple[FlowArc, ...] = ()
  triggers: tuple[TriggerArc, ...] = ()
  storages: tuple[Storage, ...] = ()
  simplified: bool = False

  def __post_init__(self):
    for name in ('machines', 'things', 'actions', 'flows', 'triggers', 'storages'):
      object.__setattr__(self, name, _by_id(getattr(self, name)))

  # ---------- lookups ----------
  @cached_property
  def _machines(self) -> dict[str, Machine]:
    return {m.id: m for m in self.machines}

  @cached_property
  def _things(self) -> dict[str, Thing]:
    return {t.id: t for t in self.things}

  @cached_property
  def _actions(self) -> dict[str, Action]:
    return {a.id: a for a in self.actions}

  @cached_property
  def _storages(self) -> dict[str, Storage]:
    return {s.id: s for s in self.storages}

  @cached_property
  def _arcs_out(self) -> dict[str, list[FlowArc | TriggerArc]]:
    out: dict[str, list[FlowArc | TriggerArc]] = {}
    for arc in (*self.flows, *self.triggers):
      out.setdefault(arc.source, []).append(arc)
    return out

  @cached_property
  def _arcs_in(self) -> dict[str, list[FlowArc | TriggerArc]]:
    into: dict[str, list[FlowArc | TriggerArc]] = {}
    for arc in (*self.flows, *self.triggers):
      into.setdefault(arc.target, []).append(arc)
    return into

  @cached_property
  def flow_graph(self) -> nx.DiGraph:
    """Flow arcs over every action and storage."""
    graph = nx.DiGraph()
    graph.add_nodes_from(self._actions)
    graph.add_nodes_from(self._storages)
    graph.add_edges_from((f.source, f.target) for f in self.flows)
    return graph

  @cached_property
  def arc_graph(self) -> nx.DiGraph:
    """Flow and trigger arcs over every action and storage."""
    graph = self.flow_graph.copy()
    graph.add_edges_from((t.source, t.target) for t in self.triggers)
    return graph

  def machine(self, machine_id: str) -> Machine:
    """Machine by id."""
    return self._machines[machine_id]

  def thing(self, thing_id: str) -> Thing:
    """Thing by id."""
    return self._things[thing_id]

  def action(self, action_id: str) -> Action:
    """Action by id; raises UnknownAction."""
    try:
      return self._actions[action_id]
    except KeyError:
      raise UnknownAction(action_id) from None

  def storage(self, storage_id: str) -> Storage:
    """Storage by id."""
    return self._storages[storage_id]

  def has_machine(self, machine_id: str) -> bool:
    """Whether a machine has this id."""
    return machine_id in self._machines

  def has_thing(self, thing_id: str) -> bool:
    """Whether a thing has this id."""
    return thing_id in self._things

  def has_action(self, action_id: str) -> bool:
    """Whether an action has this id."""
    return action_id in self._actions

  def has_storage(self, storage_id: str) -> bool:
    """Whether a storage has this id."""
    return storage_id in self._storages

  def has_node(self, node_id: str) -> bool:
    """Whether an action or storage has this id."""
    return node_id in self._actions or node_id in self._storages

  def owner_of(self, node_id: str) -> str:
    """Owning machine of an action or storage."""
    if node_id in self._actions:
      return self._actions[node_id].owner
    return self._storages[node_id].owner

  def thing_of(self, node_id: str) -> str:
    """Thing an action acts on, or a storage holds."""
    if node_id in self._actions:
      return self._actions[node_id].thing
    return self._storages[node_id].thing

  def out_flows(self, node_id: str) -> list[FlowArc]:
    """Flow arcs leaving an action or storage."""
    return [a for a in self._arcs_out.get(node_id, []) if isinstance(a, FlowArc)]

  def in_flows(self, node_id: str) -> list[FlowArc]:
    """Flow arcs entering an action or storage."""
    return [a for a in self._arcs_in.get(node_id, []) if isinstance(a, FlowArc)]

  def out_triggers(self, action_id: str) -> list[TriggerArc]:
    """Trigger arcs leaving an action."""
    return [a for a in self._arcs_out.get(action_id, []) if isinstance(a, TriggerArc)]

  def in_triggers(self, action_id: str) -> list[TriggerArc]:
    """Trigger arcs entering an action."""
    return [a for a in self._arcs_in.get(action_id, []) if isinstance(a, TriggerArc)]

  def is_trigger_endpoint(self, action_id: str) -> bool:
    """Whether any trigger starts or ends at the action."""
    return bool(self.out_triggers(action_id) or self.in_triggers(action_id))

  def children(self, machine_id: str | None) -> list[Machine]:
    """Direct sub-machines; None lists the top-level machines."""
    return [m for m in self.machines if m.parent == machine_id]

  def ancestors(self, machine_id: str) -> list[str]:
    """Enclosing machines, innermost first."""
    chain = []
    parent = self._machines[machine_id].parent
    while parent is not None:
      chain.append(parent)
      parent = self._machines[parent].parent
    return chain

  def members(self, machine_id: str) -> tuple[list[Thing], list[Storage], list[Action]]:
    """Things homed in, storages and actions owned by one machine."""
    return (
      [t for t in self.things if t.home == machine_id],
      [s for s in self.storages if s.owner == machine_id],
      [a for a in self.actions if a.owner == machine_id],
    )

  def _taken(self, element_id: str) -> bool:
    return element_id in self._machines or self.has_node(element_id)


# ---------- mutation ----------
def _check_name(name: str) -> None:
  if not is_name(name):
    raise InvalidId(f'not an identifier: {name!r}')


def _check_path(element_id: str, owner: str | None, name: str) -> None:
  _check_name(name)
  expected = f'{owner}.{name}' if owner else name
  if element_id != expected:
    raise InvalidId(f'id {element_id!r} should be {expected!r}')


def add_machine(model: StaticModel, machine: Machine) -> StaticModel:
  """Insert a machine under an existing parent (or at the top level)."""
  if machine.parent is not None and not model.has_machine(machine.parent):
    raise DanglingReference(f'machine {machine.id}: unknown parent {machine.parent}')
  _check_path(machine.id, machine.parent, machine.name)
  if model._taken(machine.id):
    raise DuplicateId(machine.id)
  return dataclasses.replace(model, machines=(*model.machines, machine))


def add_thing(model: StaticModel, thing: Thing) -> StaticModel:
  """Insert a thing declared in its home machine."""
  if not model.has_machine(thing.home):
    raise DanglingReference(f'thing {thing.id}: unknown machine {thing.home}')
  _check_name(thing.name)
  if thing.id != thing.name:
    raise InvalidId(f'thing id {thing.id!r} must equal its name {thing.name!r}')
  if model.has_thing(thing.id):
    raise DuplicateId(thing.id)
  return dataclasses.replace(model, things=(*model.things, thing))


def add_storage(model: StaticModel, storage: Storage) -> StaticModel:
  """Insert a storage owned by a machine and holding one thing."""
  if not model.has_machine(storage.owner):
    raise DanglingReference(f'storage {storage.id}: unknown machine {storage.owner}')
  if not model.has_thing(storage.thing):
    raise DanglingReference(f'storage {storage.id}: unknown thing {storage.thing}')
  _check_path(storage.id, storage.owner, storage.name)
  if model._taken(storage.id):
    raise DuplicateId(storage.id)
  return dataclasses.replace(model, storages=(*model.storages, storage))


def add_action(model: StaticModel, action: Action) -> StaticModel:
  """Insert an action owned by a machine and acting on a thing."""
  if not model.has_machine(action.owner):
    raise DanglingReference(f'action {action.id}: unknown machine {action.owner}')
  if not model.has_thing(action.thing):
    raise DanglingReference(f'action {action.id}: unknown thing {action.thing}')
  _check_path(action.id, action.owner, action.id[len(action.owner) + 1 :])
  if model._taken(action.id):
    raise DuplicateId(action.id)
  return dataclasses.replace(model, actions=(*model.actions, action))


def add_flow(model: StaticModel, flow: FlowArc) -> StaticModel:
  """Insert a flow arc; both ends must act on the same thing and no cycle may close."""
  for end in (flow.source, flow.target):
    if not model.has_node(end):
      raise DanglingReference(f'flow {flow.id}: unknown node {end}')
  if flow.source == flow.target:
    raise SelfLoopArc(flow.id)
  if model.thing_of(flow.source) != model.thing_of(flow.target):
    raise CrossThingFlow(
      f'flow {flow.id}: {model.thing_of(flow.source)} vs {model.thing_of(flow.target)}'
    )
  if any(f.id == flow.id for f in model.out_flows(flow.source)):
    raise DuplicateId(flow.id)
  if nx.has_path(model.flow_graph, flow.target, flow.source):
    raise FlowCycle(f'flow {flow.id} closes a cycle on {model.thing_of(flow.source)}')
  return dataclasses.replace(model, flows=(*model.flows, flow))


def add_trigger(model: StaticModel, trigger: TriggerArc) -> StaticModel:
  """Insert a trigger arc between two actions; things may differ."""
  for end in (trigger.source, trigger.target):
    if not model.has_action(end):
      raise DanglingReference(f'trigger {trigger.id}: unknown action {end}')
  if trigger.source == trigger.target:
    raise SelfLoopArc(trigger.id)
  if any(t.id == trigger.id for t in model.out_triggers(trigger.source)):
    raise DuplicateId(trigger.id)
  return dataclasses.replace(model, triggers=(*model.triggers, trigger))


def build_model(
  name: str,
  machines: Iterable[Machine] = (),
  things: Iterable[Thing] = (),
  storages: Iterable[Storage] = (),
  actions: Iterable[Action] = (),
  flows: Iterable[FlowArc] = (),
  triggers: Iterable[TriggerArc] = (),
  simplified: bool = False,
) -> StaticModel:
  """Insert elements in dependency order through the add_* operations."""
  model = StaticModel(name=name, simplified=simplified)
  for machine in sorted(machines, key=lambda m: (m.id.count('.'), m.id)):
    model = add_machine(model, machine)
  for thing in things:
    model = add_thing(model, thing)
  for storage in storages:
    model = add_storage(model, storage)
  for action in actions:
    model = add_action(model, action)
  for flow in flows:
    model = add_flow(model, flow)
  for trigger in triggers:
    model = add_trigger(model, trigger)
  logger.debug('built model %s: %d actions, %d flows', name, len(model.actions), len(model.flows))
  return model


# ---------- navigation ----------
def successors(model: StaticModel, action_id: str) -> tuple[Successor, ...]:
  """Flow and trigger arcs leaving an action, ordered by arc id."""
  model.action(action_id)
  arcs = sorted(model._arcs_out.get(action_id, []), key=lambda arc: arc.id)
  return tuple(
    Successor(ArcKind.FLOW, arc.target, None, arc.id)
    if isinstance(arc, FlowArc)
    else Successor(ArcKind.TRIGGER, arc.target, arc.guard, arc.id)
    for arc in arcs
  )


def machine_of_region(
  model: StaticModel, actions: Iterable[str], include_ancestors: bool = False
) -> frozenset[str]:
  """Machines owning the given actions, optionally with their enclosing machines."""
  owners: set[str] = set()
  for action_id in actions:
    owner = model.action(action_id).owner
    owners.add(owner)
    if include_ancestors:
      owners.update(model.ancestors(owner))
  return frozenset(owners)


def children(model: StaticModel, machine_id: str | None) -> list[str]:
  """Ids of the direct sub-machines of a machine (top-level machines for None)."""
  return [m.id for m in model.children(machine_id)]


def ancestors(model: StaticModel, machine_id: str) -> list[str]:
  """Enclosing machines of a machine, innermost first."""
  return model.ancestors(machine_id)


def node_thing(model: StaticModel, node_id: str) -> str:
  """Thing carried by an action or storage."""
  if not model.has_node(node_id):
    raise UnknownAction(node_id)
  return model.thing_of(node_id)


def flow_graph(model: StaticModel) -> nx.DiGraph:
  """Actions and storages joined by flow arcs."""
  return model.flow_graph


def arc_graph(model: StaticModel) -> nx.DiGraph:
  """The flow graph plus trigger arcs."""
  return model.arc_graph
