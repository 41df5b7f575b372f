"""The dynamic plane: event regions over a static model and the behaviour graph between them."""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx
from lark import Lark, Tree
from pydantic import BaseModel

from server.services.diagnostics import ParseDiagnostic, SourceSpan, meta_span, parse_tree
from server.services.dsl import guard_of
from server.services.errors import (
  DiagnosticError,
  DisconnectedRegion,
  DuplicateId,
  EmptyRegion,
  IllegalOverlap,
  NodeSetMismatch,
  TmError,
  UnknownAction,
)
from server.services.model import ActionKind, ArcKind, FlowArc, Guard, StaticModel

logger = logging.getLogger(__name__)

EV_GRAMMAR = r"""
start: "events" NAME _decl*
_decl: event | chronology
event: "event" NAME ESCAPED_STRING? "{" refs "}"
refs: (REF ("," REF)* ","?)?
chronology: "chronology" "{" edge* "}"
edge: NAME ARROW NAME guard?
guard: "[" NAME "=" NAME "]"

ARROW: "->" | "~>"
REF: NAME ("." NAME)*
NAME: /[A-Za-z_][A-Za-z0-9_]*/
COMMENT: /\/\/[^\n]*/

%import common.ESCAPED_STRING
%import common.WS
%ignore WS
%ignore COMMENT
"""

_parser = Lark(EV_GRAMMAR, parser='lalr', propagate_positions=True)

_DIGITS = re.compile(r'(\d+)')


def natural_key(event_id: str) -> tuple:
  """Sort key ordering E2 before E10."""
  return tuple(int(p) if p.isdigit() else p for p in _DIGITS.split(event_id))


@dataclass(frozen=True)
class EventDef:
  """An event: a connected region of actions plus a description."""

  id: str
  region: frozenset[str]
  description: str = ''


@dataclass(frozen=True)
class BehaviorEdge:
  """A chronology edge between two events."""

  source: str
  target: str
  guard: Guard | None = None
  via: ArcKind = ArcKind.FLOW

  @property
  def sort_key(self) -> tuple:
    """Natural order of source and target, then arc kind and guard."""
    return (
      natural_key(self.source),
      natural_key(self.target),
      self.via.value,
      str(self.guard or ''),
    )

  def __str__(self) -> str:
    arrow = '->' if self.via is ArcKind.FLOW else '~>'
    text = f'{self.source} {arrow} {self.target}'
    return f'{text} [{self.guard}]' if self.guard else text


@dataclass(frozen=True)
class BehaviorGraph:
  """Events and their guarded chronology edges, both in natural order."""

  nodes: tuple[str, ...] = ()
  edges: tuple[BehaviorEdge, ...] = ()

  def __post_init__(self):
    object.__setattr__(self, 'nodes', tuple(sorted(set(self.nodes), key=natural_key)))
    object.__setattr__(self, 'edges', tuple(sorted(set(self.edges), key=lambda e: e.sort_key)))

  def in_edges(self, event_id: str) -> list[BehaviorEdge]:
    """Edges entering the event."""
    return [e for e in self.edges if e.target == event_id]

  def out_edges(self, event_id: str) -> list[BehaviorEdge]:
    """Edges leaving the event."""
    return [e for e in self.edges if e.source == event_id]

  def guard_keys(self) -> set[str]:
    """Every guard key used on an edge."""
    return {e.guard.key for e in self.edges if e.guard}

  def to_networkx(self) -> nx.MultiDiGraph:
    """Multigraph copy with `guard` and `via` edge attributes."""
    graph = nx.MultiDiGraph()
    graph.add_nodes_from(self.nodes)
    for edge in self.edges:
      graph.add_edge(edge.source, edge.target, guard=edge.guard, via=edge.via)
    return graph


@dataclass(frozen=True)
class EventOverlay:
  """Event regions over one static model, with an optional declared chronology."""

  model: str
  events: tuple[EventDef, ...] = ()
  declared: BehaviorGraph | None = field(default=None, compare=False)

  def __post_init__(self):
    object.__setattr__(self, 'events', tuple(sorted(self.events, key=lambda e: natural_key(e.id))))

  def event(self, event_id: str) -> EventDef:
    """The event with this id."""
    return next(e for e in self.events if e.id == event_id)

  def regions_of(self, action_id: str) -> list[str]:
    """Ids of the events whose region holds the action."""
    return [e.id for e in self.events if action_id in e.region]


# ---------- region checks ----------
def check_region(model: StaticModel, event: EventDef) -> None:
  """Raise if the region is empty, names unknown actions or is not weakly connected."""
  if not event.region:
    raise EmptyRegion(f'{event.id}: empty region')
  for action_id in sorted(event.region):
    if not model.has_action(action_id):
      raise UnknownAction(f'{event.id}: {action_id}')
  if not nx.is_weakly_connected(model.arc_graph.subgraph(event.region)):
    raise DisconnectedRegion(f'{event.id}: region is not connected')


def check_overlap(model: StaticModel, first: EventDef, second: EventDef) -> None:
  """Raise IllegalOverlap when two regions share anything but transfers."""
  shared = sorted(
    a for a in first.region & second.region if model.action(a).kind is not ActionKind.TRANSFER
  )
  if shared:
    raise IllegalOverlap(f'{first.id} and {second.id} share {", ".join(shared)}')


def make_overlay(
  model: StaticModel, events: Iterable[EventDef], declared: BehaviorGraph | None = None
) -> EventOverlay:
  """Build an overlay with the same checks parse_overlay applies."""
  events = list(events)
  seen: set[str] = set()
  for event in events:
    if event.id in seen:
      raise DuplicateId(event.id)
    seen.add(event.id)
    check_region(model, event)
  for first, second in combinations(events, 2):
    check_overlap(model, first, second)
  return EventOverlay(model=model.name, events=tuple(events), declared=declared)


# ---------- .ev files ----------
def _diagnostic(span: SourceSpan, error: TmError | str, code: str | None = None) -> ParseDiagnostic:
  return ParseDiagnostic(span=span, code=code or type(error).__name__, message=str(error))


def parse_overlay(source: str | bytes, model: StaticModel, file: str = '<input>') -> EventOverlay:
  """Parse an `.ev` file against its static model.

  Raises:
    DiagnosticError: syntax errors, unknown actions or events, empty, disconnected or
      illegally overlapping regions.
  """
  _, tree = parse_tree(_parser, source, file)
  header, *decls = tree.children
  diagnostics: list[ParseDiagnostic] = []
  if str(header) != model.name:
    diagnostics.append(
      _diagnostic(
        SourceSpan(file=file, line=header.line, column=header.column),
        f'overlay is for model {header}, not {model.name}',
        code='ModelMismatch',
      )
    )

  accepted: list[tuple[Tree, EventDef]] = []
  chronologies: list[Tree] = []
  for decl in decls:
    if decl.data == 'chronology':
      chronologies.append(decl)
      continue
    name, *rest = decl.children
    refs = rest[-1]
    span = meta_span(decl.meta, file)
    try:
      description = json.loads(rest[0]) if len(rest) == 2 else ''
    except json.JSONDecodeError:
      diagnostics.append(_diagnostic(span, f'bad description escape in {rest[0]}', 'SyntaxError'))
      continue
    region = frozenset(str(r) for r in refs.children)
    event = EventDef(id=str(name), region=region, description=description)
    try:
      if any(e.id == event.id for _, e in accepted):
        raise DuplicateId(event.id)
      check_region(model, event)
      for _, other in accepted:
        check_overlap(model, other, event)
    except TmError as e:
      diagnostics.append(_diagnostic(span, e))
      continue
    accepted.append((decl, event))

  events = [e for _, e in accepted]
  declared = None
  if chronologies:
    known = {e.id for e in events}
    edges = []
    for chronology in chronologies:
      for edge in chronology.children:
        source, arrow, target, *rest = edge.children
        unknown = [str(n) for n in (source, target) if str(n) not in known]
        if unknown:
          diagnostics.append(
            _diagnostic(meta_span(edge.meta, file), f'unknown event {unknown[0]}', 'UnknownEvent')
          )
          continue
        via = ArcKind.FLOW if str(arrow) == '->' else ArcKind.TRIGGER
        guard = guard_of(rest[0] if rest else None)
        edges.append(BehaviorEdge(str(source), str(target), guard, via))
    declared = BehaviorGraph(nodes=tuple(known), edges=tuple(edges))

  if diagnostics:
    raise DiagnosticError(diagnostics)
  logger.debug('overlay on %s: %d events', model.name, len(events))
  return EventOverlay(model=model.name, events=tuple(events), declared=declared)


def print_chronology(graph: BehaviorGraph) -> str:
  """`chronology { ... }` block listing every edge, one per line."""
  body = ''.join(f'  {edge}\n' for edge in graph.edges)
  return f'chronology {{\n{body}}}\n'


def print_overlay(overlay: EventOverlay) -> str:
  """`.ev` text for an overlay, regions listed in id order, then its declared chronology."""
  lines = [f'events {overlay.model}']
  for event in overlay.events:
    head = f'event {event.id}'
    if event.description:
      head += ' ' + json.dumps(event.description, ensure_ascii=False)
    lines += ['', head + ' {', '  ' + ', '.join(sorted(event.region)), '}']
  text = '\n'.join(lines) + '\n'
  if overlay.declared is not None:
    text += '\n' + print_chronology(overlay.declared)
  return text


# ---------- coverage ----------
class CoverageReport(BaseModel):
  """Non-transfer actions that no event region covers; uncovered structure is a warning."""

  events: int
  uncovered: list[str]

  @property
  def complete(self) -> bool:
    """True when every non-transfer action is covered."""
    return not self.uncovered


def check_coverage(overlay: EventOverlay, model: StaticModel) -> CoverageReport:
  """Count the events and list non-transfer actions outside every region."""
  covered = {a for event in overlay.events for a in event.region}
  uncovered = [
    a.id for a in model.actions if a.kind is not ActionKind.TRANSFER and a.id not in covered
  ]
  return CoverageReport(events=len(overlay.events), uncovered=uncovered)


# ---------- behaviour ----------
def infer_behavior(model: StaticModel, overlay: EventOverlay) -> BehaviorGraph:
  """Derive the event graph from static arcs that leave one region and enter another.

  An arc x -> y yields an edge A -> B when x lies in A but not B and y lies in B but not A;
  trigger arcs carry their guard over. A transfer shared by A and B yields A -> B when a flow
  reaches it from A's interior and leaves it into B's interior.
  """
  owners: dict[str, list[str]] = {}
  for event in overlay.events:
    for action_id in event.region:
      owners.setdefault(action_id, []).append(event.id)

  regions = {e.id: e.region for e in overlay.events}
  edges: set[BehaviorEdge] = set()
  for arc in (*model.flows, *model.triggers):
    via = ArcKind.FLOW if isinstance(arc, FlowArc) else ArcKind.TRIGGER
    guard = None if isinstance(arc, FlowArc) else arc.guard
    for a in owners.get(arc.source, []):
      for b in owners.get(arc.target, []):
        if a != b and arc.target not in regions[a] and arc.source not in regions[b]:
          edges.add(BehaviorEdge(a, b, guard, via))

  for action_id, events in owners.items():
    if len(events) < 2:
      continue
    for a in events:
      for b in events:
        if a == b:
          continue
        entering = any(
          f.source in regions[a] and f.source not in regions[b] for f in model.in_flows(action_id)
        )
        leaving = any(
          f.target in regions[b] and f.target not in regions[a] for f in model.out_flows(action_id)
        )
        if entering and leaving:
          edges.add(BehaviorEdge(a, b, None, ArcKind.FLOW))

  graph = BehaviorGraph(nodes=tuple(regions), edges=tuple(edges))
  logger.debug('inferred %d behaviour edges over %d events', len(graph.edges), len(graph.nodes))
  return graph


class BehaviorDiff(BaseModel):
  """Edges the inferred graph has and the declared one lacks, and the reverse."""

  missing: list[str]
  extra: list[str]

  @property
  def empty(self) -> bool:
    """True when the graphs agree."""
    return not self.missing and not self.extra


def check_behavior(declared: BehaviorGraph, inferred: BehaviorGraph) -> BehaviorDiff:
  """Symmetric difference of two behaviour graphs over the same events.

  Edges match on source, target and guard; whether they came from a flow or a trigger does
  not count.

  Raises:
    NodeSetMismatch: the graphs disagree on their events.
  """
  if set(declared.nodes) != set(inferred.nodes):
    only = sorted(set(declared.nodes) ^ set(inferred.nodes), key=natural_key)
    raise NodeSetMismatch(f'events not in both graphs: {", ".join(only)}')

  def keyed(graph: BehaviorGraph) -> dict[tuple, BehaviorEdge]:
    return {(e.source, e.target, e.guard): e for e in graph.edges}

  def listed(edges: dict[tuple, BehaviorEdge], keys: set[tuple]) -> list[str]:
    return [str(e) for e in sorted((edges[k] for k in keys), key=lambda e: e.sort_key)]

  want, have = keyed(inferred), keyed(declared)
  return BehaviorDiff(
    missing=listed(want, want.keys() - have.keys()),
    extra=listed(have, have.keys() - want.keys()),
  )


def guarded_acyclic(graph: BehaviorGraph) -> bool:
  """True when every cycle passes through a guarded edge, so loops need guard re-evaluation."""
  unguarded = nx.DiGraph()
  unguarded.add_nodes_from(graph.nodes)
  unguarded.add_edges_from((e.source, e.target) for e in graph.edges if e.guard is None)
  return nx.is_directed_acyclic_graph(unguarded)
