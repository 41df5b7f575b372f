"""Executes a behaviour graph under a scenario, producing a logical-time trace."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Literal

import networkx as nx
from lark import Lark, Tree
from pydantic import BaseModel, ConfigDict, Field, field_validator

from server.config import get_settings
from server.services.diagnostics import ParseDiagnostic, meta_span, parse_tree
from server.services.errors import (
  BehaviorCycle,
  DiagnosticError,
  NodeSetMismatch,
  TooLarge,
  UnboundGuard,
  UnknownGuardKey,
)
from server.services.events import BehaviorEdge, BehaviorGraph, EventOverlay, natural_key
from server.services.model import ArcKind, StaticModel

logger = logging.getLogger(__name__)

SCN_GRAMMAR = r"""
start: "scenario" NAME "on" NAME _line*
_line: bind | max_steps
bind: "bind" NAME "=" (NAME | values)
values: "[" NAME ("," NAME)* "]"
max_steps: "max_steps" "=" INT

NAME: /[A-Za-z_][A-Za-z0-9_]*/
COMMENT: /\/\/[^\n]*/

%import common.INT
%import common.WS
%ignore WS
%ignore COMMENT
"""

_parser = Lark(SCN_GRAMMAR, parser='lalr', propagate_positions=True)

Terminal = Literal['completed', 'deadlocked', 'step-limit']


class Scenario(BaseModel):
  """Guard bindings for one run; a sequence binding advances once per read."""

  model_config = ConfigDict(frozen=True)

  name: str
  model: str | None = None
  bindings: dict[str, tuple[str, ...]] = Field(default_factory=dict)
  max_steps: int = Field(default_factory=lambda: get_settings().max_steps, gt=0)

  @field_validator('bindings')
  @classmethod
  def _nonempty(cls, bindings: dict[str, tuple[str, ...]]) -> dict[str, tuple[str, ...]]:
    for key, values in bindings.items():
      if not values:
        raise ValueError(f'binding {key} has no values')
    return bindings


def parse_scenario(source: str | bytes, file: str = '<input>') -> Scenario:
  """Parse a `.scn` file.

  Raises:
    DiagnosticError: syntax errors, duplicate bindings or a repeated max_steps.
  """
  _, tree = parse_tree(_parser, source, file)
  name, model, *lines = tree.children
  bindings: dict[str, tuple[str, ...]] = {}
  max_steps = None
  diagnostics = []
  for line in lines:
    span = meta_span(line.meta, file)
    if line.data == 'max_steps':
      if max_steps is not None:
        diagnostics.append(ParseDiagnostic(span=span, code='Duplicate', message='max_steps twice'))
      max_steps = int(line.children[0])
      if max_steps < 1:
        diagnostics.append(
          ParseDiagnostic(span=span, code='SyntaxError', message='max_steps must be positive')
        )
      continue
    key, value = line.children
    if str(key) in bindings:
      diagnostics.append(ParseDiagnostic(span=span, code='Duplicate', message=f'{key} bound twice'))
    values = [str(v) for v in value.children] if isinstance(value, Tree) else [str(value)]
    bindings[str(key)] = tuple(values)
  if diagnostics:
    raise DiagnosticError(diagnostics)
  fields = {'max_steps': max_steps} if max_steps else {}
  return Scenario(name=str(name), model=str(model), bindings=bindings, **fields)


@dataclass(frozen=True)
class TraceStep:
  """An event fired at a tick."""

  tick: int
  event: str


@dataclass(frozen=True)
class Trace:
  """Fired events in order, each with its tick, and how the run ended."""

  steps: tuple[TraceStep, ...]
  terminal: Terminal

  @property
  def events(self) -> tuple[str, ...]:
    """Fired event ids in firing order."""
    return tuple(step.event for step in self.steps)


def trace_to_jsonl(trace: Trace) -> str:
  """One `{tick, event}` object per step, then a `{terminal}` record."""
  lines = [json.dumps({'tick': s.tick, 'event': s.event}, sort_keys=True) for s in trace.steps]
  lines.append(json.dumps({'terminal': trace.terminal}))
  return '\n'.join(lines) + '\n'


def _mandatory(edge: BehaviorEdge) -> bool:
  return edge.via is ArcKind.FLOW and edge.guard is None


class _Run:
  """Token game over the behaviour edges."""

  def __init__(self, behavior: BehaviorGraph, scenario: Scenario):
    self.behavior = behavior
    self.scenario = scenario
    self.tokens: Counter[BehaviorEdge] = Counter()
    self.fired: Counter[str] = Counter()
    self.reads: Counter[str] = Counter()
    self.incoming = {n: behavior.in_edges(n) for n in behavior.nodes}
    self.outgoing = {n: behavior.out_edges(n) for n in behavior.nodes}

  def copy(self) -> _Run:
    """An independent run in the same state."""
    twin = _Run.__new__(_Run)
    twin.__dict__.update(self.__dict__)
    twin.tokens, twin.fired = Counter(self.tokens), Counter(self.fired)
    twin.reads = Counter(self.reads)
    return twin

  def state(self) -> tuple[frozenset, ...]:
    return tuple(frozenset((+c).items()) for c in (self.tokens, self.fired, self.reads))

  def _ready(self, event: str) -> bool:
    return all(self.fired[e.source] for e in self.incoming[event] if _mandatory(e))

  def _token_waiting(self, event: str) -> bool:
    edges = self.incoming[event]
    alternatives = [e for e in edges if not _mandatory(e)]
    return any(self.tokens[e] for e in (alternatives or edges))

  def enabled(self, event: str) -> bool:
    if not self.incoming[event]:
      return not self.fired[event]
    return self._token_waiting(event) and self._ready(event)

  def stuck(self) -> bool:
    return any(self._token_waiting(n) and not self._ready(n) for n in self.behavior.nodes)

  def read(self, key: str) -> str:
    values = self.scenario.bindings.get(key)
    if values is None:
      raise UnboundGuard(key)
    value = values[min(self.reads[key], len(values) - 1)]
    self.reads[key] += 1
    return value

  def fire(self, event: str) -> list[BehaviorEdge]:
    """Consume the event's tokens and return the out-edges that receive one."""
    self.fired[event] += 1
    for edge in self.incoming[event]:
      if self.tokens[edge]:
        self.tokens[edge] -= 1
    out = self.outgoing[event]
    current = {key: self.read(key) for key in sorted({e.guard.key for e in out if e.guard})}
    return [e for e in out if e.guard is None or current[e.guard.key] == e.guard.value]


def _check_scenario(behavior: BehaviorGraph, scenario: Scenario) -> None:
  unknown = sorted(set(scenario.bindings) - behavior.guard_keys())
  if unknown:
    raise UnknownGuardKey(', '.join(unknown))


def simulate(
  model: StaticModel, overlay: EventOverlay, behavior: BehaviorGraph, scenario: Scenario
) -> Trace:
  """Run the scenario with maximal steps: every enabled event fires in the same tick.

  Raises:
    NodeSetMismatch: the behaviour graph does not cover exactly the overlay's events.
    UnknownGuardKey: the scenario binds a key that no edge uses.
    UnboundGuard: a guard key is read that the scenario leaves unbound.
  """
  if {e.id for e in overlay.events} != set(behavior.nodes):
    raise NodeSetMismatch(f'{model.name}: behaviour graph and overlay disagree on events')
  _check_scenario(behavior, scenario)
  run = _Run(behavior, scenario)
  steps: list[TraceStep] = []
  tick = 0
  terminal: Terminal = 'completed'
  while True:
    ready = [n for n in behavior.nodes if run.enabled(n)]
    if not ready:
      if run.stuck():
        terminal = 'deadlocked'
      break
    deposits: list[BehaviorEdge] = []
    for event in ready:
      if len(steps) >= scenario.max_steps:
        terminal = 'step-limit'
        break
      steps.append(TraceStep(tick, event))
      deposits.extend(run.fire(event))
    if terminal == 'step-limit':
      break
    run.tokens.update(deposits)
    logger.debug('tick %d: %s', tick, ', '.join(ready))
    tick += 1
  logger.debug('scenario %s: %d steps, %s', scenario.name, len(steps), terminal)
  return Trace(steps=tuple(steps), terminal=terminal)


def filtered_graph(behavior: BehaviorGraph, scenario: Scenario) -> nx.DiGraph:
  """Events reachable from the sources along edges some bound value can take.

  An edge guarded on an unbound key counts as passable; the run reports the key only if it
  ever reads it. Edge attribute `always` marks edges every read takes: unguarded ones and those
  guarded on the key's last bound value.
  """

  def passable(edge: BehaviorEdge) -> tuple[bool, bool]:
    if edge.guard is None:
      return True, True
    values = scenario.bindings.get(edge.guard.key)
    if values is None:
      return True, False
    return edge.guard.value in values, edge.guard.value == values[-1]

  graph = nx.DiGraph()
  frontier = [n for n in behavior.nodes if not behavior.in_edges(n)]
  graph.add_nodes_from(frontier)
  while frontier:
    node = frontier.pop()
    for edge in behavior.out_edges(node):
      taken, always = passable(edge)
      if not taken:
        continue
      if edge.target not in graph:
        frontier.append(edge.target)
      if graph.has_edge(edge.source, edge.target):
        always = always or graph.edges[edge.source, edge.target]['always']
      graph.add_edge(edge.source, edge.target, always=always)
  return graph


def _firing_orders(run: _Run, budget: int) -> frozenset[tuple[str, ...]]:
  """Every order in which the token game can fire events one at a time."""
  memo: dict[tuple, frozenset[tuple[str, ...]]] = {}

  def explore(run: _Run, budget: int) -> frozenset[tuple[str, ...]]:
    ready = [n for n in run.behavior.nodes if run.enabled(n)]
    if not ready or not budget:
      return frozenset({()})
    key = (run.state(), budget)
    if key not in memo:
      found: set[tuple[str, ...]] = set()
      for event in ready:
        branch = run.copy()
        branch.tokens.update(branch.fire(event))
        found.update((event, *rest) for rest in explore(branch, budget - 1))
      memo[key] = frozenset(found)
    return memo[key]

  return explore(run, budget)


def all_traces(
  behavior: BehaviorGraph, scenario: Scenario, limit: int | None = None
) -> frozenset[tuple[str, ...]]:
  """Every event order the scenario admits, firing one event at a time.

  The same token game as simulate, so the maximal-step trace is always among them. Orders end
  when nothing is enabled or after max_steps firings.

  Raises:
    TooLarge: more than `limit` events are reachable (TM_TRACE_LIMIT by default).
    BehaviorCycle: the reachable edges hold a loop the bindings never leave.
    UnboundGuard: a run reads a guard key the scenario leaves unbound.
  """
  limit = limit or get_settings().trace_limit
  _check_scenario(behavior, scenario)
  graph = filtered_graph(behavior, scenario)
  if graph.number_of_nodes() > limit:
    raise TooLarge(f'{graph.number_of_nodes()} events exceed the limit of {limit}')
  endless = nx.DiGraph((u, v) for u, v, always in graph.edges(data='always') if always)
  if not nx.is_directed_acyclic_graph(endless):
    raise BehaviorCycle(', '.join(sorted(nx.find_cycle(endless)[0], key=natural_key)))
  return _firing_orders(_Run(behavior, scenario), scenario.max_steps)


def precedence_violations(trace: Trace, behavior: BehaviorGraph) -> list[str]:
  """Steps that fired before a mandatory predecessor, or with no enabling predecessor at all."""
  first_tick: dict[str, int] = {}
  problems = []
  for step in trace.steps:
    incoming = behavior.in_edges(step.event)
    for edge in incoming:
      if _mandatory(edge) and first_tick.get(edge.source, step.tick) >= step.tick:
        problems.append(f'{step.event}@{step.tick} before {edge.source}')
    if incoming and not any(first_tick.get(e.source, step.tick) < step.tick for e in incoming):
      problems.append(f'{step.event}@{step.tick} has no fired predecessor')
    first_tick.setdefault(step.event, step.tick)
  return problems
