"""Well-formedness of the TM action grammar, plus the simplify/elaborate transforms."""

from __future__ import annotations

import dataclasses
import logging
from collections import Counter
from functools import lru_cache
from pathlib import Path
from typing import Literal, NamedTuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, computed_field

from server.config import get_settings
from server.services.errors import NotSimplified, NotValidated
from server.services.model import (
  Action,
  ActionKind,
  FlowArc,
  StaticModel,
  add_action,
  add_flow,
)

logger = logging.getLogger(__name__)

C, P, REL, T, RCV = (
  ActionKind.CREATE,
  ActionKind.PROCESS,
  ActionKind.RELEASE,
  ActionKind.TRANSFER,
  ActionKind.RECEIVE,
)

Pair = tuple[ActionKind, ActionKind]


class SuccessorTable(BaseModel):
  """Flow pairs the validator accepts, by action kind."""

  model_config = ConfigDict(frozen=True)

  intra: frozenset[Pair]
  boundary: frozenset[Pair]
  cross: frozenset[Pair]
  store_in: frozenset[ActionKind]
  store_out: frozenset[ActionKind]

  def allows_inside(self, pair: Pair) -> bool:
    """Whether a same-machine flow of this kind pair is legal."""
    return pair in self.intra or pair in self.boundary


DEFAULT_TABLE = SuccessorTable(
  intra=frozenset({(C, P), (C, REL), (RCV, P), (RCV, REL), (P, REL), (P, P)}),
  boundary=frozenset({(REL, T), (T, RCV)}),
  cross=frozenset({(T, T)}),
  store_in=frozenset({REL}),
  store_out=frozenset({RCV, P}),
)


def load_successor_table(path: str | Path) -> SuccessorTable:
  """Read a JSON table.

  Pair lists `intra`, `boundary`, `cross` hold `[from_kind, to_kind]` entries; `store_in` and
  `store_out` list the kinds that may store into or retrieve from a storage.
  """
  return SuccessorTable.model_validate_json(Path(path).read_text())


@lru_cache
def _configured_table(path: Path | None) -> SuccessorTable:
  if path is None:
    return DEFAULT_TABLE
  logger.info('successor table loaded from %s', path)
  return load_successor_table(path)


def active_table() -> SuccessorTable:
  """The table named by TM_SUCCESSOR_TABLE, or the built-in one."""
  return _configured_table(get_settings().successor_table)


class Violation(BaseModel):
  """One broken rule, tied to the element that breaks it."""

  model_config = ConfigDict(frozen=True)

  code: str
  element: str
  message: str
  severity: Literal['error', 'warning'] = 'error'


class ValidationReport(BaseModel):
  """Violations sorted by code, element and message."""

  violations: list[Violation]

  @computed_field
  @property
  def verdict(self) -> Literal['pass', 'fail']:
    """`fail` when any violation is an error."""
    return 'fail' if any(v.severity == 'error' for v in self.violations) else 'pass'

  @property
  def passed(self) -> bool:
    """True when the verdict is `pass`."""
    return self.verdict == 'pass'


def report_to_jsonl(report: ValidationReport) -> str:
  """One JSON object per violation, one per line."""
  return ''.join(v.model_dump_json() + '\n' for v in report.violations)


def _check_flow(model: StaticModel, flow: FlowArc, table: SuccessorTable, suspend: bool):
  src, dst = flow.source, flow.target
  if model.has_storage(dst) or model.has_storage(src):
    storage_id, other, allowed, verb = (
      (dst, src, table.store_in, 'store into')
      if model.has_storage(dst)
      else (src, dst, table.store_out, 'retrieve from')
    )
    storage = model.storage(storage_id)
    ok = (
      model.has_action(other)
      and model.action(other).kind in allowed
      and model.action(other).owner == storage.owner
    )
    if not ok:
      yield Violation(
        code='bad-successor', element=flow.id, message=f'{other} cannot {verb} {storage_id}'
      )
    return
  a, b = model.action(src), model.action(dst)
  pair = (a.kind, b.kind)
  label = f'{a.kind.value} -> {b.kind.value}'
  if a.owner == b.owner:
    if not table.allows_inside(pair):
      yield Violation(code='bad-successor', element=flow.id, message=f'{label} inside {a.owner}')
  elif not suspend and pair not in table.cross:
    yield Violation(
      code='cross-machine-flow',
      element=flow.id,
      message=f'{label} crosses {a.owner} -> {b.owner}; only transfer -> transfer may',
    )


def validate(
  model: StaticModel, table: SuccessorTable | None = None, suspend_boundary: bool = False
) -> ValidationReport:
  """Check every flow pair, receive reachability, create use, guard keys and flow acyclicity.

  With suspend_boundary, machine-crossing flows and receive reachability are not checked;
  that is how simplified models are validated.
  """
  table = table or active_table()
  violations: list[Violation] = []
  for flow in model.flows:
    violations.extend(_check_flow(model, flow, table, suspend_boundary))

  graph = model.flow_graph
  for action in model.actions:
    if action.kind is RCV and not suspend_boundary:
      sources = nx.ancestors(graph, action.id)
      if not any(model.has_storage(n) or model.action(n).kind is T for n in sources):
        violations.append(
          Violation(
            code='unreachable-receive',
            element=action.id,
            message='no transfer or storage flows into this receive',
          )
        )
    if action.kind is C and not model.out_flows(action.id) and not model.out_triggers(action.id):
      violations.append(
        Violation(code='dead-create', element=action.id, message='created thing goes nowhere')
      )
    guards = Counter(t.guard for t in model.out_triggers(action.id) if t.guard)
    keys = sorted({g.key for g in guards})
    if len(keys) > 1:
      violations.append(
        Violation(
          code='guard-keys',
          element=action.id,
          message=f'sibling triggers guard on several keys: {", ".join(keys)}',
        )
      )
    for guard in sorted((g for g, n in guards.items() if n > 1), key=str):
      violations.append(
        Violation(
          code='guard-keys',
          element=action.id,
          message=f'sibling triggers repeat the guard {guard}',
        )
      )

  for component in nx.strongly_connected_components(graph):
    if len(component) > 1:
      members = sorted(component)
      violations.append(
        Violation(
          code='flow-cycle',
          element=members[0],
          message=f'flow cycle through {", ".join(members)}',
        )
      )

  violations.sort(key=lambda v: (v.code, v.element, v.message))
  logger.debug('validated %s: %d violations', model.name, len(violations))
  return ValidationReport(violations=violations)


# ---------- transforms ----------
class BoundaryChain(NamedTuple):
  """release -> transfer | transfer -> receive on one thing."""

  release: str
  out: str
  into: str
  receive: str


def _all(model: StaticModel, ids: list[str], kind: ActionKind) -> bool:
  return all(model.has_action(n) and model.action(n).kind is kind for n in ids)


def find_boundary_chains(model: StaticModel) -> list[BoundaryChain]:
  """Release -> Transfer -> Transfer -> Receive chains whose only job is crossing a boundary."""
  chains = []

  def plain(action: Action, kind: ActionKind) -> bool:
    return action.kind is kind and not model.is_trigger_endpoint(action.id)

  def preds(node: str) -> list[str]:
    return [f.source for f in model.in_flows(node)]

  def succs(node: str) -> list[str]:
    return [f.target for f in model.out_flows(node)]

  for r in model.actions:
    if not plain(r, REL) or not preds(r.id) or not _all(model, succs(r.id), T):
      continue
    for t1_id in succs(r.id):
      t1 = model.action(t1_id)
      if t1.owner != r.owner or not plain(t1, T):
        continue
      if not _all(model, preds(t1_id), REL) or not _all(model, succs(t1_id), T):
        continue
      for t2_id in succs(t1_id):
        t2 = model.action(t2_id)
        if t2.owner == t1.owner or not plain(t2, T):
          continue
        if not _all(model, preds(t2_id), T) or not _all(model, succs(t2_id), RCV):
          continue
        for v_id in succs(t2_id):
          v = model.action(v_id)
          if v.owner != t2.owner or not plain(v, RCV):
            continue
          if not succs(v_id) or not _all(model, preds(v_id), T):
            continue
          chains.append(BoundaryChain(r.id, t1_id, t2_id, v_id))
  return sorted(chains)


def simplify(model: StaticModel) -> StaticModel:
  """Contract boundary chains into direct flows between their neighbours.

  A model with no chain to contract comes back unchanged, `simplified` flag included.

  Raises:
    NotValidated: the model does not pass validate.
  """
  report = validate(model, suspend_boundary=model.simplified)
  if not report.passed:
    raise NotValidated(f'{model.name}: {len(report.violations)} violations')
  eliminated = {node for chain in find_boundary_chains(model) for node in chain}
  if not eliminated:
    return model

  def survivors_after(node: str) -> set[str]:
    found, stack, seen = set(), [node], set()
    while stack:
      for flow in model.out_flows(stack.pop()):
        if flow.target in eliminated:
          if flow.target not in seen:
            seen.add(flow.target)
            stack.append(flow.target)
        else:
          found.add(flow.target)
    return found

  pairs = {
    (f.source, f.target)
    for f in model.flows
    if f.source not in eliminated and f.target not in eliminated
  }
  for flow in model.flows:
    if flow.source not in eliminated and flow.target in eliminated:
      pairs.update((flow.source, w) for w in survivors_after(flow.source))
  logger.debug('simplify %s: %d actions eliminated', model.name, len(eliminated))
  return dataclasses.replace(
    model,
    actions=tuple(a for a in model.actions if a.id not in eliminated),
    flows=tuple(FlowArc(source=u, target=w) for u, w in pairs),
    simplified=True,
  )


def _slug(node_id: str) -> str:
  return node_id.replace('.', '_')


def elaborate(model: StaticModel) -> StaticModel:
  """Expand machine-crossing flows of a simplified model into full boundary chains.

  Each crossing arc u -> w becomes u -> rel -> out | in -> rcv -> w, the new actions named
  `<slug>_rel`, `<slug>_out` in u's machine and `<slug>_in`, `<slug>_rcv` in w's machine.

  Raises:
    NotSimplified: the model is not marked simplified.
    NotValidated: the model fails validation with boundary rules suspended.
  """
  if not model.simplified:
    raise NotSimplified(model.name)
  report = validate(model, suspend_boundary=True)
  if not report.passed:
    raise NotValidated(f'{model.name}: {len(report.violations)} violations')

  def crossing(flow: FlowArc) -> bool:
    if not (model.has_action(flow.source) and model.has_action(flow.target)):
      return False
    a, b = model.action(flow.source), model.action(flow.target)
    return a.owner != b.owner and (a.kind, b.kind) != (T, T)

  expand = [f for f in model.flows if crossing(f)]
  kept = tuple(f for f in model.flows if not crossing(f))
  result = dataclasses.replace(model, flows=kept, simplified=False)
  for flow in expand:
    u, w = model.action(flow.source), model.action(flow.target)
    slug = f'{_slug(u.id)}__{_slug(w.id)}'
    inserted = [
      Action(id=f'{u.owner}.{slug}_rel', kind=REL, owner=u.owner, thing=u.thing),
      Action(id=f'{u.owner}.{slug}_out', kind=T, owner=u.owner, thing=u.thing),
      Action(id=f'{w.owner}.{slug}_in', kind=T, owner=w.owner, thing=u.thing),
      Action(id=f'{w.owner}.{slug}_rcv', kind=RCV, owner=w.owner, thing=u.thing),
    ]
    for action in inserted:
      result = add_action(result, action)
    path = [u.id, *(a.id for a in inserted), w.id]
    for source, target in zip(path, path[1:]):
      result = add_flow(result, FlowArc(source=source, target=target))
  logger.debug('elaborate %s: %d arcs expanded', model.name, len(expand))
  return result
