"""The `.tm` text format: parser and canonical printer."""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from dataclasses import dataclass, field

from lark import Lark, Token, Tree

from server.services.diagnostics import ParseDiagnostic, meta_span, parse_tree
from server.services.errors import DiagnosticError, ModelError
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

TM_GRAMMAR = r"""
start: "model" NAME SIMPLIFIED? _item*
_item: machine | flow | trigger
machine: "machine" NAME "{" _member* "}"
_member: thing | action | store | machine | flow | trigger
thing: "thing" NAME
action: "action" NAME ":" KIND "of" NAME ("#" ESCAPED_STRING)?
store: "store" NAME "of" NAME
flow: "flow" REF "->" REF
trigger: "trigger" REF "~>" REF guard?
guard: "[" NAME "=" NAME "]"

SIMPLIFIED: "simplified"
KIND: "create" | "process" | "release" | "transfer" | "receive"
REF: NAME ("." NAME)*
NAME: /[A-Za-z_][A-Za-z0-9_]*/
COMMENT: /\/\/[^\n]*/

%import common.ESCAPED_STRING
%import common.WS
%ignore WS
%ignore COMMENT
"""

_parser = Lark(TM_GRAMMAR, parser='lalr', propagate_positions=True)


@dataclass
class _Collected:
  """Elements read from the tree, each with the node it came from."""

  machines: list = field(default_factory=list)
  things: list = field(default_factory=list)
  storages: list = field(default_factory=list)
  actions: list = field(default_factory=list)
  flows: list = field(default_factory=list)
  triggers: list = field(default_factory=list)


def guard_of(node: Tree | None) -> Guard | None:
  """Guard from a `[key=value]` subtree, shared with the overlay format."""
  if node is None:
    return None
  key, value = node.children
  return Guard(str(key), str(value))


def _collect(node: Tree, parent: str | None, out: _Collected, errors: list) -> None:
  if node.data == 'machine':
    name = str(node.children[0])
    machine_id = f'{parent}.{name}' if parent else name
    out.machines.append((node, Machine(id=machine_id, name=name, parent=parent)))
    for child in node.children[1:]:
      _collect(child, machine_id, out, errors)
  elif node.data == 'thing':
    name = str(node.children[0])
    out.things.append((node, Thing(id=name, name=name, home=parent)))
  elif node.data == 'store':
    name, thing = (str(t) for t in node.children)
    storage = Storage(id=f'{parent}.{name}', owner=parent, name=name, thing=thing)
    out.storages.append((node, storage))
  elif node.data == 'action':
    name, kind, thing, *rest = node.children
    label = None
    if rest:
      try:
        label = json.loads(rest[0])
      except json.JSONDecodeError:
        errors.append((node, 'SyntaxError', f'bad label escape in {rest[0]}'))
        return
    action = Action(
      id=f'{parent}.{name}', kind=ActionKind(str(kind)), owner=parent, thing=str(thing), label=label
    )
    out.actions.append((node, action))
  elif node.data == 'flow':
    source, target = (str(t) for t in node.children)
    out.flows.append((node, FlowArc(source=source, target=target)))
  elif node.data == 'trigger':
    source, target, *rest = node.children
    guard = guard_of(rest[0] if rest else None)
    out.triggers.append((node, TriggerArc(source=str(source), target=str(target), guard=guard)))


def parse_model(source: str | bytes, file: str = '<input>') -> StaticModel:
  """Parse `.tm` text into a static model.

  Args:
    source: UTF-8 text or bytes.
    file: name used in diagnostic spans.

  Returns:
    The model, satisfying every core-model invariant.

  Raises:
    DiagnosticError: syntax errors, or elements the core model rejects (DuplicateId,
      DanglingReference, CrossThingFlow, ...), each reported with its span.
  """
  text, tree = parse_tree(_parser, source, file)
  name_token: Token = tree.children[0]
  simplified = any(isinstance(c, Token) and c.type == 'SIMPLIFIED' for c in tree.children[1:])
  collected = _Collected()
  problems: list[tuple[Tree, str, str]] = []
  for child in tree.children:
    if isinstance(child, Tree):
      _collect(child, None, collected, problems)

  diagnostics = [
    ParseDiagnostic(span=meta_span(node.meta, file), code=code, message=message)
    for node, code, message in problems
  ]
  model = StaticModel(name=str(name_token), simplified=simplified)
  steps: list[tuple[list, Callable]] = [
    (collected.machines, add_machine),
    (collected.things, add_thing),
    (collected.storages, add_storage),
    (collected.actions, add_action),
    (collected.flows, add_flow),
    (collected.triggers, add_trigger),
  ]
  for elements, adder in steps:
    for node, element in elements:
      try:
        model = adder(model, element)
      except ModelError as e:
        diagnostics.append(
          ParseDiagnostic(span=meta_span(node.meta, file), code=type(e).__name__, message=str(e))
        )
  if diagnostics:
    raise DiagnosticError(sorted(diagnostics, key=lambda d: (d.span.line, d.span.column)))
  logger.debug(
    'parsed %s (%d chars): %d machines, %d actions',
    model.name,
    len(text),
    len(model.machines),
    len(model.actions),
  )
  return model


def _machine_block(model: StaticModel, machine: Machine, depth: int) -> list[str]:
  pad = '  ' * depth
  things, storages, actions = model.members(machine.id)
  lines = [f'{pad}machine {machine.name} {{']
  lines += [f'{pad}  thing {t.name}' for t in things]
  lines += [f'{pad}  store {s.name} of {s.thing}' for s in storages]
  for a in actions:
    line = f'{pad}  action {a.name}: {a.kind.value} of {a.thing}'
    if a.label is not None:
      line += f' # {json.dumps(a.label, ensure_ascii=False)}'
    lines.append(line)
  for child in model.children(machine.id):
    lines += _machine_block(model, child, depth + 1)
  lines.append(f'{pad}}}')
  return lines


def format_trigger(trigger: TriggerArc) -> str:
  """`trigger a ~> b [k=v]` line for one trigger arc."""
  text = f'trigger {trigger.source} ~> {trigger.target}'
  return f'{text} [{trigger.guard}]' if trigger.guard else text


def print_model(model: StaticModel) -> str:
  """Canonical `.tm` text: machines nested by containment, then flows, then triggers."""
  lines = [f'model {model.name} simplified' if model.simplified else f'model {model.name}']
  for machine in model.children(None):
    lines.append('')
    lines += _machine_block(model, machine, 0)
  if model.flows:
    lines.append('')
    lines += [f'flow {f.source} -> {f.target}' for f in model.flows]
  if model.triggers:
    lines.append('')
    lines += [format_trigger(t) for t in model.triggers]
  return '\n'.join(lines) + '\n'
