"""Sequence-diagram text import: every message becomes its own thing with a full action chain."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from server.services.diagnostics import ParseDiagnostic, SourceSpan, decode_source, end_span
from server.services.errors import DiagnosticError
from server.services.events import EventDef, EventOverlay, make_overlay
from server.services.model import (
  Action,
  ActionKind,
  FlowArc,
  Guard,
  Machine,
  StaticModel,
  Thing,
  TriggerArc,
  build_model,
)

logger = logging.getLogger(__name__)

MAX_ALT_DEPTH = 4

_IDENT = r'[A-Za-z_][A-Za-z0-9_]*'
HEADER_RE = re.compile(rf'model\s+({_IDENT})$')
PARTICIPANT_RE = re.compile(rf'participant\s+({_IDENT})$')
MESSAGE_RE = re.compile(rf'({_IDENT})\s*(-->|->)\s*({_IDENT})\s*:\s*(.*)$')
ALT_RE = re.compile(r'alt(?:\s*\[(.*)\])?$')
ELSE_RE = re.compile(r'else(?:\s*\[(.*)\])?$')
UNSUPPORTED_RE = re.compile(r'(loop|par|critical|opt|break|neg|ref|seq|strict)\b')


@dataclass(frozen=True)
class Message:
  """One arrow between two lifelines; `-->` marks a reply."""

  sender: str
  receiver: str
  label: str
  span: SourceSpan = field(compare=False)
  reply: bool = False


@dataclass(frozen=True)
class AltBranch:
  """One branch of an alt block with its guard text."""

  guard: str | None
  elements: tuple
  span: SourceSpan = field(compare=False)
  is_else: bool = False


@dataclass(frozen=True)
class AltBlock:
  """An alt fragment."""

  branches: tuple[AltBranch, ...]
  span: SourceSpan = field(compare=False)


@dataclass(frozen=True)
class SdDoc:
  """Participants in declaration order and the top-level interaction elements."""

  name: str
  participants: tuple[str, ...]
  elements: tuple

  def messages(self) -> list[Message]:
    """Every message in document order, branches included."""
    found: list[Message] = []

    def walk(elements):
      for element in elements:
        if isinstance(element, Message):
          found.append(element)
        else:
          for branch in element.branches:
            walk(branch.elements)

    walk(self.elements)
    return found


class _SdProblem(Exception):
  def __init__(self, span: SourceSpan, code: str, message: str):
    super().__init__(message)
    self.diagnostic = ParseDiagnostic(span=span, code=code, message=message)


def slugify(label: str) -> str:
  """Lowercase identifier built from a message label."""
  slug = re.sub(r'[^a-z0-9]+', '_', label.lower()).strip('_') or 'message'
  return f'm_{slug}' if slug[0].isdigit() else slug


def _unique(base: str, taken: set[str]) -> str:
  name, n = base, 1
  while name in taken:
    n += 1
    name = f'{base}_{n}'
  taken.add(name)
  return name


# ---------- parsing ----------
@dataclass
class _OpenAlt:
  """An alt block still being read."""

  span: SourceSpan
  guard: str | None
  at: SourceSpan
  is_else: bool = False
  elements: list = field(default_factory=list)
  done: list[AltBranch] = field(default_factory=list)

  def close_branch(self) -> None:
    if not self.elements:
      raise _SdProblem(self.at, 'EmptyBranch', 'alt branch has no messages')
    guard = self.guard.strip() if self.guard else None
    self.done.append(AltBranch(guard or None, tuple(self.elements), self.at, self.is_else))

  def open_else(self, guard: str | None, span: SourceSpan) -> None:
    self.guard, self.at, self.is_else, self.elements = guard, span, True, []


def _structure(text: str, file: str) -> SdDoc:
  name = None
  participants: list[str] = []
  root: list = []
  alts: list[_OpenAlt] = []

  def current() -> list:
    return alts[-1].elements if alts else root

  lines = text.split('\n')
  for number, raw in enumerate(lines, start=1):
    line = raw.strip()
    if not line or line.startswith('//'):
      continue
    span = SourceSpan(file=file, line=number, column=len(raw) - len(raw.lstrip()) + 1)
    if name is None:
      header = HEADER_RE.match(line)
      if not header:
        raise _SdProblem(span, 'SyntaxError', 'expected `model NAME` header')
      name = header.group(1)
      continue
    if match := PARTICIPANT_RE.match(line):
      if match.group(1) in participants:
        raise _SdProblem(span, 'Duplicate', f'participant {match.group(1)} declared twice')
      participants.append(match.group(1))
    elif match := MESSAGE_RE.match(line):
      sender, arrow, receiver, label = match.groups()
      for end in (sender, receiver):
        if end not in participants:
          raise _SdProblem(span, 'UnknownParticipant', f'{end} is not a declared participant')
      if sender == receiver:
        raise _SdProblem(span, 'SelfMessage', f'{sender} sends a message to itself')
      current().append(Message(sender, receiver, label.strip(), span, reply=arrow == '-->'))
    elif match := ALT_RE.match(line):
      if len(alts) >= MAX_ALT_DEPTH:
        raise _SdProblem(span, 'NestingTooDeep', f'alt nested deeper than {MAX_ALT_DEPTH}')
      alts.append(_OpenAlt(span=span, guard=match.group(1), at=span))
    elif match := ELSE_RE.match(line):
      if not alts:
        raise _SdProblem(span, 'SyntaxError', '`else` outside an alt block')
      alts[-1].close_branch()
      alts[-1].open_else(match.group(1), span)
    elif line == 'end':
      if not alts:
        raise _SdProblem(span, 'SyntaxError', '`end` outside an alt block')
      block = alts.pop()
      block.close_branch()
      current().append(AltBlock(tuple(block.done), block.span))
    elif match := UNSUPPORTED_RE.match(line):
      fragment = match.group(1)
      raise _SdProblem(span, 'UnsupportedFragment', f'`{fragment}` fragments are not imported')
    else:
      raise _SdProblem(span, 'SyntaxError', f'cannot read {line!r}')

  if name is None:
    raise _SdProblem(end_span(text, file), 'SyntaxError', 'expected `model NAME` header')
  if alts:
    raise _SdProblem(alts[-1].span, 'SyntaxError', 'alt block is never closed with `end`')
  return SdDoc(name=name, participants=tuple(participants), elements=tuple(root))


def parse_sd(source: str | bytes, file: str = '<input>') -> SdDoc:
  """Parse the sequence-diagram notation.

  Raises:
    DiagnosticError: syntax errors, unknown participants, self-messages, unsupported
      fragments, alt blocks nested too deep or with nothing earlier to anchor them.
  """
  text = decode_source(source)
  try:
    doc = _structure(text, file)
    _Weaver(doc).run()
  except _SdProblem as e:
    raise DiagnosticError([e.diagnostic]) from None
  logger.debug('parsed sequence diagram %s: %d messages', doc.name, len(doc.messages()))
  return doc


# ---------- translation ----------
@dataclass(frozen=True)
class _Chain:
  """The six actions one message turns into."""

  message: Message
  thing: str
  new: str
  rel: str
  out: str
  into: str
  rcv: str
  proc: str

  @property
  def actions(self) -> tuple[str, ...]:
    return (self.new, self.rel, self.out, self.into, self.rcv, self.proc)


class _Weaver:
  """Walks the diagram, naming things and linking chains with triggers.

  The walk state maps each lifeline to the document position of the latest message on it and
  the processes that message (or, after an alt block, each branch's latest one) ended in.
  """

  def __init__(self, doc: SdDoc):
    self.doc = doc
    self.things: set[str] = set()
    self.chains: list[_Chain] = []
    self.triggers: list[TriggerArc] = []
    self.anchors: set[tuple[str, str]] = set()
    self.alt_count = 0

  def run(self) -> _Weaver:
    self._elements(self.doc.elements, {p: (0, frozenset()) for p in self.doc.participants}, None)
    return self

  def _chain(self, m: Message) -> _Chain:
    thing = _unique(slugify(m.label), self.things)
    a, b = m.sender, m.receiver
    chain = _Chain(
      message=m,
      thing=thing,
      new=f'{a}.{thing}_new',
      rel=f'{a}.{thing}_rel',
      out=f'{a}.{thing}_out',
      into=f'{b}.{thing}_in',
      rcv=f'{b}.{thing}_rcv',
      proc=f'{b}.{thing}_proc',
    )
    self.chains.append(chain)
    return chain

  @staticmethod
  def _before(m: Message, state: dict) -> frozenset[str]:
    """Processes of the latest earlier message on the sender's or the receiver's lifeline."""
    (at_a, from_a), (at_b, from_b) = state[m.sender], state[m.receiver]
    if at_a == at_b:
      return from_a | from_b
    return from_a if at_a > at_b else from_b

  def _elements(self, elements, state: dict, guard: Guard | None) -> dict:
    state = dict(state)
    for element in elements:
      if isinstance(element, Message):
        chain = self._chain(element)
        for process in sorted(self._before(element, state)):
          self.triggers.append(TriggerArc(source=process, target=chain.new, guard=guard))
        guard = None
        latest = (len(self.chains), frozenset({chain.proc}))
        state[element.sender] = state[element.receiver] = latest
      else:
        state = self._alt(element, state)
    return state

  def _alt(self, block: AltBlock, state: dict) -> dict:
    self.alt_count += 1
    key = f'alt{self.alt_count}'
    values: set[str] = set()
    merged: dict[str, tuple[int, set[str]]] = {p: (0, set()) for p in state}
    for i, branch in enumerate(block.branches, start=1):
      first = branch.elements[0]
      anchors = self._before(first, state) if isinstance(first, Message) else frozenset()
      if not anchors:
        raise _SdProblem(
          branch.span,
          'UnanchoredAlt',
          'an alt branch must open with a message on a lifeline that already carried one',
        )
      for process in anchors:
        if (process, key) not in self.anchors and any(p == process for p, _ in self.anchors):
          raise _SdProblem(branch.span, 'AnchorReused', f'{process} already anchors an alt block')
        self.anchors.add((process, key))
      if branch.guard:
        base = slugify(branch.guard)
      else:
        base = 'else' if branch.is_else else f'branch{i}'
      guard = Guard(key, _unique(base, values))
      after = self._elements(branch.elements, state, guard)
      for participant, (at, processes) in after.items():
        merged[participant] = (max(merged[participant][0], at), merged[participant][1] | processes)
    return {p: (at, frozenset(processes)) for p, (at, processes) in merged.items()}


def sd_to_tm(doc: SdDoc) -> StaticModel:
  """Translate a diagram into a static model that passes validation.

  Each participant becomes a machine. Each message becomes a thing carried by
  create -> release -> transfer | transfer -> receive -> process. A message's create is
  triggered by the process of the latest earlier message on its sender's or receiver's
  lifeline, so messages sharing a lifeline keep their order. Alt branches guard those triggers
  with `altN=<branch>`.
  """
  weaver = _Weaver(doc).run()
  machines = [Machine(id=p, name=p) for p in doc.participants]
  things = [Thing(id=c.thing, name=c.thing, home=c.message.sender) for c in weaver.chains]
  actions, flows = [], []
  kinds = (
    ActionKind.CREATE,
    ActionKind.RELEASE,
    ActionKind.TRANSFER,
    ActionKind.TRANSFER,
    ActionKind.RECEIVE,
    ActionKind.PROCESS,
  )
  for chain in weaver.chains:
    for action_id, kind in zip(chain.actions, kinds):
      owner = action_id.split('.', 1)[0]
      label = chain.message.label if kind is ActionKind.CREATE else None
      actions.append(Action(id=action_id, kind=kind, owner=owner, thing=chain.thing, label=label))
    flows += [FlowArc(source=s, target=t) for s, t in zip(chain.actions, chain.actions[1:])]
  model = build_model(doc.name, machines, things, (), actions, flows, weaver.triggers)
  logger.debug(
    'imported %s: %d messages, %d triggers', doc.name, len(weaver.chains), len(weaver.triggers)
  )
  return model


def message_overlay(doc: SdDoc, model: StaticModel) -> EventOverlay:
  """One event per message, in document order, whose region is that message's six actions."""
  chains = _Weaver(doc).run().chains
  events = [
    EventDef(id=f'E{i}', region=frozenset(c.actions), description=c.message.label)
    for i, c in enumerate(chains, start=1)
  ]
  return make_overlay(model, events)
