"""Graphviz DOT output for the static, overlay and behaviour views."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from server.services.events import BehaviorGraph, EventOverlay, natural_key
from server.services.model import ArcKind, Machine, StaticModel
from server.services.validator import simplify

DEFAULT_PALETTE = (
  'lightblue',
  'palegreen',
  'lightgoldenrod',
  'lightpink',
  'lightsalmon',
  'plum',
  'khaki',
  'lightcyan',
)


class RenderOptions(BaseModel):
  """Which view to draw, and how."""

  view: Literal['static', 'overlay', 'behavior'] = 'static'
  show_labels: bool = False
  simplified: bool = False
  palette: tuple[str, ...] = Field(default=DEFAULT_PALETTE, min_length=1)


def quote(text: str) -> str:
  """DOT double-quoted string."""
  return '"' + text.replace('\\', '\\\\').replace('"', '\\"').replace('\n', '\\n') + '"'


def _header(name: str) -> list[str]:
  return [
    f'digraph {quote(name)} {{',
    '  graph [rankdir=LR, compound=true];',
    '  node [shape=box, fontname="Helvetica"];',
    '  edge [fontname="Helvetica"];',
  ]


def _node_lines(
  model: StaticModel, owner: str, pad: str, opts: RenderOptions, fills: dict
) -> list[str]:
  _, storages, actions = model.members(owner)
  lines = []
  for s in storages:
    attrs = f'shape=cylinder, label={quote(f"store:{s.thing}")}'
    lines.append(f'{pad}{quote(s.id)} [{attrs}];')
  for a in actions:
    label = f'{a.kind.value}:{a.thing}'
    if opts.show_labels and a.label:
      label += f' ({a.label})'
    attrs = f'label={quote(label)}'
    if a.id in fills:
      attrs += f', style=filled, fillcolor={quote(fills[a.id])}'
    lines.append(f'{pad}{quote(a.id)} [{attrs}];')
  return lines


def _cluster(
  model: StaticModel, machine: Machine, depth: int, opts: RenderOptions, fills: dict
) -> list[str]:
  pad = '  ' * (depth + 1)
  lines = [
    f'{pad}subgraph {quote("cluster_" + machine.id)} {{',
    f'{pad}  label={quote(machine.name)};',
  ]
  lines += _node_lines(model, machine.id, pad + '  ', opts, fills)
  for child in model.children(machine.id):
    lines += _cluster(model, child, depth + 1, opts, fills)
  lines.append(f'{pad}}}')
  return lines


def _arc_lines(model: StaticModel) -> list[str]:
  lines = [f'  {quote(f.source)} -> {quote(f.target)};' for f in model.flows]
  for t in model.triggers:
    attrs = 'style=dashed'
    if t.guard:
      attrs += f', label={quote(f"[{t.guard}]")}'
    lines.append(f'  {quote(t.source)} -> {quote(t.target)} [{attrs}];')
  return lines


def _static_body(model: StaticModel, opts: RenderOptions, fills: dict) -> list[str]:
  lines = []
  for machine in model.children(None):
    lines += _cluster(model, machine, 0, opts, fills)
  return lines + _arc_lines(model)


def _shown(model: StaticModel, opts: RenderOptions) -> StaticModel:
  if opts.simplified and not model.simplified:
    return simplify(model)
  return model


def render_static(model: StaticModel, opts: RenderOptions | None = None) -> str:
  """Machines as nested clusters, actions as `kind:thing` nodes, triggers dashed."""
  opts = opts or RenderOptions()
  model = _shown(model, opts)
  lines = _header(model.name) + _static_body(model, opts, {})
  return '\n'.join([*lines, '}']) + '\n'


def render_overlay(
  model: StaticModel, overlay: EventOverlay, opts: RenderOptions | None = None
) -> str:
  """The static view with every covered action filled in its event's colour, plus a legend."""
  opts = opts or RenderOptions(view='overlay')
  model = _shown(model, opts)
  colors = {e.id: opts.palette[i % len(opts.palette)] for i, e in enumerate(overlay.events)}
  fills: dict[str, str] = {}
  for event in overlay.events:
    for action_id in event.region:
      fills.setdefault(action_id, colors[event.id])
  lines = _header(model.name) + _static_body(model, opts, fills)
  if overlay.events:
    lines += ['  subgraph "cluster_legend" {', '    label="events";']
    for event in overlay.events:
      text = f'{event.id}: {event.description}' if event.description else event.id
      lines.append(
        f'    {quote("legend:" + event.id)} [shape=note, style=filled, '
        f'fillcolor={quote(colors[event.id])}, label={quote(text)}];'
      )
    lines.append('  }')
  return '\n'.join([*lines, '}']) + '\n'


def render_behavior(
  behavior: BehaviorGraph,
  opts: RenderOptions | None = None,
  name: str = 'behavior',
  descriptions: dict[str, str] | None = None,
) -> str:
  """Events as nodes; trigger-derived edges dashed, guarded edges labelled `[k=v]`."""
  opts = opts or RenderOptions(view='behavior')
  descriptions = descriptions or {}
  lines = [
    f'digraph {quote(name)} {{',
    '  graph [rankdir=TB];',
    '  node [shape=ellipse, fontname="Helvetica"];',
    '  edge [fontname="Helvetica"];',
  ]
  for node in sorted(behavior.nodes, key=natural_key):
    label = node
    if opts.show_labels and descriptions.get(node):
      label = f'{node}: {descriptions[node]}'
    lines.append(f'  {quote(node)} [label={quote(label)}];')
  for edge in behavior.edges:
    attrs = []
    if edge.via is ArcKind.TRIGGER:
      attrs.append('style=dashed')
    if edge.guard:
      attrs.append(f'label={quote(f"[{edge.guard}]")}')
    suffix = f' [{", ".join(attrs)}]' if attrs else ''
    lines.append(f'  {quote(edge.source)} -> {quote(edge.target)}{suffix};')
  return '\n'.join([*lines, '}']) + '\n'


def render(
  view: str,
  model: StaticModel,
  overlay: EventOverlay | None = None,
  behavior: BehaviorGraph | None = None,
  opts: RenderOptions | None = None,
) -> str:
  """Dispatch on the view name."""
  opts = opts or RenderOptions(view=view)
  if view == 'static':
    return render_static(model, opts)
  if view == 'overlay':
    return render_overlay(model, overlay or EventOverlay(model=model.name), opts)
  if view == 'behavior':
    descriptions = {e.id: e.description for e in overlay.events} if overlay else None
    return render_behavior(behavior or BehaviorGraph(), opts, model.name, descriptions)
  raise ValueError(f'unknown view {view!r}')
