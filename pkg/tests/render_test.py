"""DOT rendering of the three views."""

import pytest

from server.services.dot_check import check_dot, parse_dot
from server.services.events import infer_behavior
from server.services.render import (
  RenderOptions,
  quote,
  render,
  render_behavior,
  render_overlay,
  render_static,
)


def test_quote():
  assert quote('plain') == '"plain"'
  assert quote('say "hi"\\') == '"say \\"hi\\"\\\\"'
  assert quote('two\nlines') == '"two\\nlines"'


def test_static_view(atm):
  text = render_static(atm)
  assert text == render_static(atm)
  assert check_dot(text) == []
  graph = parse_dot(text)
  assert graph.directed
  assert graph.name == 'ATM'
  assert set(graph.nodes) == {a.id for a in atm.actions} | {s.id for s in atm.storages}
  assert graph.nodes['User.card_new']['label'] == 'create:Card'
  assert graph.nodes['BankSystem.AccountSystem.accounts']['shape'] == 'cylinder'
  assert len(graph.edges) == len(atm.flows) + len(atm.triggers)


def test_machines_nest_as_clusters(atm):
  graph = parse_dot(render_static(atm))
  inner = graph.subgraph('cluster_BankSystem.AccountSystem')
  assert inner.parent == 'cluster_BankSystem'
  assert 'BankSystem.AccountSystem.accounts' in inner.nodes
  assert graph.subgraph('cluster_User').parent is None


def test_triggers_are_dashed_and_guarded(atm):
  graph = parse_dot(render_static(atm))
  [edge] = [
    e
    for e in graph.edges
    if (e.source, e.target) == ('BankSystem.cnum_proc', 'BankSystem.cnum_invalid')
  ]
  assert edge.attrs == {'style': 'dashed', 'label': '[card=invalid]'}
  [flow] = [e for e in graph.edges if (e.source, e.target) == ('User.card_new', 'User.card_rel')]
  assert flow.attrs == {}


def test_labels_are_optional(atm):
  graph = parse_dot(render_static(atm, RenderOptions(show_labels=True)))
  assert graph.nodes['User.card_new']['label'] == 'create:Card (1)'


def test_simplified_view(atm):
  graph = parse_dot(render_static(atm, RenderOptions(simplified=True)))
  assert 'ATM.card_rcv' not in graph.nodes
  assert any((e.source, e.target) == ('User.card_new', 'ATM.card_proc') for e in graph.edges)


def test_overlay_view(atm, atm_overlay):
  text = render_overlay(atm, atm_overlay)
  graph = parse_dot(text)
  assert graph.nodes['User.card_new']['fillcolor'] == 'lightblue'
  assert graph.nodes['ATM.card_proc']['fillcolor'] == 'palegreen'
  legend = graph.subgraph('cluster_legend')
  assert len(legend.nodes) == 23
  assert graph.nodes['legend:E1']['label'] == 'E1: user inserts card'


def test_palette_wraps(atm, atm_overlay):
  graph = parse_dot(render_overlay(atm, atm_overlay, RenderOptions(palette=('red', 'blue'))))
  assert graph.nodes['legend:E1']['fillcolor'] == 'red'
  assert graph.nodes['legend:E3']['fillcolor'] == 'red'
  assert graph.nodes['legend:E4']['fillcolor'] == 'blue'


def test_behavior_view(atm, atm_overlay):
  behavior = infer_behavior(atm, atm_overlay)
  graph = parse_dot(render_behavior(behavior, name='ATM'))
  assert list(graph.nodes) == [f'E{i}' for i in range(1, 24)]
  assert len(graph.edges) == 25
  [guarded] = [e for e in graph.edges if (e.source, e.target) == ('E3', 'E4')]
  assert guarded.attrs == {'style': 'dashed', 'label': '[card=invalid]'}

  described = render(
    'behavior', atm, atm_overlay, behavior, RenderOptions(view='behavior', show_labels=True)
  )
  assert parse_dot(described).nodes['E1']['label'] == 'E1: user inserts card'


def test_unknown_view(atm):
  with pytest.raises(ValueError):
    render('sideways', atm)
