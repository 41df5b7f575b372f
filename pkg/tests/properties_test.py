"""Property checks over generated models and over arbitrary parser input."""

import networkx as nx
from hypothesis import given
from hypothesis import strategies as st

from server.corpus import corpus_text
from server.services.dot_check import check_dot
from server.services.dsl import parse_model, print_model
from server.services.errors import DiagnosticError
from server.services.events import parse_overlay
from server.services.model import build_model
from server.services.render import render_static
from server.services.schema import from_json, to_json
from server.services.sd_import import parse_sd, sd_to_tm
from server.services.simulator import parse_scenario
from server.services.validator import elaborate, simplify, validate
from tests.strategies import model_parts, models


def reach(model, nodes):
  graph = model.flow_graph
  return {(u, w) for u in nodes for w in nx.descendants(graph, u) if w in nodes}


@given(models())
def test_generated_models_validate(model):
  assert validate(model).violations == []


@given(models())
def test_text_round_trip(model):
  text = print_model(model)
  assert parse_model(text) == model
  assert print_model(parse_model(text)) == text


@given(models())
def test_json_round_trip(model):
  assert from_json(to_json(model)) == model


@given(models())
def test_simplify_is_idempotent(model):
  once = simplify(model)
  assert simplify(once) == once
  assert validate(once, suspend_boundary=True).passed


@given(models())
def test_elaborate_keeps_reachability(model):
  simple = simplify(model)
  if not simple.simplified:
    assert simple is model
    return
  full = elaborate(simple)
  assert validate(full).passed
  kept = {a.id for a in simple.actions} | {s.id for s in simple.storages}
  assert reach(full, kept) == reach(model, kept)
  assert reach(simple, kept) == reach(model, kept)


@given(st.data())
def test_insertion_order_does_not_matter(data):
  parts = data.draw(model_parts())
  model = parts.build()
  shuffled = build_model(
    parts.name,
    data.draw(st.permutations(parts.machines)),
    data.draw(st.permutations(parts.things)),
    data.draw(st.permutations(parts.storages)),
    data.draw(st.permutations(parts.actions)),
    data.draw(st.permutations(parts.flows)),
    data.draw(st.permutations(parts.triggers)),
  )
  assert shuffled == model
  assert print_model(shuffled) == print_model(model)
  assert to_json(shuffled) == to_json(model)
  assert render_static(shuffled) == render_static(model)


@given(models(max_messages=3))
def test_static_render_is_valid_dot(model):
  assert check_dot(render_static(model)) == []


ATM = parse_model(corpus_text('atm.tm'), file='atm.tm')


def parses_or_diagnoses(parse, data):
  try:
    return parse(data)
  except DiagnosticError as e:
    assert e.diagnostics
    return None


@given(st.binary(max_size=200))
def test_model_parser_takes_any_bytes(data):
  parses_or_diagnoses(parse_model, data)


@given(st.binary(max_size=200))
def test_overlay_parser_takes_any_bytes(data):
  parses_or_diagnoses(lambda d: parse_overlay(d, ATM), data)


@given(st.binary(max_size=200))
def test_scenario_parser_takes_any_bytes(data):
  parses_or_diagnoses(parse_scenario, data)


@given(st.binary(max_size=200))
def test_diagram_parser_takes_any_bytes(data):
  doc = parses_or_diagnoses(parse_sd, data)
  if doc is not None:
    assert validate(sd_to_tm(doc)).passed


@given(st.text(alphabet='AB->: xy[]\nltendsparticip', max_size=120))
def test_diagram_parser_takes_any_text(text):
  doc = parses_or_diagnoses(parse_sd, 'model M\nparticipant A\nparticipant B\n' + text)
  if doc is not None:
    assert validate(sd_to_tm(doc)).passed
