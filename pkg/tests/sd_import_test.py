"""Sequence-diagram import."""

import pytest

from server.corpus import corpus_text
from server.services.errors import DiagnosticError
from server.services.events import check_coverage, infer_behavior
from server.services.sd_import import message_overlay, parse_sd, sd_to_tm, slugify
from server.services.simulator import Scenario, all_traces, simulate
from server.services.validator import validate

HEAD = 'model M\nparticipant A\nparticipant B\n'


def problem(text):
  with pytest.raises(DiagnosticError) as info:
    parse_sd(text, file='t.sd')
  [diagnostic] = info.value.diagnostics
  return diagnostic


def test_single_message():
  model = sd_to_tm(parse_sd(HEAD + 'A -> B: hello\n'))
  assert [a.id for a in model.actions] == [
    'A.hello_new',
    'A.hello_out',
    'A.hello_rel',
    'B.hello_in',
    'B.hello_proc',
    'B.hello_rcv',
  ]
  assert len(model.flows) == 5
  assert model.triggers == ()
  assert model.thing('hello').home == 'A'
  assert model.action('A.hello_new').label == 'hello'


@pytest.mark.parametrize('count', [1, 2, 5])
def test_alternating_messages_are_chained(count):
  lines = ''.join(
    f'A -> B: note {i}\n' if i % 2 == 0 else f'B -> A: note {i}\n' for i in range(count)
  )
  model = sd_to_tm(parse_sd(HEAD + lines))
  assert len(model.actions) == 6 * count
  assert len(model.flows) == 5 * count
  assert len(model.triggers) == count - 1
  assert validate(model).passed


def test_repeated_labels_get_distinct_things():
  model = sd_to_tm(parse_sd(HEAD + 'A -> B: ping\nB -> A: ping\n'))
  assert [t.id for t in model.things] == ['ping', 'ping_2']
  assert [t.id for t in model.triggers] == ['B.ping_proc ~> B.ping_2_new']


def test_slugify():
  assert slugify('Insert Card!') == 'insert_card'
  assert slugify('3 items') == 'm_3_items'
  assert slugify('!!') == 'message'


def test_corpus_diagram():
  doc = parse_sd(corpus_text('atm.sd'), file='atm.sd')
  assert doc.participants == ('User', 'ATM', 'Bank')
  assert len(doc.messages()) == 11
  assert doc.messages()[2].reply

  model = sd_to_tm(doc)
  assert len(model.actions) == 66
  assert len(model.triggers) == 11
  assert validate(model).passed
  guards = {str(t.guard) for t in model.triggers if t.guard}
  assert guards == {'alt1=card_valid', 'alt1=card_invalid', 'alt2=pin_ok', 'alt2=else'}
  joined = {t.source for t in model.triggers if t.target == 'User.enter_pin_new'}
  assert joined == {'User.request_pin_proc', 'User.eject_card_proc'}


def test_message_overlay():
  doc = parse_sd(corpus_text('atm.sd'))
  model = sd_to_tm(doc)
  overlay = message_overlay(doc, model)
  assert [e.id for e in overlay.events][:3] == ['E1', 'E2', 'E3']
  assert overlay.event('E1').description == 'insert card'
  assert check_coverage(overlay, model).complete
  edges = {str(e) for e in infer_behavior(model, overlay).edges}
  assert 'E1 ~> E2' in edges
  assert 'E2 ~> E3 [alt1=card_valid]' in edges


@pytest.mark.parametrize(
  'body, code, line',
  [
    ('A -> C: hi\n', 'UnknownParticipant', 4),
    ('A -> A: hi\n', 'SelfMessage', 4),
    ('loop\nA -> B: hi\nend\n', 'UnsupportedFragment', 4),
    ('A -> B: hi\nelse\n', 'SyntaxError', 5),
    ('A -> B: hi\nB -> A: back\nalt [x]\nA -> B: more\n', 'SyntaxError', 6),
    ('alt [x]\nA -> B: hi\nend\n', 'UnanchoredAlt', 4),
    ('A -> B: hi\nalt [x]\nend\n', 'EmptyBranch', 5),
    ('participant A\n', 'Duplicate', 4),
    ('A => B: hi\n', 'SyntaxError', 4),
  ],
)
def test_diagram_problems(body, code, line):
  diagnostic = problem(HEAD + body)
  assert diagnostic.code == code
  assert diagnostic.span.line == line


def test_alt_nesting_is_bounded():
  body = 'A -> B: hi\n' + 'alt [x]\n' * 5
  diagnostic = problem(HEAD + body)
  assert diagnostic.code == 'NestingTooDeep'
  assert diagnostic.span.line == 9


def test_one_process_anchors_one_alt():
  body = (
    'participant C\nparticipant D\nA -> B: x\n'
    'alt [a]\nA -> C: y\nend\nalt [b]\nB -> D: z\nend\n'
  )
  assert problem(HEAD + body).code == 'AnchorReused'


def test_missing_header():
  assert problem('').code == 'SyntaxError'
  assert problem('participant A\n').code == 'SyntaxError'


def simulated(doc, bindings):
  model = sd_to_tm(doc)
  overlay = message_overlay(doc, model)
  behavior = infer_behavior(model, overlay)
  chosen = Scenario(name='s', bindings=bindings)
  return simulate(model, overlay, behavior, chosen), all_traces(behavior, chosen)


def test_messages_from_one_sender_keep_their_order():
  doc = parse_sd(HEAD + 'A -> B: x\nA -> B: y\n')
  model = sd_to_tm(doc)
  assert [str(t) for t in model.triggers] == ['B.x_proc ~> A.y_new']
  assert validate(model).passed
  assert [str(e) for e in infer_behavior(model, message_overlay(doc, model)).edges] == [
    'E1 ~> E2'
  ]
  trace, traces = simulated(doc, {})
  assert traces == {('E1', 'E2')}
  assert trace.events == ('E1', 'E2')
  assert [step.tick for step in trace.steps] == [0, 1]


@pytest.mark.parametrize('count', [2, 3, 6])
def test_same_direction_messages_are_chained(count):
  model = sd_to_tm(parse_sd(HEAD + ''.join(f'A -> B: note {i}\n' for i in range(count))))
  assert len(model.triggers) == count - 1
  assert validate(model).passed


DOOR = (
  HEAD + 'A -> B: knock\nalt [open]\nB -> A: welcome\nelse [closed]\nB -> A: go away\nend\n'
  'A -> B: bye\n'
)


@pytest.mark.parametrize(
  'branch, events', [('open', ('E1', 'E2', 'E4')), ('closed', ('E1', 'E3', 'E4'))]
)
def test_each_alt_branch_simulates(branch, events):
  trace, traces = simulated(parse_sd(DOOR), {'alt1': (branch,)})
  assert trace.events == events
  assert trace.terminal == 'completed'
  assert traces == {events}


@pytest.mark.parametrize(
  'card, pin, events',
  [
    ('card_valid', 'pin_ok', 'E1 E2 E3 E4 E7 E8 E9 E10'),
    ('card_valid', 'else', 'E1 E2 E3 E4 E7 E8 E11'),
    ('card_invalid', 'pin_ok', 'E1 E2 E5 E6 E7 E8 E9 E10'),
    ('card_invalid', 'else', 'E1 E2 E5 E6 E7 E8 E11'),
  ],
)
def test_corpus_diagram_branches_simulate(card, pin, events):
  doc = parse_sd(corpus_text('atm.sd'), file='atm.sd')
  trace, traces = simulated(doc, {'alt1': (card,), 'alt2': (pin,)})
  assert trace.events == tuple(events.split())
  assert trace.terminal == 'completed'
  assert traces == {trace.events}
