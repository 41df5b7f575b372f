"""The `.tm.json` interchange format."""

import json

import pytest

from server.services.errors import SchemaViolation
from server.services.schema import from_json, to_json
from server.services.validator import simplify


def test_json_round_trip(atm):
  assert from_json(to_json(atm)) == atm


def test_json_layout(atm):
  text = to_json(atm)
  document = json.loads(text)
  assert list(document) == sorted(document)
  assert 'simplified' not in document
  assert ', ' not in text.split('"label"')[0]
  flow = document['flows'][0]
  assert set(flow) == {'from', 'id', 'to'}
  assert flow['id'] == f'{flow["from"]} -> {flow["to"]}'
  guarded = [t for t in document['triggers'] if t.get('guard')]
  assert {'key': 'card', 'value': 'invalid'} in [t['guard'] for t in guarded]


def test_simplified_flag_only_when_set(atm):
  document = json.loads(to_json(simplify(atm)))
  assert document['simplified'] is True
  assert from_json(to_json(simplify(atm))).simplified


def test_invalid_json():
  with pytest.raises(SchemaViolation) as info:
    from_json('{"name": ')
  assert info.value.pointer == ''


def test_missing_field_pointer(atm):
  document = json.loads(to_json(atm))
  del document['flows'][0]['to']
  with pytest.raises(SchemaViolation) as info:
    from_json(json.dumps(document))
  assert info.value.pointer == '/flows/0/to'


def test_unknown_field_is_rejected(atm):
  document = json.loads(to_json(atm))
  document['actions'][3]['colour'] = 'red'
  with pytest.raises(SchemaViolation) as info:
    from_json(json.dumps(document))
  assert info.value.pointer == '/actions/3/colour'


def test_bad_kind(atm):
  document = json.loads(to_json(atm))
  document['actions'][0]['kind'] = 'destroy'
  with pytest.raises(SchemaViolation) as info:
    from_json(json.dumps(document))
  assert info.value.pointer == '/actions/0/kind'


def test_inconsistent_arc_id(atm):
  document = json.loads(to_json(atm))
  document['flows'][2]['id'] = 'something else'
  with pytest.raises(SchemaViolation) as info:
    from_json(json.dumps(document))
  assert info.value.pointer == '/flows/2/id'


def test_rejected_element_reported_by_index(atm):
  document = json.loads(to_json(atm))
  document['actions'][5]['owner'] = 'Nowhere'
  with pytest.raises(SchemaViolation) as info:
    from_json(json.dumps(document))
  assert info.value.pointer == '/actions/5'
  assert 'Nowhere' in info.value.message
