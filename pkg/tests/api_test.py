"""HTTP endpoints, driven through the FastAPI test client."""

import pytest
from fastapi.testclient import TestClient

from server.app import app
from server.corpus import corpus_text
from server.services.schema import from_json


@pytest.fixture(scope='module')
def client():
  with TestClient(app) as client:
    yield client


def atm_body(**extra):
  return {'source': corpus_text('atm.tm'), 'overlay': corpus_text('atm.ev'), **extra}


def test_health(client):
  response = client.get('/health')
  assert response.status_code == 200
  assert response.json() == {'status': 'healthy'}


def test_check(client):
  response = client.post('/api/models/check', json={'source': corpus_text('atm.tm')})
  assert response.status_code == 200
  body = response.json()
  assert body['model'] == 'ATM'
  assert body['report'] == {'violations': [], 'verdict': 'pass'}


def test_check_reports_syntax_errors(client):
  response = client.post('/api/models/check', json={'source': 'model M\nmachine {\n'})
  assert response.status_code == 422
  [diagnostic] = response.json()['detail']
  assert diagnostic['code'] == 'SyntaxError'
  assert diagnostic['span']['line'] == 2


def test_json_round_trip(client, atm):
  response = client.post('/api/models/json', json={'source': corpus_text('atm.tm')})
  assert response.status_code == 200
  document = response.json()
  assert 'simplified' not in document
  assert document['flows'][0].keys() == {'id', 'from', 'to'}

  checked = client.post('/api/models/check', json={'source': response.text, 'format': 'json'})
  assert checked.json()['report']['verdict'] == 'pass'
  assert from_json(response.text) == atm


def test_schema_violation(client):
  response = client.post('/api/models/check', json={'source': '[]', 'format': 'json'})
  assert response.status_code == 422
  assert response.json()['detail']['pointer'] == ''


def test_simplify_and_elaborate(client):
  simple = client.post('/api/models/simplify', json={'source': corpus_text('atm.tm')}).json()
  assert simple['simplified'] is True
  assert simple['source'].startswith('model ATM simplified\n')

  full = client.post('/api/models/elaborate', json={'source': simple['source']}).json()
  assert full['simplified'] is False
  assert 'action User_card_new__ATM_card_proc_rcv: receive of Card' in full['source']


def test_elaborate_unsimplified_is_a_bad_request(client):
  response = client.post('/api/models/elaborate', json={'source': corpus_text('atm.tm')})
  assert response.status_code == 400
  assert response.json()['detail'].startswith('NotSimplified')


def test_render(client):
  response = client.post('/api/models/render', json=atm_body(view='behavior'))
  assert response.status_code == 200
  assert response.json()['dot'].startswith('digraph "ATM" {')

  overlay_only = {'source': corpus_text('atm.tm'), 'view': 'overlay'}
  missing = client.post('/api/models/render', json=overlay_only)
  assert missing.status_code == 400


def test_coverage(client):
  body = {'source': corpus_text('ordering.tm'), 'overlay': corpus_text('ordering.ev')}
  response = client.post('/api/events/coverage', json=body)
  assert response.json() == {
    'events': 20,
    'uncovered': ['Customer.attr_product', 'Customer.attr_quantity'],
  }


def test_behavior(client):
  response = client.post('/api/events/behavior', json=atm_body(declared=True))
  body = response.json()
  assert len(body['events']) == 23
  assert 'E3 ~> E4 [card=invalid]' in body['edges']
  assert body['guarded_acyclic'] is True
  assert body['diff'] == {'missing': [], 'extra': []}


def test_bad_overlay(client):
  empty = atm_body(overlay='events ATM\nevent E1 {}\n')
  response = client.post('/api/events/behavior', json=empty)
  assert response.status_code == 422
  assert response.json()['detail'][0]['code'] == 'EmptyRegion'


def test_simulate(client):
  body = atm_body(scenario=corpus_text('happy.scn'))
  response = client.post('/api/events/simulate', json=body)
  assert response.status_code == 200
  body = response.json()
  assert body['scenario'] == 'happy'
  assert body['terminal'] == 'completed'
  assert body['steps'][-1] == {'tick': 16, 'event': 'E22'}


def test_simulate_unbound_guard(client):
  body = atm_body(scenario='scenario s on ATM\nbind card = valid\n')
  response = client.post('/api/events/simulate', json=body)
  assert response.status_code == 400
  assert response.json()['detail'].startswith('UnboundGuard')


def test_import_sd(client):
  response = client.post('/api/sd/import', json={'source': corpus_text('atm.sd')})
  body = response.json()
  assert body['name'] == 'ATMDialog'
  assert body['messages'] == 11
  assert body['model'].startswith('model ATMDialog\n')
  assert body['overlay'].startswith('events ATMDialog\n')


def test_import_sd_errors(client):
  source = 'model M\nparticipant A\nA -> B: x\n'
  response = client.post('/api/sd/import', json={'source': source})
  assert response.status_code == 422
  assert response.json()['detail'][0]['code'] == 'UnknownParticipant'
