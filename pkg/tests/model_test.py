"""Static model construction and navigation."""

import pytest

from server.services.errors import (
  CrossThingFlow,
  DanglingReference,
  DuplicateId,
  FlowCycle,
  InvalidId,
  SelfLoopArc,
  UnknownAction,
)
from server.services.model import (
  Action,
  ActionKind,
  ArcKind,
  FlowArc,
  Guard,
  Machine,
  Storage,
  Thing,
  TriggerArc,
  add_action,
  add_flow,
  add_machine,
  add_storage,
  add_thing,
  add_trigger,
  ancestors,
  build_model,
  children,
  machine_of_region,
  node_thing,
  successors,
)


def small_model():
  return build_model(
    'Shop',
    machines=[Machine('Customer', 'Customer'), Machine('Shop', 'Shop')],
    things=[Thing('Order', 'Order', 'Customer'), Thing('Bill', 'Bill', 'Shop')],
    actions=[
      Action('Customer.order_new', ActionKind.CREATE, 'Customer', 'Order'),
      Action('Customer.order_rel', ActionKind.RELEASE, 'Customer', 'Order'),
      Action('Shop.bill_new', ActionKind.CREATE, 'Shop', 'Bill'),
      Action('Shop.bill_proc', ActionKind.PROCESS, 'Shop', 'Bill'),
    ],
    flows=[
      FlowArc('Customer.order_new', 'Customer.order_rel'),
      FlowArc('Shop.bill_new', 'Shop.bill_proc'),
    ],
    triggers=[TriggerArc('Customer.order_rel', 'Shop.bill_new', Guard('ok', 'yes'))],
  )


def test_collections_are_sorted_by_id():
  model = small_model()
  assert [a.id for a in model.actions] == sorted(a.id for a in model.actions)
  assert [m.id for m in model.machines] == ['Customer', 'Shop']


def test_arc_ids():
  assert FlowArc('A.x', 'A.y').id == 'A.x -> A.y'
  assert TriggerArc('A.x', 'B.y').id == 'A.x ~> B.y'
  assert str(TriggerArc('A.x', 'B.y', Guard('card', 'valid')).guard) == 'card=valid'


def test_guard_parts_must_be_identifiers():
  with pytest.raises(InvalidId):
    Guard('card state', 'valid')


def test_add_action_to_unknown_machine():
  model = small_model()
  with pytest.raises(DanglingReference):
    add_action(model, Action('Bank.x', ActionKind.CREATE, 'Bank', 'Order'))


def test_add_action_with_unknown_thing():
  model = small_model()
  with pytest.raises(DanglingReference):
    add_action(model, Action('Shop.x', ActionKind.CREATE, 'Shop', 'Receipt'))


def test_action_id_must_be_owner_path():
  model = small_model()
  with pytest.raises(InvalidId):
    add_action(model, Action('Customer.x', ActionKind.PROCESS, 'Shop', 'Order'))


def test_duplicate_action():
  model = small_model()
  with pytest.raises(DuplicateId):
    add_action(model, Action('Shop.bill_new', ActionKind.CREATE, 'Shop', 'Bill'))


def test_machines_actions_and_storages_share_ids():
  model = small_model()
  model = add_machine(model, Machine('Shop.till', 'till', parent='Shop'))
  with pytest.raises(DuplicateId):
    add_storage(model, Storage('Shop.till', 'Shop', 'till', 'Bill'))


def test_thing_id_equals_name():
  with pytest.raises(InvalidId):
    add_thing(small_model(), Thing('Receipt', 'Bill2', 'Shop'))


def test_machine_parent_must_exist():
  with pytest.raises(DanglingReference):
    add_machine(small_model(), Machine('Bank.Vault', 'Vault', parent='Bank'))


def test_add_flow_rejections():
  model = small_model()
  with pytest.raises(SelfLoopArc):
    add_flow(model, FlowArc('Shop.bill_new', 'Shop.bill_new'))
  with pytest.raises(CrossThingFlow):
    add_flow(model, FlowArc('Customer.order_rel', 'Shop.bill_proc'))
  with pytest.raises(DuplicateId):
    add_flow(model, FlowArc('Shop.bill_new', 'Shop.bill_proc'))
  with pytest.raises(DanglingReference):
    add_flow(model, FlowArc('Shop.bill_new', 'Shop.nowhere'))
  with pytest.raises(FlowCycle):
    add_flow(model, FlowArc('Shop.bill_proc', 'Shop.bill_new'))


def test_triggers_may_cross_things_but_not_loop():
  model = small_model()
  model = add_trigger(model, TriggerArc('Shop.bill_proc', 'Customer.order_new'))
  assert len(model.triggers) == 2
  with pytest.raises(SelfLoopArc):
    add_trigger(model, TriggerArc('Shop.bill_proc', 'Shop.bill_proc'))
  with pytest.raises(DuplicateId):
    add_trigger(model, TriggerArc('Shop.bill_proc', 'Customer.order_new'))


def test_successors_ordered_by_arc_id(atm):
  found = successors(atm, 'BankSystem.cnum_proc')
  assert [s.target for s in found] == ['BankSystem.cnum_invalid', 'BankSystem.cnum_valid']
  assert all(s.kind is ArcKind.TRIGGER for s in found)
  assert [str(s.guard) for s in found] == ['card=invalid', 'card=valid']

  mixed = successors(atm, 'BankSystem.pin_proc')
  assert mixed[0] == (ArcKind.FLOW, 'BankSystem.pin_fetch', None, mixed[0].arc)
  assert [s.kind for s in mixed[1:]] == [ArcKind.TRIGGER, ArcKind.TRIGGER]


def test_successors_of_unknown_action(atm):
  with pytest.raises(UnknownAction):
    successors(atm, 'ATM.nothing')


def test_containment(atm):
  assert children(atm, None) == ['ATM', 'BankSystem', 'User']
  assert children(atm, 'BankSystem') == ['BankSystem.AccountSystem']
  assert ancestors(atm, 'BankSystem.AccountSystem') == ['BankSystem']
  assert ancestors(atm, 'User') == []


def test_machine_of_region(atm):
  region = ['BankSystem.pin_fetch', 'BankSystem.AccountSystem.pin_rcv']
  assert machine_of_region(atm, region) == {'BankSystem', 'BankSystem.AccountSystem'}
  inner = machine_of_region(atm, ['BankSystem.AccountSystem.bal_new'], include_ancestors=True)
  assert inner == {'BankSystem', 'BankSystem.AccountSystem'}


def test_node_thing(atm):
  assert node_thing(atm, 'BankSystem.AccountSystem.accounts') == 'AccountRecord'
  assert node_thing(atm, 'ATM.card_eject') == 'Card'
  with pytest.raises(UnknownAction):
    node_thing(atm, 'ATM.missing')


def test_graph_views(atm):
  flows = atm.flow_graph
  assert flows.has_edge('User.card_new', 'User.card_rel')
  assert not flows.has_edge('ATM.card_proc', 'ATM.cnum_new')
  assert atm.arc_graph.has_edge('ATM.card_proc', 'ATM.cnum_new')
  assert 'BankSystem.AccountSystem.accounts' in flows
