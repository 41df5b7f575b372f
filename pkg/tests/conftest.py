"""Shared fixtures: the bundled corpus, parsed once per session."""

import os

import pytest
from hypothesis import HealthCheck, settings

from server.config import get_settings
from server.corpus import corpus_text
from server.services.dsl import parse_model
from server.services.events import parse_overlay

settings.register_profile(
  'default', max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile(
  'acceptance', max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'default'))


@pytest.fixture(autouse=True)
def _plain_settings(monkeypatch):
  """Every test sees default settings, whatever the developer's `.env` says."""
  for name in ('TM_COLOR', 'TM_LOG_LEVEL', 'TM_MAX_STEPS', 'TM_TRACE_LIMIT', 'TM_SUCCESSOR_TABLE'):
    monkeypatch.delenv(name, raising=False)
  monkeypatch.setenv('TM_COLOR', '0')
  get_settings.cache_clear()
  yield
  get_settings.cache_clear()


@pytest.fixture(scope='session')
def atm_text():
  """Text of the bundled ATM model."""
  return corpus_text('atm.tm')


@pytest.fixture(scope='session')
def atm(atm_text):
  """The ATM withdrawal model."""
  return parse_model(atm_text, file='atm.tm')


@pytest.fixture(scope='session')
def atm_overlay(atm):
  """Twenty-three events over the ATM model, with its chronology."""
  return parse_overlay(corpus_text('atm.ev'), atm, file='atm.ev')


@pytest.fixture(scope='session')
def ordering():
  """The product ordering model."""
  return parse_model(corpus_text('ordering.tm'), file='ordering.tm')


@pytest.fixture(scope='session')
def ordering_overlay(ordering):
  """Events over the ordering model, including the retry loop."""
  return parse_overlay(corpus_text('ordering.ev'), ordering, file='ordering.ev')
