"""Environment-driven settings and logging setup."""

import logging
import os
import sys
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError
from rich.console import Console
from rich.logging import RichHandler

from server.services.errors import ConfigError

load_dotenv('.env')
load_dotenv('.env.local')


def _flag(name: str, default: bool) -> bool:
  raw = os.environ.get(name)
  if raw is None or raw == '':
    return default
  return raw.strip().lower() not in ('0', 'false', 'no', 'off')


class Settings(BaseModel):
  """Toolkit settings, read from `TM_*` environment variables."""

  color: bool = True
  log_level: str = 'WARNING'
  max_steps: int = Field(default=10000, gt=0)
  trace_limit: int = Field(default=12, gt=0)
  successor_table: Path | None = None

  @classmethod
  def from_env(cls) -> 'Settings':
    """Settings from `TM_*` variables, falling back to the defaults.

    Raises:
      ConfigError: a variable holds a value that is not usable.
    """
    table = os.environ.get('TM_SUCCESSOR_TABLE')
    raw = {
      'color': _flag('TM_COLOR', sys.stdout.isatty()),
      'log_level': os.environ.get('TM_LOG_LEVEL', 'WARNING').upper(),
      'max_steps': os.environ.get('TM_MAX_STEPS', '10000'),
      'trace_limit': os.environ.get('TM_TRACE_LIMIT', '12'),
      'successor_table': Path(table) if table else None,
    }
    try:
      return cls.model_validate(raw)
    except ValidationError as e:
      error = e.errors()[0]
      variable = f'TM_{str(error["loc"][0]).upper()}'
      raise ConfigError(f'{variable}: {error["msg"]}') from None


@lru_cache
def get_settings() -> Settings:
  """Settings from the environment, read once per process."""
  return Settings.from_env()


def _console(settings: Settings | None, stderr: bool) -> Console:
  settings = settings or get_settings()
  # Diagnostics contain `[code]` brackets, so markup stays off.
  options = {'stderr': stderr, 'markup': False, 'highlight': False, 'soft_wrap': True}
  if not settings.color:
    options['color_system'] = None
  return Console(**options)


def error_console(settings: Settings | None = None) -> Console:
  """Console on stderr for diagnostics and logs; colour follows TM_COLOR."""
  return _console(settings, stderr=True)


def report_console(settings: Settings | None = None) -> Console:
  """Console on stdout for human-readable reports."""
  return _console(settings, stderr=False)


def configure_logging(settings: Settings | None = None) -> None:
  """Route the `server` logger tree through a RichHandler on stderr."""
  settings = settings or get_settings()
  logger = logging.getLogger('server')
  logger.setLevel(settings.log_level)
  if not any(isinstance(h, RichHandler) for h in logger.handlers):
    handler = RichHandler(console=error_console(settings), show_path=False)
    logger.addHandler(handler)
