"""Bundled example models: the ATM withdrawal and the product ordering system."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

SUFFIXES = ('.tm', '.ev', '.sd', '.scn')


def corpus_names() -> list[str]:
  """File names of every bundled fixture, sorted."""
  root = resources.files(__name__)
  return sorted(p.name for p in root.iterdir() if p.name.endswith(SUFFIXES))


def corpus_path(name: str) -> Path:
  """Filesystem path of a bundled fixture.

  Raises:
    FileNotFoundError: no fixture has that name.
  """
  path = Path(str(resources.files(__name__) / name))
  if not path.is_file():
    raise FileNotFoundError(f'no corpus file named {name!r}')
  return path


def corpus_text(name: str) -> str:
  """Text of a bundled fixture."""
  return corpus_path(name).read_text(encoding='utf-8')
