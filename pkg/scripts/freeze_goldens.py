"""Rewrite the bundled corpus in canonical form and render its DOT goldens."""

import sys
from pathlib import Path

import click

from server.corpus import corpus_path, corpus_text
from server.services.dsl import parse_model, print_model
from server.services.events import infer_behavior, parse_overlay
from server.services.render import RenderOptions, render

FIXTURES = (('atm.tm', 'atm.ev'), ('ordering.tm', 'ordering.ev'))
VIEWS = ('static', 'overlay', 'behavior')


def golden_files() -> dict[str, str]:
  """DOT text of every view of every fixture, keyed by golden file name."""
  goldens = {}
  for model_name, overlay_name in FIXTURES:
    model = parse_model(corpus_text(model_name), file=model_name)
    overlay = parse_overlay(corpus_text(overlay_name), model, file=overlay_name)
    behavior = infer_behavior(model, overlay)
    stem = model_name.removesuffix('.tm')
    for view in VIEWS:
      dot = render(view, model, overlay, behavior, RenderOptions(view=view))
      goldens[f'{stem}.{view}.dot'] = dot
  return goldens


@click.command()
@click.option('--output', default='tests/goldens', help='Directory for the DOT goldens.')
@click.option('--check', is_flag=True, help='Only report files that would change.')
def main(output: str, check: bool) -> None:
  """Canonicalize the `.tm` corpus and (re)write the DOT goldens."""
  stale = []
  for model_name, _ in FIXTURES:
    path = corpus_path(model_name)
    text = path.read_text(encoding='utf-8')
    canonical = print_model(parse_model(text, file=model_name))
    if canonical != text:
      stale.append(str(path))
      if not check:
        path.write_text(canonical, encoding='utf-8')

  out_dir = Path(output)
  for name, dot in golden_files().items():
    target = out_dir / name
    if target.exists() and target.read_text(encoding='utf-8') == dot:
      continue
    stale.append(str(target))
    if not check:
      out_dir.mkdir(parents=True, exist_ok=True)
      target.write_text(dot, encoding='utf-8')

  verb = 'stale' if check else 'rewrote'
  for name in stale:
    print(f'[freeze_goldens] {verb} {name}')
  if check and stale:
    sys.exit(1)


if __name__ == '__main__':
  main()
