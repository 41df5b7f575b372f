"""The `tm` command line: check, transform, overlay, simulate, import and render models.

Artifacts go to stdout (or `-o FILE`), diagnostics to stderr. Exit codes: 0 success,
1 validation or behaviour-check failure, 2 usage or parse error.
"""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click

from server.config import configure_logging, error_console, get_settings, report_console
from server.services.dsl import parse_model, print_model
from server.services.errors import ConfigError, DiagnosticError, SchemaViolation, TmError
from server.services.events import (
  BehaviorGraph,
  EventOverlay,
  check_behavior,
  check_coverage,
  infer_behavior,
  parse_overlay,
  print_chronology,
  print_overlay,
)
from server.services.model import StaticModel
from server.services.render import RenderOptions, render
from server.services.schema import from_json, to_json
from server.services.sd_import import message_overlay, parse_sd, sd_to_tm
from server.services.simulator import parse_scenario, simulate, trace_to_jsonl
from server.services.validator import elaborate, report_to_jsonl, simplify, validate

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_USAGE = 2

INPUT = click.Path(exists=True, dir_okay=False, path_type=Path)
OUTPUT = click.Path(dir_okay=False, writable=True, path_type=Path)


def _output_option(command):
  return click.option(
    '-o', '--output', type=OUTPUT, default=None, help='Write the artifact to FILE, not stdout.'
  )(command)


def _reports_errors(command):
  """Print TmErrors to stderr and turn them into exit codes."""

  @functools.wraps(command)
  def wrapper(*args, **kwargs):
    try:
      return command(*args, **kwargs)
    except DiagnosticError as e:
      console = error_console()
      for diagnostic in e.diagnostics:
        console.print(str(diagnostic), style='red' if diagnostic.severity == 'error' else 'yellow')
      sys.exit(EXIT_USAGE)
    except SchemaViolation as e:
      error_console().print(f'schema violation at {e.pointer or "/"}: {e.message}', style='red')
      sys.exit(EXIT_USAGE)
    except TmError as e:
      error_console().print(f'{type(e).__name__}: {e}', style='red')
      sys.exit(EXIT_FAILED)

  return wrapper


def _emit(text: str, output: Path | None) -> None:
  if output is None:
    click.echo(text, nl=False)
    return
  output.write_text(text, encoding='utf-8')
  logger.info('wrote %s', output)


def load_model(path: Path) -> StaticModel:
  """Read a `.tm` file, or a `.tm.json` file when the name ends in `.json`."""
  if path.suffix == '.json':
    return from_json(path.read_bytes())
  return parse_model(path.read_bytes(), file=str(path))


def _load_overlay(model: StaticModel, path: Path) -> EventOverlay:
  return parse_overlay(path.read_bytes(), model, file=str(path))


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.option('-v', '--verbose', count=True, help='Log more; repeat for debug output.')
def tm(verbose: int) -> None:
  """Thinging Machine toolkit."""
  try:
    settings = get_settings()
  except ConfigError as e:
    raise click.UsageError(str(e)) from None
  if verbose:
    level = 'DEBUG' if verbose > 1 else 'INFO'
    settings = settings.model_copy(update={'log_level': level})
  configure_logging(settings)


@tm.command()
@click.argument('model_file', type=INPUT)
@click.option('--jsonl', is_flag=True, help='Print the report as JSON lines.')
@_output_option
@_reports_errors
def check(model_file: Path, jsonl: bool, output: Path | None) -> None:
  """Validate a static model against the successor table and structural rules."""
  model = load_model(model_file)
  report = validate(model, suspend_boundary=model.simplified)
  if jsonl or output is not None:
    _emit(report_to_jsonl(report), output)
  else:
    console = report_console()
    for v in report.violations:
      console.print(f'{v.severity}: [{v.code}] {v.element}: {v.message}', style='red')
    summary = f'{model.name}: {report.verdict} ({len(report.violations)} violations)'
    console.print(summary, style='green' if report.passed else 'red')
  if not report.passed:
    sys.exit(EXIT_FAILED)


@tm.command('simplify')
@click.argument('model_file', type=INPUT)
@click.option('--json', 'as_json', is_flag=True, help='Print the `.tm.json` form.')
@_output_option
@_reports_errors
def simplify_command(model_file: Path, as_json: bool, output: Path | None) -> None:
  """Contract boundary release/transfer/receive chains into direct flows."""
  result = simplify(load_model(model_file))
  _emit(to_json(result) + '\n' if as_json else print_model(result), output)


@tm.command('elaborate')
@click.argument('model_file', type=INPUT)
@click.option('--json', 'as_json', is_flag=True, help='Print the `.tm.json` form.')
@_output_option
@_reports_errors
def elaborate_command(model_file: Path, as_json: bool, output: Path | None) -> None:
  """Expand the machine-crossing flows of a simplified model into full chains."""
  result = elaborate(load_model(model_file))
  _emit(to_json(result) + '\n' if as_json else print_model(result), output)


@tm.command()
@click.argument('model_file', type=INPUT)
@click.argument('overlay_file', type=INPUT)
@click.option('--json', 'as_json', is_flag=True, help='Print the coverage report as JSON.')
@_output_option
@_reports_errors
def events(model_file: Path, overlay_file: Path, as_json: bool, output: Path | None) -> None:
  """Check event regions and report actions no event covers."""
  model = load_model(model_file)
  overlay = _load_overlay(model, overlay_file)
  coverage = check_coverage(overlay, model)
  if as_json or output is not None:
    _emit(coverage.model_dump_json() + '\n', output)
    return
  console = report_console()
  for event in overlay.events:
    console.print(f'{event.id}: {len(event.region)} actions  {event.description}'.rstrip())
  for action_id in coverage.uncovered:
    console.print(f'warning: {action_id} is not in any event', style='yellow')
  console.print(f'{overlay.model}: {coverage.events} events, {len(coverage.uncovered)} uncovered')


@tm.command()
@click.argument('model_file', type=INPUT)
@click.argument('overlay_file', type=INPUT)
@click.option('--declared', is_flag=True, help='Diff the chronology block against inference.')
@_output_option
@_reports_errors
def behavior(model_file: Path, overlay_file: Path, declared: bool, output: Path | None) -> None:
  """Print the inferred behaviour graph, or its diff with the declared one."""
  model = load_model(model_file)
  overlay = _load_overlay(model, overlay_file)
  inferred = infer_behavior(model, overlay)
  if not declared:
    _emit(print_chronology(inferred), output)
    return
  if overlay.declared is None:
    raise click.UsageError(f'{overlay_file} has no chronology block')
  diff = check_behavior(overlay.declared, inferred)
  lines = [f'missing: {e}' for e in diff.missing] + [f'extra: {e}' for e in diff.extra]
  _emit(''.join(f'{line}\n' for line in lines), output)
  if not diff.empty:
    error_console().print(
      f'{len(diff.missing)} missing, {len(diff.extra)} extra behaviour edges', style='red'
    )
    sys.exit(EXIT_FAILED)


def _behavior_for(model: StaticModel, overlay: EventOverlay, declared: bool) -> BehaviorGraph:
  if declared:
    if overlay.declared is None:
      raise click.UsageError('--declared needs a chronology block in the overlay')
    return overlay.declared
  return infer_behavior(model, overlay)


@tm.command('simulate')
@click.argument('model_file', type=INPUT)
@click.argument('overlay_file', type=INPUT)
@click.argument('scenario_file', type=INPUT)
@click.option('--declared', is_flag=True, help='Run the declared chronology, not the inferred.')
@click.option('--max-steps', type=click.IntRange(min=1), default=None, help='Override max_steps.')
@_output_option
@_reports_errors
def simulate_command(
  model_file: Path,
  overlay_file: Path,
  scenario_file: Path,
  declared: bool,
  max_steps: int | None,
  output: Path | None,
) -> None:
  """Run a scenario and print the trace as JSON lines."""
  model = load_model(model_file)
  overlay = _load_overlay(model, overlay_file)
  scenario = parse_scenario(scenario_file.read_bytes(), file=str(scenario_file))
  if max_steps is not None:
    scenario = scenario.model_copy(update={'max_steps': max_steps})
  if scenario.model and scenario.model != model.name:
    logger.warning(
      'scenario %s is written for %s, not %s', scenario.name, scenario.model, model.name
    )
  trace = simulate(model, overlay, _behavior_for(model, overlay, declared), scenario)
  _emit(trace_to_jsonl(trace), output)
  if trace.terminal == 'deadlocked':
    message = f'{scenario.name}: deadlocked after {len(trace.steps)} steps'
    error_console().print(message, style='red')
    sys.exit(EXIT_FAILED)


@tm.command('import-sd')
@click.argument('sd_file', type=INPUT)
@click.option('--events', 'events_file', type=OUTPUT, default=None, help='Also write an overlay.')
@_output_option
@_reports_errors
def import_sd(sd_file: Path, events_file: Path | None, output: Path | None) -> None:
  """Translate a sequence diagram into a `.tm` model."""
  doc = parse_sd(sd_file.read_bytes(), file=str(sd_file))
  model = sd_to_tm(doc)
  _emit(print_model(model), output)
  if events_file is not None:
    overlay = message_overlay(doc, model)
    events_file.write_text(print_overlay(overlay), encoding='utf-8')


@tm.command('render')
@click.option(
  '--view',
  type=click.Choice(['static', 'overlay', 'behavior']),
  default='static',
  show_default=True,
)
@click.argument('model_file', type=INPUT)
@click.argument('overlay_file', type=INPUT, required=False)
@click.option('--labels', is_flag=True, help='Show action labels and event descriptions.')
@click.option('--simplified', is_flag=True, help='Simplify the model before drawing it.')
@click.option('--declared', is_flag=True, help='Draw the declared chronology.')
@_output_option
@_reports_errors
def render_command(
  view: str,
  model_file: Path,
  overlay_file: Path | None,
  labels: bool,
  simplified: bool,
  declared: bool,
  output: Path | None,
) -> None:
  """Print Graphviz DOT for the static, overlay or behaviour view."""
  model = load_model(model_file)
  overlay = behavior_graph = None
  if view != 'static':
    if overlay_file is None:
      raise click.UsageError(f'--view={view} needs an overlay file')
    overlay = _load_overlay(model, overlay_file)
  if view == 'behavior':
    behavior_graph = _behavior_for(model, overlay, declared)
  opts = RenderOptions(view=view, show_labels=labels, simplified=simplified)
  _emit(render(view, model, overlay, behavior_graph, opts), output)


def main(argv: list[str] | None = None) -> int:
  """Entry point: run the group and return its exit code."""
  try:
    tm.main(args=argv, prog_name='tm', standalone_mode=False)
  except click.ClickException as e:
    e.show()
    return EXIT_USAGE if isinstance(e, click.UsageError) else e.exit_code
  except click.exceptions.Abort:
    return EXIT_FAILED
  except SystemExit as e:
    return e.code if isinstance(e.code, int) else EXIT_FAILED
  return 0


if __name__ == '__main__':
  sys.exit(main())
