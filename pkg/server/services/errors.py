"""Exception hierarchy shared by the TM services."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
  from server.services.diagnostics import ParseDiagnostic


class TmError(Exception):
  """Base class for every error raised by the toolkit."""


# ---------- core model ----------
class ModelError(TmError):
  """A static-model mutation was rejected."""


class DuplicateId(ModelError):
  """An element id is already taken."""


class DanglingReference(ModelError):
  """An element refers to an id that does not exist."""


class SelfLoopArc(ModelError):
  """An arc starts and ends on the same action."""


class CrossThingFlow(ModelError):
  """A flow arc connects actions acting on different things."""


class FlowCycle(ModelError):
  """A flow arc would close a cycle on one thing."""


class InvalidId(ModelError):
  """An id does not follow the dotted-path convention."""


class UnknownAction(ModelError):
  """An action id is not part of the model."""


# ---------- text and wire formats ----------
class DiagnosticError(TmError):
  """Parsing failed; carries the diagnostics that explain why."""

  def __init__(self, diagnostics: list[ParseDiagnostic]):
    self.diagnostics = list(diagnostics)
    first = self.diagnostics[0] if self.diagnostics else None
    super().__init__(str(first) if first else 'parse failed')


class SchemaViolation(TmError):
  """JSON interchange input does not match the schema."""

  def __init__(self, pointer: str, message: str):
    self.pointer = pointer
    self.message = message
    super().__init__(f'{pointer}: {message}')


# ---------- transforms ----------
class TransformError(TmError):
  """A model transformation precondition does not hold."""


class NotValidated(TransformError):
  """The model does not pass validation."""


class NotSimplified(TransformError):
  """elaborate was given a model that is not marked simplified."""


# ---------- dynamic plane ----------
class OverlayError(TmError):
  """An event overlay is not well formed."""


class EmptyRegion(OverlayError):
  """An event region has no actions."""


class DisconnectedRegion(OverlayError):
  """An event region is not weakly connected."""


class IllegalOverlap(OverlayError):
  """Two event regions share a non-Transfer action."""


class NodeSetMismatch(OverlayError):
  """Two behaviour graphs (or a graph and its overlay) disagree on events."""


class SimulationError(TmError):
  """A scenario cannot be executed."""


class UnboundGuard(SimulationError):
  """A guard key reached during simulation has no binding."""


class UnknownGuardKey(SimulationError):
  """A scenario binds a key that no behaviour edge uses."""


class TooLarge(SimulationError):
  """The filtered behaviour graph is too large to enumerate."""


class BehaviorCycle(SimulationError):
  """The filtered behaviour graph has a cycle, so it has no linear extensions."""


# ---------- configuration ----------
class ConfigError(TmError):
  """A `TM_*` environment variable holds a value that cannot be used."""
