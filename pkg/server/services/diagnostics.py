"""Source spans and parse diagnostics shared by every text format."""

from __future__ import annotations

from typing import Literal

from lark import Lark, Tree
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken
from lark.tree import Meta
from pydantic import BaseModel, ConfigDict, Field

from server.services.errors import DiagnosticError


class SourceSpan(BaseModel):
  """1-based position inside an input text."""

  model_config = ConfigDict(frozen=True)

  file: str = '<input>'
  line: int = Field(default=1, ge=1)
  column: int = Field(default=1, ge=1)

  def __str__(self) -> str:
    return f'{self.file}:{self.line}:{self.column}'


class ParseDiagnostic(BaseModel):
  """One problem found while reading a text format."""

  model_config = ConfigDict(frozen=True)

  severity: Literal['error', 'warning'] = 'error'
  span: SourceSpan
  code: str
  message: str

  def __str__(self) -> str:
    return f'{self.span}: {self.severity}: [{self.code}] {self.message}'


def end_span(text: str, file: str) -> SourceSpan:
  """Span of the last character of text (line 1, column 1 for empty text)."""
  if not text:
    return SourceSpan(file=file)
  lines = text.split('\n')
  if lines[-1] == '' and len(lines) > 1:
    lines = lines[:-1]
  return SourceSpan(file=file, line=len(lines), column=max(1, len(lines[-1])))


def clamp_span(text: str, file: str, line: int | None, column: int | None) -> SourceSpan:
  """Build a span, pulling unknown or out-of-range positions back inside the text."""
  if not line or line < 1 or not column or column < 1:
    return end_span(text, file)
  lines = text.split('\n')
  if line > len(lines):
    return end_span(text, file)
  width = max(1, len(lines[line - 1]))
  return SourceSpan(file=file, line=line, column=min(column, width))


def syntax_diagnostic(error: UnexpectedInput, text: str, file: str) -> ParseDiagnostic:
  """Turn a lark error into a diagnostic positioned inside the text."""
  if isinstance(error, UnexpectedEOF):
    span = end_span(text, file)
    message = 'unexpected end of input'
  else:
    span = clamp_span(text, file, getattr(error, 'line', None), getattr(error, 'column', None))
    if isinstance(error, UnexpectedCharacters):
      message = f'unexpected character {error.char!r}'
    elif isinstance(error, UnexpectedToken):
      expected = ', '.join(sorted(error.expected)) if error.expected else 'nothing'
      message = f'unexpected {error.token!r}, expected one of: {expected}'
    else:
      message = 'syntax error'
  return ParseDiagnostic(span=span, code='SyntaxError', message=message)


def decode_source(source: str | bytes) -> str:
  """Accept text or UTF-8 bytes; undecodable bytes become U+FFFD so the lexer reports them."""
  if isinstance(source, bytes):
    return source.decode('utf-8', errors='replace')
  return source


def meta_span(meta: Meta, file: str) -> SourceSpan:
  """Span where a parse-tree node starts."""
  if getattr(meta, 'empty', True):
    return SourceSpan(file=file)
  return SourceSpan(file=file, line=meta.line, column=meta.column)


def parse_tree(parser: Lark, source: str | bytes, file: str) -> tuple[str, Tree]:
  """Run a lark parser, turning any syntax error into a DiagnosticError."""
  text = decode_source(source)
  try:
    return text, parser.parse(text)
  except UnexpectedInput as e:
    raise DiagnosticError([syntax_diagnostic(e, text, file)]) from None
