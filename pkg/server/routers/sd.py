"""Sequence-diagram import endpoint."""

from fastapi import APIRouter
from pydantic import BaseModel, Field

from server.routers.common import tm_errors
from server.services.dsl import print_model
from server.services.events import print_overlay
from server.services.sd_import import message_overlay, parse_sd, sd_to_tm

router = APIRouter()


class SdSource(BaseModel):
  """Sequence diagram text."""

  source: str = Field(..., description='Sequence diagram text')


class SdImport(BaseModel):
  """The imported model and its one-event-per-message overlay."""

  name: str
  messages: int
  model: str
  overlay: str


@router.post('/import', response_model=SdImport)
async def import_sd(body: SdSource):
  """Translate a sequence diagram into `.tm` and `.ev` text."""
  with tm_errors():
    doc = parse_sd(body.source, file='<sd>')
    model = sd_to_tm(doc)
    return SdImport(
      name=model.name,
      messages=len(doc.messages()),
      model=print_model(model),
      overlay=print_overlay(message_overlay(doc, model)),
    )
