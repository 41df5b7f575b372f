"""API routers, mounted under `/api` by the application."""

import logging

from fastapi import APIRouter

logger = logging.getLogger(__name__)

router = APIRouter()


# Each router loads on its own; a failing import is logged and skipped.
def _load_routers():
  try:
    from .models import router as models_router

    router.include_router(models_router, prefix='/models', tags=['models'])
  except Exception:
    logger.exception('could not load the models router')

  try:
    from .events import router as events_router

    router.include_router(events_router, prefix='/events', tags=['events'])
  except Exception:
    logger.exception('could not load the events router')

  try:
    from .sd import router as sd_router

    router.include_router(sd_router, prefix='/sd', tags=['sequence-diagrams'])
  except Exception:
    logger.exception('could not load the sequence-diagram router')


_load_routers()
