"""FastAPI application exposing the Thinging Machine toolkit over HTTP."""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from server.config import configure_logging, get_settings
from server.routers import router

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
  """Configure logging once the server starts."""
  settings = get_settings()
  configure_logging(settings)
  logger.info('TM toolkit API up (log level %s)', settings.log_level)
  yield


app = FastAPI(
  title='TM toolkit',
  description='Validate, transform, overlay, simulate and render Thinging Machine models',
  version='0.1.0',
  lifespan=lifespan,
)

app.add_middleware(
  CORSMiddleware,
  allow_origins=['*'],
  allow_methods=['GET', 'POST'],
  allow_headers=['*'],
)


@app.get('/health')
async def health():
  """Health check endpoint."""
  return {'status': 'healthy'}


app.include_router(router, prefix='/api', tags=['api'])
