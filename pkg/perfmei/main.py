# perfmei/main.py

from fastapi import FastAPI
import logging

from perfmei import config
from perfmei.routers import router as performance_router
from perfmei.schemas import PAYLOAD_SCHEMA

logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)

app = FastAPI(title="perfmei")

app.include_router(performance_router, prefix="/performance")


@app.get("/")
async def root():
    return {"status": "ok", "schema": PAYLOAD_SCHEMA}
