from contextlib import asynccontextmanager
import logging

from fastapi import FastAPI

from app import config
from app.routers import analysis_router, design_router, attacks_router, simulation_router

# 設定日誌
config.setup_logging()
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info(f"雙向編碼實驗室啟動完成 (dt={config.DEFAULT_DT}, eps={config.DEFAULT_DETECTOR_EPS})")

    yield

    logger.info("雙向編碼實驗室已關閉")


app = FastAPI(
    title="雙向編碼實驗室",
    description="回授控制迴路的雙向編碼 - 等效系統分析、編碼設計、零動態攻擊與時域模擬",
    version="0.1.0",
    lifespan=lifespan,
)

app.include_router(analysis_router)
app.include_router(design_router)
app.include_router(attacks_router)
app.include_router(simulation_router)


@app.get("/")
async def root():
    """可用的流程"""
    return {
        "service": "twoway-lab",
        "endpoints": ["/analysis/", "/design/", "/attacks/", "/simulation/", "/simulation/csv"],
    }
