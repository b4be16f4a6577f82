from fastapi import APIRouter, HTTPException

from app.errors import TwoWayLabError
from app.models.schemas import ScenarioFile
from app.services import report_service

router = APIRouter(prefix="/analysis", tags=["分析"])


@router.post("/")
def analyze_scenario(doc: ScenarioFile):
    """等效受控體/控制器、零極點重新配置與次數檢查"""
    try:
        return report_service.analyze(doc).report
    except TwoWayLabError as e:
        raise HTTPException(status_code=e.http_status, detail=str(e))


@router.post("/text")
def analyze_scenario_text(doc: ScenarioFile):
    """與命令列相同的純文字報告"""
    try:
        report = report_service.analyze(doc).report
    except TwoWayLabError as e:
        raise HTTPException(status_code=e.http_status, detail=str(e))
    return {"text": report_service.render_text(report)}
