from fastapi import APIRouter, HTTPException

from app.errors import TwoWayLabError
from app.models.schemas import ScenarioFile
from app.services import report_service

router = APIRouter(prefix="/attacks", tags=["攻擊"])


@router.post("/")
def run_attack(doc: ScenarioFile):
    """合成零動態攻擊、模擬並判定 DETECTED / STEALTHY / CORRECTED"""
    if not doc.attacks:
        raise HTTPException(status_code=400, detail="情境檔缺少 attacks 區段")
    try:
        return report_service.attack(doc).report
    except TwoWayLabError as e:
        raise HTTPException(status_code=e.http_status, detail=str(e))
