from fastapi import APIRouter, HTTPException

from app.errors import TwoWayLabError
from app.models.schemas import ScenarioFile
from app.services import report_service

router = APIRouter(prefix="/design", tags=["編碼設計"])


@router.post("/")
def design_coding(doc: ScenarioFile):
    """由靜態輸出回饋增益設計編碼，回傳 M 與 Hurwitz 證明

    未指定 F1、F2 時在格點上搜尋並取中位數附近的一對增益
    """
    try:
        return report_service.design(doc).report
    except TwoWayLabError as e:
        raise HTTPException(status_code=e.http_status, detail=str(e))
