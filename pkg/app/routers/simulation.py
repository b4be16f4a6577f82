from fastapi import APIRouter, HTTPException
from fastapi.responses import Response

from app.errors import TwoWayLabError
from app.models.schemas import ScenarioFile
from app.services import report_service
from app.services.report_service import CSV_FLOAT_FORMAT

router = APIRouter(prefix="/simulation", tags=["模擬"])


@router.post("/")
def simulate_scenario(doc: ScenarioFile, check_round_trip: bool = False):
    """執行模擬，回傳摘要（可選交叉驗證與往返誤差）"""
    try:
        return report_service.simulate(doc, check_round_trip=check_round_trip).report
    except TwoWayLabError as e:
        raise HTTPException(status_code=e.http_status, detail=str(e))


@router.post("/csv")
def simulate_scenario_csv(doc: ScenarioFile):
    """執行模擬並以 CSV 回傳完整訊號紀錄"""
    try:
        result = report_service.simulate(doc)
    except TwoWayLabError as e:
        raise HTTPException(status_code=e.http_status, detail=str(e))

    content = result.log.to_frame().to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return Response(
        content=content,
        media_type="text/csv",
        headers={"Content-Disposition": f'attachment; filename="{doc.name}.csv"'},
    )
