import logging
import os
from dotenv import load_dotenv

# 載入 .env 檔案（優先載入 .env.local 用於本地測試）
env_file = ".env.local" if os.path.exists(".env.local") and os.getenv("USE_LOCAL_ENV", "").lower() in ("1", "true") else ".env"
load_dotenv(env_file)

# 日誌等級
LOG_LEVEL = os.getenv("TWOWAY_LOG", "INFO").upper()

# 預設輸出目錄（CSV 與報告）
OUT_DIR = os.getenv("TWOWAY_OUT_DIR", "out")

# 預設積分步長與偵測門檻
DEFAULT_DT = float(os.getenv("TWOWAY_DT", "1e-3"))
DEFAULT_DETECTOR_EPS = float(os.getenv("TWOWAY_DETECTOR_EPS", "1e-3"))


def setup_logging(level: str | None = None):
    """設定日誌（只在程式進入點呼叫一次）"""
    name = (level or LOG_LEVEL).upper()
    numeric = getattr(logging, name, None)
    if not isinstance(numeric, int):
        numeric = logging.INFO
    logging.basicConfig(
        level=numeric,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
