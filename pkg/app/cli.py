"""
命令列介面

    twoway-lab analyze|design|attack|simulate <config> [--out DIR] [--dump-config] [--seed N]

結束碼：0 成功、2 情境檔格式錯誤、3 領域/數值錯誤、4 查無結果。
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app import config
from app.errors import TwoWayLabError
from app.models.schemas import ScenarioFile
from app.services.report_service import report_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SCHEMA = 2

COMMANDS = ("analyze", "design", "attack", "simulate")


class SchemaError(Exception):
    """情境檔無法解析或不符合結構"""


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="twoway-lab",
        description="Two-way coding analysis, design, attack and simulation pipelines.",
    )
    parser.add_argument("command", choices=COMMANDS, help="pipeline to run")
    parser.add_argument("config", type=Path, help="path to the JSON scenario file")
    parser.add_argument("--out", type=Path, default=None, help="output directory for CSV and report files")
    parser.add_argument(
        "--dump-config",
        action="store_true",
        help="print the normalized scenario file and exit",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="reserved: seeds numpy's global generator and is echoed in the report; the pipelines themselves draw no random numbers",
    )
    parser.add_argument(
        "--check-round-trip",
        action="store_true",
        help="simulate: report max|y - ybar| and max|u - ubar|",
    )
    return parser.parse_args(argv)


def load_scenario(path: Path) -> ScenarioFile:
    """讀取並驗證情境檔，錯誤訊息附上行號或欄位路徑"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    try:
        return ScenarioFile.model_validate(raw)
    except ValidationError as e:
        details = []
        for err in e.errors():
            location = ".".join(str(part) for part in err["loc"]) or "<root>"
            details.append(f"  {location}: {err['msg']}")
        raise SchemaError(f"{path}: {e.error_count()} schema error(s)\n" + "\n".join(details)) from e


def run(args: argparse.Namespace) -> int:
    doc = load_scenario(args.config)

    if args.dump_config:
        sys.stdout.write(doc.model_dump_json(indent=2) + "\n")
        return EXIT_OK

    # 目前的流程皆為確定性計算；種子僅保留給之後的隨機擴充並記入報告
    if args.seed is not None:
        np.random.seed(args.seed)

    out_dir = Path(args.out or doc.output.dir or config.OUT_DIR)

    if args.command == "analyze":
        result = report_service.analyze(doc)
    elif args.command == "design":
        result = report_service.design(doc)
    elif args.command == "attack":
        result = report_service.attack(doc)
    else:
        result = report_service.simulate(doc, check_round_trip=args.check_round_trip)

    if args.seed is not None:
        result.report["seed"] = args.seed

    if result.log is not None:
        csv_path = report_service.write_csv(result.log, out_dir / (doc.output.csv or f"{doc.name}.csv"))
        result.report["csv"] = str(csv_path)

    text = report_service.render_text(result.report)
    report_service.write_report(result.report, out_dir / (doc.output.report or f"{doc.name}_{args.command}.txt"))
    sys.stdout.write(text)

    if result.log is not None and result.log.diverged:
        logger.warning(f"divergence at t={result.log.diverged_at:.6g}; partial log written")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    config.setup_logging()
    args = parse_args(argv)
    try:
        return run(args)
    except SchemaError as e:
        sys.stderr.write(f"schema error: {e}\n")
        return EXIT_SCHEMA
    except TwoWayLabError as e:
        logger.error(str(e))
        sys.stderr.write(f"error: {e}\n")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
