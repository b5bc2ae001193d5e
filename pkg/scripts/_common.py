import argparse
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
SCENARIOS = HERE / "scenarios"


def out_dir_arg(description: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--out-dir", default="results", help="directory for CSV output (default: results/)")
    ap.add_argument("--threads", type=int, default=1)
    return ap


def run_cli(argv: list[str]) -> None:
    from steerlab.cli import main

    code = main(argv)
    if code != 0:
        sys.exit(code)
