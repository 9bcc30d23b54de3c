"""
Regenerate the bundled JSON value tables from the synthetic game CSVs.

Usage (from repo root):
    python tools/build_games.py
    python tools/build_games.py --data-dir data --games andor xor

Each data/<game>.csv (last column is the target) is scored by plug-in mutual
information and written next to it as data/<game>.json.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from mci.core.config import get_settings
from mci.core.errors import MciError
from mci.core.logging import init_logging
from mci.valuation import dump_value_table, load_csv_dataset, mutual_information_valuation

DEFAULT_GAMES = ("andor", "xor")


def build_game(data_dir: Path, game: str) -> Path:
    dataset = load_csv_dataset(data_dir / f"{game}.csv")
    valuation = mutual_information_valuation(dataset)
    return dump_value_table(valuation, data_dir / f"{game}.json")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Export bundled games as JSON value tables")
    parser.add_argument("--data-dir", type=Path, default=ROOT / "data")
    parser.add_argument("--games", nargs="+", default=list(DEFAULT_GAMES))
    args = parser.parse_args(argv)
    init_logging(get_settings().log_level)

    written: List[Path] = []
    for game in args.games:
        try:
            written.append(build_game(args.data_dir, game))
        except MciError as exc:
            print(f"{game}: {exc.detail}", file=sys.stderr)
            return exc.exit_code
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
