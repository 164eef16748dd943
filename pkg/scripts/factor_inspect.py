"""Dump Wiener-Hopf factors for one regime of a config to CSV.

Usage: python scripts/factor_inspect.py config.json [q] [regime] [out.csv]
"""

import sys
from pathlib import Path

from rsbarrier.cli import main as cli_main

DEFAULT = Path(__file__).resolve().parent.parent / "configs" / "kobol_single.json"


def main() -> int:
    config = sys.argv[1] if len(sys.argv) > 1 else str(DEFAULT)
    q = sys.argv[2] if len(sys.argv) > 2 else "2.0"
    regime = sys.argv[3] if len(sys.argv) > 3 else "1"
    argv = ["factors", "--config", config, "--q-value", q, "--regime", regime]
    if len(sys.argv) > 4:
        argv += ["--out", sys.argv[4]]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
