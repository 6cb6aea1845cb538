#!/usr/bin/env python3
"""Run the built-in figure recipes and collect their data files.

    python scripts/reproduce_figures.py [--out DIR] [--jobs N] [names...]

Without names, every recipe in the catalog runs (about a minute total, the
long pole is the wide-window amplitude sweep).
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from tdres import cli
from tdres.recipes import RECIPES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", default=[], help="recipe names (default: all)")
    ap.add_argument("--out", default="out/figures")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    names = args.names or list(RECIPES)
    unknown = [n for n in names if n not in RECIPES]
    if unknown:
        ap.error(f"unknown recipes: {unknown}; see `tdres recipes`")
    for name in names:
        t0 = time.time()
        rc = cli.main(["run", name, "--out", os.path.join(args.out, name),
                       "--jobs", str(args.jobs)])
        status = "ok" if rc == 0 else f"exit {rc}"
        print(f"{name:18s} {time.time() - t0:6.1f}s  {status}")
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
