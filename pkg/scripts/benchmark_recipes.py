#!/usr/bin/env python3
"""Time every recipe against its catalog estimate (desk-scale budget check)."""

import os
import sys
import tempfile
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from tdres import cli
from tdres.recipes import RECIPES


def main():
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for name, recipe in RECIPES.items():
            t0 = time.time()
            rc = cli.main(["run", name, "--out", os.path.join(tmp, name)])
            dt = time.time() - t0
            budget = recipe["runtime_s"]
            flag = "" if dt <= 3 * budget and rc == 0 else "  <-- over budget"
            if flag:
                failures += 1
            print(f"{name:18s} {dt:6.1f}s  (catalog ~{budget}s){flag}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
