#!/usr/bin/env python3
"""Run all five placement policies on a scenario and write the CSVs.

Equivalent to `mmcplace simulate --policy all`; kept as a script so the
standard experiment is one command with the shipped desk config.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mmcplace.cli import main  # noqa: E402

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=os.path.join(
        os.path.dirname(__file__), "..", "configs", "desk.ini"))
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out-dir", default="out/policies")
    args = ap.parse_args()
    sys.exit(main(["simulate", "--config", args.config,
                   "--seed", str(args.seed), "--out-dir", args.out_dir]))
