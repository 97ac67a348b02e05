#!/usr/bin/env python3
"""Policy-e day-average cost versus window length, per error rate.

Writes sweep.csv with the optimizer's pick marked per beta; this is the
data behind the window-sizing comparison.
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
    ap.add_argument("--T-range", dest="T_range", default="1:30")
    ap.add_argument("--beta-list", dest="beta_list", default="0.1,0.4")
    ap.add_argument("--seeds", type=int, default=8)
    ap.add_argument("--out-dir", default="out/sweep")
    args = ap.parse_args()
    sys.exit(main(["sweep-window", "--config", args.config,
                   "--T-range", args.T_range, "--beta-list", args.beta_list,
                   "--seeds", str(args.seeds), "--out-dir", args.out_dir]))
