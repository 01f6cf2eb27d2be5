#!/usr/bin/env python3
"""Estimate the support-error spread factor zeta for one or more sizes.

zeta bounds how concentrated the post-addition estimation error can be:
sqrt(sa) * ||e||_inf / ||e||_2 over the enlarged support, maximized over
steps and trials.  Small zeta (relative to sqrt(sa)) lets the deletion
threshold shrink, which loosens the minimum magnitude-change rate the
stability conditions demand.

Usage:
    python3 scripts/estimate_spread.py --m 200 --trials 500
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from modcs.analysis import estimate_zeta


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, nargs="+", default=[200])
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--horizon", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--c", type=float, default=0.1266)
    args = ap.parse_args(argv)

    for m in args.m:
        s0 = max(1, round(0.1 * m))
        sa = max(1, round(0.01 * m))
        n = int(np.ceil(0.3861 * s0 * np.log2(m)))
        value = estimate_zeta(m=m, s0=s0, sa=sa, r=1.0, d=3, n=n, c=args.c,
                              trials=args.trials, horizon=args.horizon,
                              seed=args.seed)
        print(f"m={m:5d}  s0={s0:3d}  sa={sa:2d}  n={n:4d}  "
              f"zeta={value:.3f}  (sqrt(sa)={np.sqrt(sa):.3f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
