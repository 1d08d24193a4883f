"""Scaled statistic under a step in beta versus its deterministic limit.

beta jumps from 1 to 2 at mid-day, unit volatilities.  The mean of
statistic / sqrt(n k_n) over seeds is printed for a few sample sizes next
to the limit computed by ``alternative_limit``.
"""
import argparse

import numpy as np

from betaconst import BetaFunction, CIRParams, SimConfig, TestConfig, alternative_limit, run_test, simulate

FLAT = CIRParams(kappa=0.03, theta=1.0, xi=0.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--sizes", default="2340:15,23400:150,93600:300", help="n:k_n pairs")
    args = ap.parse_args()

    step = BetaFunction(lambda t: 1.0 + (t > 0.5))
    for pair in args.sizes.split(","):
        n, k = (int(v) for v in pair.split(":"))
        vals = []
        for s in range(args.seeds):
            cfg = SimConfig(days=1, steps_per_day=n, substeps=1, vol_x=FLAT, vol_y=FLAT,
                            beta=step, jumps=None, seed=s)
            vals.append(run_test(simulate(cfg).grid, TestConfig(k_n=k)).scaled_alt)
        lim = alternative_limit(1.0 + (np.arange(n) >= n // 2), 1.0, 1.0)
        se = np.std(vals, ddof=1) / np.sqrt(len(vals))
        print(f"n={n:>6} k_n={k:>4}  mean {np.mean(vals):.5f} +- {se:.5f}   limit {lim:.5f}")


if __name__ == "__main__":
    main()
