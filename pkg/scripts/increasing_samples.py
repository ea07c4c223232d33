"""Toy Gaussian, constant-step SGD with a geometric sample schedule: optimality
gap per iteration for MC and RQMC, plus the fitted log-gap slope over the final
third.

    python scripts/increasing_samples.py --iters 10000 --seeds 4
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from qmcvi import models, optim


def gap_trace(kind, cfg, sched, seed):
    toy = models.toy_gaussian(2)
    spec = toy.default_family()
    gaps = []

    def monitor(t, lam):
        gaps.append(-toy.exact_elbo(lam))

    optim.run(toy, spec, spec.init_params(0.1, 0.0), "reparam", kind, cfg, sched, seed=seed,
              monitor=monitor, timing=False)
    return np.array(gaps)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--iters", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=4)
    ap.add_argument("--alpha", type=float, default=0.001)
    ap.add_argument("--n-final", type=int, default=50_000)
    ap.add_argument("--n-floor", type=int, default=16)
    ap.add_argument("--out", default="results/increasing_samples.csv")
    args = ap.parse_args()

    cfg = optim.OptimConfig("sgd", args.alpha, max_iters=args.iters)
    sched = optim.SampleSchedule.geometric_reaching(args.n_final, args.iters, args.n_floor)
    kinds = ("mc", "rqmc-scramble")
    gaps = {k: np.mean([gap_trace(k, cfg, sched, s) for s in range(args.seeds)], axis=0) for k in kinds}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "N_t", *kinds])
        for t in range(args.iters):
            w.writerow([t, sched.size(t), *(repr(gaps[k][t]) for k in kinds)])
    t = np.arange(2 * args.iters // 3, args.iters)
    for k in kinds:
        slope = np.polyfit(t, np.log(gaps[k][t]), 1)[0]
        print(f"{k:<14} final-third log-gap slope {slope:.3e}")


if __name__ == "__main__":
    main()
