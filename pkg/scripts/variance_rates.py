"""Gradient-variance rates against N for MC and both RQMC randomizations on a chosen
model, at the initial parameters or after a short Adam warm-up.

    python scripts/variance_rates.py --model hlr --warmup 200
"""
import argparse

from qmcvi import diagnostics, optim
from qmcvi.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="toy")
    ap.add_argument("--estimator", default="reparam")
    ap.add_argument("--warmup", type=int, default=0, help="Adam steps before measuring")
    ap.add_argument("--resamples", type=int, default=200)
    ap.add_argument("--max-log2", type=int, default=10)
    args = ap.parse_args()

    cfg = ExperimentConfig(model=args.model).validate()
    model = cfg.build_model()
    spec = model.default_family()
    lam = spec.init_params(0.0, -1.0)
    if args.warmup:
        lam = optim.run(model, spec, lam, args.estimator, "rqmc-scramble",
                        optim.OptimConfig("adam", 0.1, max_iters=args.warmup),
                        optim.SampleSchedule.fixed(10), timing=False).lam
    ns = [2 ** k for k in range(3, args.max_log2 + 1)]
    for kind in ("mc", "rqmc-shift", "rqmc-scramble"):
        pts = diagnostics.gradient_rate_study(model, spec, lam, args.estimator, kind, ns, args.resamples)
        fit = diagnostics.rate_fit(pts)
        print(f"{kind:<14} slope {fit.slope:7.3f}  r2 {fit.r2:.3f}  "
              + " ".join(f"{n}:{v:.3g}" for n, v in pts))


if __name__ == "__main__":
    main()
