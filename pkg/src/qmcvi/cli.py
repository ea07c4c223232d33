"""Command-line experiment runner.

    qmcvi run      single optimization run -> trace.csv + manifest.txt
    qmcvi sweep    sequence kinds x sample sizes -> one trace CSV per cell
    qmcvi rates    variance-rate study (integration or gradient)
    qmcvi selftest fast acceptance checks -> selftest*.csv
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from . import __version__, acceptance, diagnostics, optim
from .config import ConfigError, ExperimentConfig, load, parse_value, serialize

TRACE_HEADER = ("t", "N_t", "elbo", "grad_norm", "trvar", "wall_ns")
# stream for per-step variance resampling seeds
_VAR_STREAM = 0x7A5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_manifest(out: Path, cfg: ExperimentConfig, command: str):
    text = (f"# qmcvi manifest\nartifact_version = {__version__}\ncommand = {command}\n"
            + serialize(cfg))
    (out / "manifest.txt").write_text(text)


def _config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value config file; flags override it")
    for f in dataclasses.fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        else:
            p.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qmcvi", description="Quasi-Monte Carlo variational inference experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _config_args(sub.add_parser("run", help="single optimization run"))
    _config_args(sub.add_parser("sweep", help="cross product over sequence kinds and sample sizes"))
    rates = sub.add_parser("rates", help="variance / integration rate study")
    _config_args(rates)
    rates.add_argument("--target", choices=("integration", "gradient"), default="integration")
    rates.add_argument("--randomizations", type=int, default=100)
    rates.add_argument("--min-log2", type=int, default=4)
    rates.add_argument("--max-log2", type=int, default=12)
    st = sub.add_parser("selftest", help="run the fast acceptance checks")
    st.add_argument("--out", default="selftest_out")
    st.add_argument("--seed", type=int, default=0)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for f in dataclasses.fields(ExperimentConfig):
        raw = getattr(args, f.name, None)
        if raw is None:
            continue
        overrides[f.name] = raw if isinstance(raw, bool) else parse_value(f.name, raw)
    return dataclasses.replace(cfg, **overrides).validate()


def execute_run(cfg: ExperimentConfig, seq: str, n: int, path: Path):
    """Run one optimization and write its trace; returns the RunResult."""
    model = cfg.build_model()
    spec = model.default_family()
    schedule = cfg.sample_schedule(n)
    hp_elbo = {}

    def monitor(t, lam):
        if cfg.eval_every and t % cfg.eval_every == 0:
            hp_elbo[t] = diagnostics.elbo_highprec(model, spec, lam).value
        if cfg.var_every and t % cfg.var_every == 0:
            return diagnostics.grad_variance(model, spec, lam, cfg.estimator, seq, schedule.size(t),
                                             cfg.resamples, optim.step_seed(cfg.seed, t, _VAR_STREAM)
                                             ).trace_of_variance
        return None

    def rows(trace):
        for r in trace:
            elbo = hp_elbo.get(r.t) if cfg.eval_every else r.elbo_est
            yield (r.t, r.n_t, elbo, r.grad_norm, r.trvar, r.wall_ns)

    try:
        res = optim.run(model, spec, cfg.initial_params(spec), cfg.estimator, seq, cfg.optim_config(),
                        schedule, seed=cfg.seed, skip=cfg.skip,
                        monitor=monitor if (cfg.var_every or cfg.eval_every) else None,
                        timing=cfg.timing)
    except optim.OptimizationAborted as exc:
        write_csv(path, TRACE_HEADER, rows(exc.trace))
        raise
    write_csv(path, TRACE_HEADER, rows(res.trace))
    return res


def cmd_run(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, cfg, "run")
    res = execute_run(cfg, cfg.seq, cfg.n, out / "trace.csv")
    print(f"wrote {out / 'trace.csv'} ({len(res.trace)} rows, {res.total_samples} samples)")
    return 0


def cmd_sweep(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, cfg, "sweep")
    for seq in cfg.sweep_seqs:
        for n in cfg.sweep_ns:
            path = out / f"trace_{seq}_n{n}.csv"
            res = execute_run(cfg, seq, n, path)
            print(f"wrote {path} ({len(res.trace)} rows)")
    return 0


def cmd_rates(cfg: ExperimentConfig, args) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, cfg, f"rates --target {args.target}")
    ns = [2 ** k for k in range(args.min_log2, args.max_log2 + 1)]
    if len(ns) < 4:
        raise ConfigError("rates needs at least 4 sample sizes")
    rows, fits = [], []
    for seq in cfg.sweep_seqs:
        if args.target == "integration":
            study = diagnostics.integration_study(seq, cfg.d, ns, args.randomizations, cfg.seed)
        else:
            model = cfg.build_model()
            spec = model.default_family()
            lam = cfg.initial_params(spec)
            study = [(n, diagnostics.grad_variance(model, spec, lam, cfg.estimator, seq, n,
                                                   cfg.resamples, cfg.seed).trace_of_variance, None)
                     for n in ns]
        rows += [(args.target, seq, n, v, e) for n, v, e in study]
        if all(v > 0 for _, v, _ in study):
            fit = diagnostics.rate_fit([(n, v) for n, v, _ in study])
            fits.append((seq, fit.slope, fit.intercept, fit.r2))
        else:
            fits.append((seq, None, None, None))
    write_csv(out / "rates.csv", ("target", "seq", "N", "variance", "rmse"), rows)
    write_csv(out / "rates_fit.csv", ("seq", "slope", "intercept", "r2"), fits)
    print(f"{'seq':<16}{'slope':>10}{'intercept':>12}{'r2':>8}")
    for seq, slope, icept, r2 in fits:
        if slope is None:
            print(f"{seq:<16}{'n/a':>10}{'n/a':>12}{'n/a':>8}")
        else:
            print(f"{seq:<16}{slope:>10.3f}{icept:>12.3f}{r2:>8.4f}")
    return 0


def cmd_selftest(out: Path, seed: int) -> int:
    out.mkdir(parents=True, exist_ok=True)
    checks = []
    for fn in acceptance.FAST_CHECKS:
        chk = fn(seed=seed) if "seed" in fn.__code__.co_varnames else fn()
        print(chk.line())
        checks.append(chk)
    write_csv(out / "selftest.csv", ("check", "passed", "value", "threshold"),
              [(c.name, int(c.passed), c.value, c.threshold) for c in checks])
    integ = next(c for c in checks if c.name == "integration rates").metrics
    write_csv(out / "selftest_rates.csv", ("seq", "N", "variance", "rmse"),
              [(seq, n, v, e) for seq in ("mc", "rqmc-scramble", "qmc") for n, v, e in integ[seq]])
    cfg = ExperimentConfig(model="toy", estimator="reparam", seq="rqmc-scramble", n=10, opt="sgd",
                           alpha=0.001, iters=100, seed=seed, out=str(out), timing=False)
    execute_run(cfg, cfg.seq, cfg.n, out / "selftest_trace.csv")
    write_manifest(out, cfg, "selftest")
    failed = [c.name for c in checks if not c.passed]
    print(f"selftest: {len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "selftest":
            return cmd_selftest(Path(args.out), args.seed)
        cfg = resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_rates(cfg, args)
    except ConfigError as exc:
        print(f"qmcvi: invalid config: {exc}", file=sys.stderr)
    except optim.OptimizationAborted as exc:
        print(f"qmcvi: run aborted: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"qmcvi: cannot write output: {exc.strerror}: {exc.filename}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
