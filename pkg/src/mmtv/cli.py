"""Command-line entry point.

    mmtv denoise --input y.csv --sigma-w 1 --output fit.csv
    mmtv check --n 200 --lambda 0.2828 --sigma 226.27
    mmtv certify --n 200 --tau 50,100 --signs +,+ --zhat fit.csv --sigma-w 1
    mmtv bench stair --trials 200 --out sweep.csv
    mmtv bench average --a 20 --trials 500 --out avg.csv

Exit status: 0 on success, 2 on usage errors, 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import csvio, guarantees
from .difference_model import DiffModel, check_convexity, center
from .experiments import METHOD_LABELS, METHODS, ExperimentConfig, run_average, run_sweep
from .mm_solver import SolverConfig, default_lambda, default_sigma, l1_fit, solve_mm
from .penalties import PenaltyKind, PenaltySpec

SEED_ENV = "MMTV_SEED"


class UsageError(Exception):
    pass


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"{text!r} must be positive and finite")
    return v


def _nonnegative(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be nonnegative")
    return v


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of integers") from None


def _sign_list(text):
    table = {"+": 1, "+1": 1, "1": 1, "-": -1, "-1": -1}
    out = []
    for t in text.split(","):
        t = t.strip()
        if t not in table:
            raise argparse.ArgumentTypeError(f"bad sign {t!r}; use + or -")
        out.append(table[t])
    return out


def _method_list(text):
    methods = [m.strip() for m in text.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}; choose from {','.join(METHODS)}")
    return methods


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _add_penalty(p):
    p.add_argument(
        "--penalty", choices=[k.value for k in PenaltyKind], default="exp",
        help="sparsity penalty (default: exp)",
    )


def _resolve_lambda_sigma(args, n, mu):
    if args.lam is None and args.sigma_w is None:
        raise UsageError("give --lambda or --sigma-w (lambda defaults to 4*sqrt(sigma_w^2/n))")
    lam = args.lam if args.lam is not None else default_lambda(n, args.sigma_w)
    sigma = args.sigma if args.sigma is not None else default_sigma(lam, n, mu)
    return lam, sigma


def cmd_denoise(args) -> int:
    y = csvio.read_signal_csv(args.input, column=args.column)
    n = y.size
    spec = PenaltySpec.from_name(args.penalty)
    lam, sigma = _resolve_lambda_sigma(args, n, spec.mu)
    config = SolverConfig(
        lam=lam, sigma=sigma, penalty=spec, epsilon=args.epsilon,
        max_iter=args.max_iter, force=args.force,
    )
    fit = l1_fit(y, lam, args.tol_cp) if spec.is_l1 else solve_mm(y, config, tol_cp=args.tol_cp)

    settings = {
        "input": args.input, "n": n, "penalty": spec.kind.value, "mu": spec.mu,
        "lambda": lam, "sigma": sigma, "lambda_sigma": config.lambda_sigma,
        "sigma_w": args.sigma_w, "epsilon": args.epsilon, "max_iter": args.max_iter,
        "tol_cp": args.tol_cp, "force": args.force,
    }
    if fit.convexity is not None:
        settings.update(
            convexity=fit.convexity.verdict.value, convexity_margin=fit.convexity.margin,
            s_min=fit.convexity.s_min,
        )
    comments = csvio.comment_block("denoise", settings)
    z = list(fit.z_hat) + [None]
    rows = [(i + 1, y[i], fit.x_hat[i], z[i]) for i in range(n)]
    trailer = [
        f"# iterations={fit.iterations}",
        f"# converged={csvio.fmt(fit.converged)}",
        f"# forced={csvio.fmt(fit.forced)}",
        f"# kkt_residual={csvio.fmt(fit.kkt)}",
        f"# change_points={' '.join(str(c) for c in fit.change_points)}",
        "# trace: iteration,objective,rel_change,kkt_residual",
    ] + [
        f"# {r.iteration},{csvio.fmt(r.objective)},{csvio.fmt(r.rel_change)},{csvio.fmt(r.kkt)}"
        for r in fit.trace
    ]
    csvio.write_table(args.output, comments, ["index", "y", "x_hat", "z_hat"], rows, trailer)
    if not fit.converged:
        print(f"warning: stopped after {fit.iterations} iterations without converging", file=sys.stderr)
    if fit.forced:
        print(f"warning: outside the convexity certificate (margin {fit.convexity.margin:.6g})", file=sys.stderr)
    print(f"wrote {args.output}: {len(fit.change_points)} change points, {fit.iterations} iterations", file=sys.stderr)
    return 0


def cmd_check(args) -> int:
    spec = PenaltySpec.from_name(args.penalty)
    lam_sigma = args.lam * args.sigma
    res = check_convexity(args.n, lam_sigma, args.sigma, spec.mu)
    header = ["n", "lambda", "sigma", "lambda_sigma", "mu", "s_min", "bound", "margin", "verdict"]
    row = [args.n, args.lam, args.sigma, lam_sigma, spec.mu, res.s_min, res.bound, res.margin, res.verdict.value]
    sys.stdout.write(csvio.table(header, [row]))
    return 0


def cmd_certify(args) -> int:
    n = args.n
    if n < 3:
        raise UsageError("--n must be at least 3")
    spec = PenaltySpec.from_name(args.penalty)
    if args.sigma_w is None:
        raise UsageError("--sigma-w is required")
    lam, sigma = _resolve_lambda_sigma(args, n, spec.mu)
    signs = args.signs if args.signs is not None else [1] * len(args.tau)
    support = guarantees.SupportSet(tuple(args.tau), tuple(signs))
    support.validate(n)

    z_hat = csvio.read_signal_csv(args.zhat, column=args.zhat_column, min_length=1)
    if z_hat.size != n - 1:
        raise UsageError(f"{args.zhat} holds {z_hat.size} values, expected n - 1 = {n - 1}")

    lemma2 = None
    if args.y is not None or args.zstar is not None:
        if args.y is None or args.zstar is None:
            raise UsageError("--y and --zstar must be given together")
        y = csvio.read_signal_csv(args.y, column=args.y_column)
        z_star = csvio.read_signal_csv(args.zstar, min_length=1)
        if y.size != n or z_star.size != n - 1:
            raise UsageError(f"--y needs {n} values and --zstar {n - 1}")
        w_tilde = center(y).y_tilde - DiffModel(n).apply(z_star)
        lemma2 = guarantees.lemma2_conditions(
            n, np.array(support.tau), z_star, z_hat, w_tilde, lam, sigma, spec
        )

    gamma = "auto" if args.gamma == "auto" else float(args.gamma)
    report = guarantees.theorem2_report(
        n, support, z_hat, args.sigma_w, lam, sigma, spec, gamma=gamma, lemma2=lemma2
    )
    values = report.as_dict()
    values = {"n": n, "tau": " ".join(map(str, support.tau)), "penalty": spec.kind.value,
              "lambda": lam, "sigma": sigma, "sigma_w": args.sigma_w, **values}
    if lemma2 is not None:
        values.update(lemma2_cond1_lhs=lemma2.cond1_lhs, lemma2_cond2_slack=lemma2.cond2_slack)
    out = [f"{k}={csvio.fmt(v)}" for k, v in values.items()]
    sys.stdout.write("\n".join(out) + "\n")
    sys.stdout.write(csvio.table(list(values), [list(values.values())]))
    return 0


SWEEP_GNUPLOT = """\
# gnuplot template for {csv}
set datafile separator ','
set datafile commentschars '#'
set logscale x
set xlabel 'jump amplitude a'
set ylabel 'exact change-point recovery rate'
set yrange [-0.05:1.05]
set key bottom right
plot {plots}
"""

AVERAGE_GNUPLOT = """\
# gnuplot template for {csv}
set datafile separator ','
set datafile commentschars '#'
set xlabel 'sample index'
set ylabel 'mean estimate'
set key top left
plot '{csv}' using 1:2 with lines lw 2 title 'true signal', {plots}
"""


def _write_gnuplot(csv_path: Path, template: str, columns, first_col: int) -> Path:
    plots = ", ".join(
        f"'{csv_path.name}' using 1:{first_col + i} with lines title '{METHOD_LABELS[m]}'"
        for i, m in enumerate(columns)
    )
    if template is SWEEP_GNUPLOT:
        plots = plots.replace("with lines", "with linespoints")
    gp = csv_path.with_suffix(".gp")
    gp.write_text(template.format(csv=csv_path.name, plots=plots))
    return gp


def cmd_bench_stair(args) -> int:
    if args.amax < args.amin:
        raise UsageError("--amax must not be below --amin")
    amps = np.geomspace(args.amin, args.amax, args.points) if args.points > 1 else np.array([args.amin])
    seed = args.seed if args.seed is not None else _default_seed()
    config = ExperimentConfig(sigma_w=args.sigma_w, epsilon=args.epsilon)
    res = run_sweep(amps, args.trials, args.methods, config, seed=seed, n=args.n, workers=args.workers)
    settings = {
        "n": args.n, "trials": args.trials, "sigma_w": args.sigma_w, "epsilon": args.epsilon,
        "lambda": default_lambda(args.n, args.sigma_w), "sigma": "4*lambda*n*max(1,mu)",
        "methods": ",".join(res.methods),
        "note": "log and atan use this package's MM loop and stopping rule, not the original comparator code",
    }
    header = ["amplitude"] + [f"rate_{m}" for m in res.methods] + [f"seconds_{m}" for m in res.methods]
    rows = [
        [a] + [res.success[m][i] for m in res.methods] + [res.runtime[m][i] for m in res.methods]
        for i, a in enumerate(res.amplitudes)
    ]
    out = Path(args.out)
    csvio.write_table(out, csvio.comment_block("bench stair", settings, seed), header, rows)
    gp = _write_gnuplot(out, SWEEP_GNUPLOT, res.methods, 2)
    print(f"wrote {out} and {gp}", file=sys.stderr)
    return 0


def cmd_bench_average(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    config = ExperimentConfig(sigma_w=args.sigma_w, epsilon=args.epsilon)
    res = run_average(args.a, args.trials, args.methods, config, seed=seed, n=args.n)
    methods = list(res.means)
    settings = {
        "n": args.n, "amplitude": args.a, "trials": args.trials, "sigma_w": args.sigma_w,
        "epsilon": args.epsilon, "lambda": default_lambda(args.n, args.sigma_w),
        "methods": ",".join(methods),
    }
    header = ["index", "x_star", "mean_y"] + [f"mean_{m}" for m in methods]
    rows = [
        [i + 1, res.x_star[i], res.mean_y[i]] + [res.means[m][i] for m in methods]
        for i in range(res.x_star.size)
    ]
    out = Path(args.out)
    trailer = [f"# flat_deviation_{m}={csvio.fmt(res.flat_deviation(m))}" for m in methods]
    csvio.write_table(out, csvio.comment_block("bench average", settings, seed), header, rows, trailer)
    gp = _write_gnuplot(out, AVERAGE_GNUPLOT, methods, 4)
    print(f"wrote {out} and {gp}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmtv", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="estimate a piecewise-constant signal from a CSV file")
    p.add_argument("--input", required=True, help="CSV with one value per line or index,value rows")
    p.add_argument("--column", help="column name when the input has a header")
    p.add_argument("--output", default="fit.csv")
    p.add_argument("--lambda", dest="lam", type=_positive)
    p.add_argument("--sigma", type=_positive, help="penalty scale (default 4*lambda*n)")
    p.add_argument("--sigma-w", dest="sigma_w", type=_positive, help="noise standard deviation")
    _add_penalty(p)
    p.add_argument("--epsilon", type=_positive, default=1e-4)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=100)
    p.add_argument("--tol-cp", dest="tol_cp", type=_positive, default=1e-8)
    p.add_argument("--force", action="store_true", help="run even without the convexity certificate")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("check", help="convexity certificate for (n, lambda, sigma)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--sigma", type=_positive, required=True)
    _add_penalty(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("certify", help="recovery guarantees for a known support")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=_int_list, required=True, help="1-based change points, e.g. 50,100")
    p.add_argument("--signs", type=_sign_list, help="jump signs, e.g. +,+ (default all +)")
    p.add_argument("--zhat", required=True, help="estimated differences (n-1 values, or a denoise output)")
    p.add_argument("--zhat-column", dest="zhat_column", default=None)
    p.add_argument("--lambda", dest="lam", type=_positive)
    p.add_argument("--sigma", type=_positive)
    p.add_argument("--sigma-w", dest="sigma_w", type=_positive)
    p.add_argument("--gamma", default="auto", help="value in (0,1) or 'auto'")
    p.add_argument("--y", help="observations, enables the deterministic conditions")
    p.add_argument("--y-column", dest="y_column", default=None)
    p.add_argument("--zstar", help="true differences (n-1 values), used with --y")
    _add_penalty(p)
    p.set_defaults(func=cmd_certify)

    bench = sub.add_parser("bench", help="Monte-Carlo stair-case experiments")
    bsub = bench.add_subparsers(dest="bench_command", required=True)

    def common(b):
        b.add_argument("--trials", type=int, default=200)
        b.add_argument("--sigma-w", dest="sigma_w", type=_nonnegative, default=1.0)
        b.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
        b.add_argument("--methods", type=_method_list, default=list(METHODS))
        b.add_argument("--epsilon", type=_positive, default=1e-4)
        b.add_argument("--n", type=int, default=200)

    b = bsub.add_parser("stair", help="success rate versus jump amplitude")
    common(b)
    b.add_argument("--amin", type=_positive, default=1.0)
    b.add_argument("--amax", type=_positive, default=1e4)
    b.add_argument("--points", type=int, default=20)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", default="sweep.csv")
    b.set_defaults(func=cmd_bench_stair)

    b = bsub.add_parser("average", help="mean estimates over noise realizations")
    common(b)
    b.add_argument("--a", type=_positive, default=20.0)
    b.add_argument("--out", default="avg.csv")
    b.set_defaults(func=cmd_bench_average)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "trials", 1) < 1:
        parser.print_usage(sys.stderr)
        print("mmtv: error: --trials must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mmtv: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"mmtv: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
