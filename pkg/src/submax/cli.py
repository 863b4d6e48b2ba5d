"""Command-line interface.

Exit codes: 0 success, 1 batch failure, 2 solver failure, 64 usage, 65 data.
Each run writes one provenance line (version, resolved seed, flags) to stderr,
and to ``<out>.provenance.json`` when ``--out`` is given.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from scipy.special import log_ndtr

from . import __version__, kernels
from .errors import BudgetError, DomainError, InvalidArgumentError, MatrixFormatError, NoRootError
from .experiments import (
    BOUND_FIELDS,
    PLOT_FIELDS,
    SPECTRAL_FIELDS,
    ceil_ratio,
    plot_rows,
    render,
    replay_text,
    row_seed,
    run_bound_validation,
    run_chi2_lemma_scan,
    run_rect_simulation,
    run_spectral_experiment,
    run_square_simulation,
    spectral_summary,
    to_csv,
)
from .matrix_io import read_matrix
from .parallel import resolve_threads
from .rng import derive_seed
from .search import SearchConfig, exhaustive_max_average, multi_restart_search
from .thresholds import (
    DEFAULT_EPSILON,
    DEFAULT_LOWER_CONSTANT,
    ThresholdQuery,
    anova_threshold,
    asymptotic_s,
    h_of_tau,
    log_chi2_upper_tail_bound,
    log_prob_bound_anova,
    log_prob_bound_avg,
    log_rect_anova_bound,
    log_rect_avg_bound,
    rect_anova_threshold,
    rect_avg_threshold,
    solve_s,
    solve_s_detailed,
    theorem1_interval,
)
from .special import chi2_cdf

EXIT_OK, EXIT_BATCH, EXIT_SOLVER, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 64, 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def parse_int_list(text: str) -> list[int]:
    """Accept ``7``, ``5,10,15`` or ``1..30`` (inclusive)."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                a, b = part.split("..")
                out.extend(range(int(a), int(b) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list or range: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return value


def _flatten(d, prefix=""):
    out = {}
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _emit_mapping(d, fmt):
    if fmt == "csv":
        flat = _flatten(d)
        return to_csv([flat], list(flat))
    return json.dumps(d, indent=2) + "\n"


def _log_comb(a, b):
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def _bound_block(log_value):
    return {"log_bound": log_value, "bound": 1.0 if log_value >= 0 else math.exp(log_value)}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_threshold(args):
    rect = args.alpha is not None or args.beta is not None
    alpha = 1.0 if args.alpha is None else args.alpha
    beta = 1.0 if args.beta is None else args.beta
    r = 1 if args.r is None else args.r
    if args.anova and not 0 < args.tau < 1:
        raise UsageError(f"--anova needs 0 < tau < 1, got {args.tau}")
    q = ThresholdQuery(n=args.n, tau=args.tau, alpha=alpha, beta=beta, epsilon=args.epsilon, r=r)
    out = {"n": args.n, "tau": args.tau}
    if rect and args.anova:
        out.update(alpha=alpha, beta=beta, c2=args.c2, h=h_of_tau(args.tau),
                   t_rect=rect_anova_threshold(q, args.c2))
        log_b = log_rect_anova_bound
    elif rect:
        out.update(alpha=alpha, beta=beta, c1=args.c1, s_rect=rect_avg_threshold(q, args.c1))
        log_b = log_rect_avg_bound
    elif args.anova:
        out.update(h=h_of_tau(args.tau), t=anova_threshold(args.n, args.tau))
        log_b = log_prob_bound_anova
    else:
        root = solve_s_detailed(args.n, args.tau, widen=args.widen)
        iv = theorem1_interval(args.n, args.tau, lower_constant=args.lower_constant, widen=args.widen)
        try:
            asym = asymptotic_s(args.n, args.tau)
        except DomainError:
            asym = None
        out.update(s_root=root.s, root_regime=root.regime, s_asymptotic=asym,
                   interval_lower=iv.lower, interval_upper=iv.upper,
                   lower_constant=args.lower_constant)
        log_b = log_prob_bound_avg
    if args.r is not None:
        out["bound"] = {"r": r, "epsilon": args.epsilon, **_bound_block(log_b(q))}
    return _emit_mapping(out, args.format or "json"), EXIT_OK


def significance_report(n, m, k, l, *, avg=None, residual=None, level=0.05,
                        epsilon=DEFAULT_EPSILON, c1=0.0, c2=0.0):
    """Bonferroni-style tail bound for one observed k x l block of an m x n matrix."""
    if not (1 <= k <= m and 1 <= l <= n):
        raise UsageError(f"a {k}x{l} block does not fit a {m}x{n} matrix")
    log_count = _log_comb(m, k) + _log_comb(n, l)
    out = {"m": m, "n": n, "k": k, "l": l, "log_count": log_count}
    closed = None
    if avg is not None:
        z = avg * math.sqrt(k * l)
        log_tail = float(log_ndtr(-z))
        out.update(mode="average", statistic=avg, log_tail=log_tail)
        log_value = log_count + log_tail
        if avg > 0:
            closed = _closed_form_avg(n, m, k, l, avg, epsilon, c1)
    else:
        ell = (k - 1) * (l - 1)
        out.update(mode="anova", statistic=residual, dof=ell)
        if ell < 3:
            raise UsageError(f"ANOVA significance needs (k-1)(l-1) >= 3, got {ell}")
        if not 0 < residual < 1:
            raise UsageError(f"ANOVA residual must lie in (0, 1), got {residual}")
        t = ell * residual
        right = (2 - residual) * ell - 4
        exact_left = chi2_cdf(t, ell)
        out["log_exact_left_tail"] = math.log(exact_left) if exact_left > 0 else None
        if t < ell - 2 and right > ell:
            log_tail = log_chi2_upper_tail_bound(ell, right)
            out["log_tail"] = log_tail
            log_value = log_count + log_tail
        else:
            out["log_tail"] = None
            out["note"] = "chi-square Chernoff pipeline needs (1 - tau)(k-1)(l-1) > 4"
            log_value = max(0.0, log_count)
        closed = _closed_form_anova(n, m, k, l, residual, epsilon, c2)
    out.update(_bound_block(log_value))
    out["closed_form"] = closed
    out["level"] = level
    out["verdict"] = "significant" if out["bound"] < level else "not significant"
    return out


def _closed_form_avg(n, m, k, l, tau, epsilon, c1):
    if m == n and k == l and n >= 2:
        try:
            s = solve_s(n, tau, widen=True)
        except NoRootError:
            return None
        r = k - math.ceil(s)
        if r < 1:
            return {"kind": "square", "threshold": s, "r": r, "log_bound": None, "bound": 1.0}
        q = ThresholdQuery(n=n, tau=tau, epsilon=epsilon, r=r)
        return {"kind": "square", "threshold": s, "r": r, **_bound_block(log_prob_bound_avg(q))}
    if m >= n and k >= l and n >= 2:
        q0 = ThresholdQuery(n=n, tau=tau, alpha=m / n, beta=k / l, epsilon=epsilon)
        s = rect_avg_threshold(q0, c1)
        r = l - math.ceil(s)
        if r < 1:
            return {"kind": "rect", "threshold": s, "r": r, "log_bound": None, "bound": 1.0}
        q = ThresholdQuery(n=n, tau=tau, alpha=m / n, beta=k / l, epsilon=epsilon, r=r)
        return {"kind": "rect", "threshold": s, "r": r, **_bound_block(log_rect_avg_bound(q))}
    return None


def _closed_form_anova(n, m, k, l, tau, epsilon, c2):
    if m == n and k == l and n >= 2:
        t = anova_threshold(n, tau)
        r = k - math.ceil(t)
        if r < 1:
            return {"kind": "square", "threshold": t, "r": r, "log_bound": None, "bound": 1.0}
        q = ThresholdQuery(n=n, tau=tau, epsilon=epsilon, r=r)
        return {"kind": "square", "threshold": t, "r": r, **_bound_block(log_prob_bound_anova(q))}
    if m >= n and k >= l and n >= 2:
        q0 = ThresholdQuery(n=n, tau=tau, alpha=m / n, beta=k / l, epsilon=epsilon)
        t = rect_anova_threshold(q0, c2)
        r = l - math.ceil(t)
        if r < 1:
            return {"kind": "rect", "threshold": t, "r": r, "log_bound": None, "bound": 1.0}
        q = ThresholdQuery(n=n, tau=tau, alpha=m / n, beta=k / l, epsilon=epsilon, r=r)
        return {"kind": "rect", "threshold": t, "r": r, **_bound_block(log_rect_anova_bound(q))}
    return None


def cmd_significance(args):
    m = args.n if args.m is None else args.m
    l = args.k if args.l is None else args.l
    report = significance_report(args.n, m, args.k, l, avg=args.avg, residual=args.anova_residual,
                                 level=args.level, epsilon=args.epsilon, c1=args.c1, c2=args.c2)
    return _emit_mapping(report, args.format or "json"), EXIT_OK


def cmd_search(args):
    W = read_matrix(args.input, header=args.header)
    l = args.k if args.l is None else args.l
    if not (1 <= args.k <= W.rows and 1 <= l <= W.cols):
        raise UsageError(f"a {args.k}x{l} block does not fit the {W.rows}x{W.cols} input")
    if args.exact:
        index, value = exhaustive_max_average(W, args.k, l)
        out = {"rows": list(index.row_ids), "cols": list(index.col_ids), "average": value,
               "method": "exhaustive"}
    else:
        cfg = SearchConfig(k=args.k, l=l, restarts=args.restarts, master_seed=args.seed,
                           max_iters=args.max_iters)
        out = {**multi_restart_search(W, cfg, threads=args.threads).to_dict(), "method": "alternating"}
    sig = significance_report(W.cols, W.rows, args.k, l, avg=out["average"], level=args.level)
    out["significance"] = {key: sig[key] for key in ("log_bound", "bound", "verdict")}
    return _emit_mapping(out, args.format or "json"), EXIT_OK


def cmd_simulate(args):
    fmt = args.format or "csv"
    if args.validate_bounds:
        tau = args.tau if args.tau is not None else (2.0 if args.mode == "average" else 0.2)
        res = run_bound_validation(args.n, tau, args.trials, args.seed, mode=args.mode,
                                   epsilon=args.epsilon, threads=args.threads)
        text = render(res.table(), fmt, list(BOUND_FIELDS))
        return text, (EXIT_OK if res.all_ok else EXIT_BATCH)
    if args.k is None:
        raise UsageError("--k is required unless --validate-bounds is given")
    if args.alpha is not None or args.beta is not None:
        records = run_rect_simulation(args.n, args.alpha or 1.0, args.beta or 1.0, args.k, args.restarts,
                                      args.seed, c1=args.c1, threads=args.threads,
                                      max_iters=args.max_iters, record_timing=args.record_timing)
    else:
        records = run_square_simulation(args.n, args.k, args.restarts, args.seed, threads=args.threads,
                                        max_iters=args.max_iters, lower_constant=args.lower_constant,
                                        record_timing=args.record_timing)
    if args.plot_data:
        rows = [p for p in plot_rows(records)
                if p["series"] != "observed" or p["tau"] > args.tau_floor]
        Path(args.plot_data).write_text(to_csv(rows, list(PLOT_FIELDS)), encoding="utf-8", newline="")
    code = EXIT_BATCH if records and all(r.error for r in records) else EXIT_OK
    return render(records, fmt), code


def cmd_spectral(args):
    records = run_spectral_experiment(args.n, args.alpha, args.k, args.l, args.amplitude, args.trials,
                                      args.seed, threads=args.threads, tol=args.tol,
                                      max_iter=args.max_iter)
    print(json.dumps({"summary": spectral_summary(records, args.alpha)}), file=sys.stderr)
    return render(records, args.format or "csv", list(SPECTRAL_FIELDS)), EXIT_OK


def cmd_chi2check(args):
    report = run_chi2_lemma_scan(args.ell_max, args.grid_points)
    code = EXIT_OK if report.passed else EXIT_BATCH
    if args.format == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n", code
    ell, t, left, right = report.reference
    lines = [f"chi2check: ell 3..{report.ell_max}, {report.checked} points, "
             f"{len(report.violations)} violations",
             f"reference ell={ell} t={t}: left={left:.5f} right={right:.5f}"]
    lines += [f"violation ell={v[0]} t={v[1]!r} left={v[2]!r} right={v[3]!r}" for v in report.violations]
    return "\n".join(lines) + "\n", code


def cmd_replay(args):
    text = Path(args.path).read_text(encoding="utf-8")
    try:
        outcome = replay_text(text, threads=args.threads)
    except (ValueError, KeyError, TypeError) as exc:
        raise MatrixFormatError(f"{args.path}: {exc}") from exc
    status = "identical" if outcome.identical else "DIFFERENT"
    msg = f"replay: {outcome.rows} rows, {status}\n"
    if not outcome.identical and args.out:
        Path(str(args.out) + ".replayed").write_text(outcome.regenerated, encoding="utf-8", newline="")
    return msg, (EXIT_OK if outcome.identical else EXIT_BATCH)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default $SUBMAX_THREADS or all CPUs)")

    p = _Parser(prog="submax", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"submax {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("threshold", parents=[common], help="size thresholds and bounds")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--tau", type=float, required=True)
    t.add_argument("--alpha", type=float, default=None)
    t.add_argument("--beta", type=float, default=None)
    t.add_argument("--anova", action="store_true")
    t.add_argument("--c1", type=float, default=0.0,
                   help="additive constant of the rectangular average threshold (default 0)")
    t.add_argument("--c2", type=float, default=0.0,
                   help="additive constant of the rectangular ANOVA threshold (default 0)")
    t.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    t.add_argument("--r", type=int, default=None, help="also report the tail bound at offset r")
    t.add_argument("--lower-constant", type=float, default=DEFAULT_LOWER_CONSTANT,
                   help="constant c in the lower end s - 4/tau^2 - c/tau^2 - 4 (> 8 ln 2; default 12 ln 2)")
    t.add_argument("--widen", action="store_true",
                   help="search all of (0, n) when the large-n bracket has no sign change")
    t.set_defaults(func=cmd_threshold)

    s = sub.add_parser("significance", parents=[common], help="Bonferroni tail bound for one block")
    s.add_argument("--n", type=int, required=True, help="matrix columns")
    s.add_argument("--m", type=int, default=None, help="matrix rows (default n)")
    s.add_argument("--k", type=int, required=True, help="block rows")
    s.add_argument("--l", type=int, default=None, help="block columns (default k)")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--avg", type=float)
    g.add_argument("--anova-residual", type=float)
    s.add_argument("--level", type=float, default=0.05)
    s.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    s.add_argument("--c1", type=float, default=0.0)
    s.add_argument("--c2", type=float, default=0.0)
    s.set_defaults(func=cmd_significance)

    se = sub.add_parser("search", parents=[common], help="search a matrix file")
    se.add_argument("--input", required=True, help="CSV or GRMMAT01 file")
    se.add_argument("--header", action="store_true", help="skip a CSV header line")
    se.add_argument("--k", type=int, required=True)
    se.add_argument("--l", type=int, default=None)
    se.add_argument("--restarts", type=int, default=100)
    se.add_argument("--max-iters", type=int, default=1000)
    se.add_argument("--exact", action="store_true", help="exhaustive search instead")
    se.add_argument("--level", type=float, default=0.05)
    se.set_defaults(func=cmd_search)

    si = sub.add_parser("simulate", parents=[common], help="Monte Carlo search simulations")
    si.add_argument("--n", type=int, required=True)
    si.add_argument("--k", type=parse_int_list, default=None, help="e.g. 1..30 or 5,10,15")
    si.add_argument("--restarts", type=int, default=1000)
    si.add_argument("--alpha", type=float, default=None)
    si.add_argument("--beta", type=float, default=None)
    si.add_argument("--c1", type=float, default=0.0)
    si.add_argument("--max-iters", type=int, default=1000)
    si.add_argument("--lower-constant", type=float, default=DEFAULT_LOWER_CONSTANT)
    si.add_argument("--tau-floor", type=float, default=0.5,
                    help="observed points with tau_k at or below this are left out of --plot-data")
    si.add_argument("--plot-data", default=None, help="also write tidy (tau, k, series) CSV here")
    si.add_argument("--record-timing", action="store_true",
                    help="fill wall_time_ms (makes output non-reproducible)")
    si.add_argument("--validate-bounds", action="store_true")
    si.add_argument("--mode", choices=("average", "anova"), default="average")
    si.add_argument("--tau", type=float, default=None)
    si.add_argument("--trials", type=int, default=2000)
    si.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    si.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("spectral", parents=[common], help="planted-block singular value checks")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--amplitude", type=float, required=True)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--max-iter", type=int, default=10_000)
    sp.set_defaults(func=cmd_spectral)

    c = sub.add_parser("chi2check", parents=[common], help="chi-square left/right tail scan")
    c.add_argument("--ell-max", type=int, default=50)
    c.add_argument("--grid-points", type=int, default=20)
    c.set_defaults(func=cmd_chi2check)

    r = sub.add_parser("replay", parents=[common], help="regenerate a record file and compare bytes")
    r.add_argument("path")
    r.set_defaults(func=cmd_replay)
    return p


def _derived_seeds(args) -> dict:
    if args.command == "simulate" and not args.validate_bounds and args.k is not None:
        if args.alpha is None and args.beta is None:
            geo = [(args.n, args.n, k, k) for k in sorted(set(args.k))]
        else:
            m = ceil_ratio(args.alpha or 1.0, args.n)
            geo = [(m, args.n, ceil_ratio(args.beta or 1.0, k), k) for k in sorted(set(args.k))]
        return {f"{m}x{n}:{k}x{l}": row_seed(args.seed, m, n, k, l) for m, n, k, l in geo}
    if args.command == "spectral":
        return {str(t): derive_seed(args.seed, "spectral", t) for t in range(args.trials)}
    if args.command == "search" and not args.exact:
        return {"restart_i": "split(seed, i)"}
    return {}


def _provenance(args) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "threads", "out")}
    return {"tool": "submax", "version": __version__, "command": args.command,
            "seed": args.seed, "backend": kernels.BACKEND, "flags": flags,
            "derived_seeds": _derived_seeds(args)}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.threads = resolve_threads(args.threads)
        prov = json.dumps(_provenance(args), sort_keys=True, default=str)
        print(f"# provenance {prov}", file=sys.stderr)
        text, code = args.func(args)
    except NoRootError as exc:
        print(f"submax: no root: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (UsageError, InvalidArgumentError, DomainError, BudgetError) as exc:
        print(f"submax: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MatrixFormatError, OSError, UnicodeDecodeError) as exc:
        print(f"submax: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.out and args.command != "replay":
        Path(args.out).write_text(text, encoding="utf-8", newline="")
        Path(str(args.out) + ".provenance.json").write_text(prov + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
