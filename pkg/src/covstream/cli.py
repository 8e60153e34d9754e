"""Command-line interface.

Data files are read with observations as ROWS (csv) or in the COVS binary
layout, and transposed to the internal column-per-observation form. State
files are COVS matrices written by ``fit`` and rewritten in place by
``update``/``downdate``/``mixed`` unless ``--out`` is given.

Exit status: 0 on success, 1 on any computation error (the error class name
is printed on stderr), 2 on malformed or unreadable input files.
"""

import argparse
import sys

import numpy as np

from covstream import _kernels, moments
from covstream.core import covariance, from_columns
from covstream.errors import CovStreamError, MatrixFileError
from covstream.ldl import ldl_state, solve
from covstream.matrixfile import read_matrix, read_state, write_state
from covstream.window import WindowConfig, window_init, window_score, window_slide


def _fmt(v):
    return format(float(v), ".17g")


def _csv_line(values):
    return ",".join(_fmt(v) for v in values)


def _print_state(state, out):
    m = state.dim
    print(f"count={state.count}", file=sys.stderr)
    out.write("kind," + ",".join(f"x{i}" for i in range(m)) + "\n")
    out.write("mean," + _csv_line(state.mean) + "\n")
    if state.count >= 2:
        cov = covariance(state)
        for i in range(m):
            out.write("cov," + _csv_line(cov[i]) + "\n")
    else:
        print("covariance undefined for fewer than 2 observations", file=sys.stderr)


def _read_rows(path, args):
    return read_matrix(path, fmt=getattr(args, "format", None),
                       header=getattr(args, "header", False))


def cmd_fit(args, out):
    state = from_columns(_read_rows(args.input, args))
    if args.out:
        write_state(args.out, state)
    _print_state(state, out)


def _save(args, state):
    write_state(args.out or args.state, state)


def cmd_update(args, out):
    state = read_state(args.state)
    state = moments.update(state, _read_rows(args.rows, args))
    _save(args, state)
    _print_state(state, out)


def cmd_downdate(args, out):
    state = read_state(args.state)
    state = moments.downdate(state, _read_rows(args.rows, args))
    _save(args, state)
    _print_state(state, out)


def cmd_mixed(args, out):
    state = read_state(args.state)
    m = state.dim
    Yu = _read_rows(args.add, args) if args.add else np.zeros((m, 0))
    Yd = _read_rows(args.remove, args) if args.remove else np.zeros((m, 0))
    state = moments.mixed_update_downdate(state, Yu, Yd, root=args.root)
    _save(args, state)
    _print_state(state, out)


def cmd_ldl(args, out):
    ls = ldl_state(read_state(args.state))
    m = ls.dim
    out.write("kind," + ",".join(f"x{i}" for i in range(m)) + "\n")
    for i in range(m):
        out.write("L," + _csv_line(ls.L[i]) + "\n")
    out.write("D," + _csv_line(ls.D) + "\n")


def cmd_solve(args, out):
    ls = ldl_state(read_state(args.state))
    B = _read_rows(args.rhs, args)
    out.write(",".join(f"x{i}" for i in range(ls.dim)) + "\n")
    for j in range(B.shape[1]):
        out.write(_csv_line(solve(ls, B[:, j])) + "\n")


def cmd_window(args, out):
    X = _read_rows(args.stream, args)
    probes = _read_rows(args.score, args) if args.score else None
    cfg = WindowConfig(
        width=args.width,
        step_add=args.step,
        step_remove=args.step,
        backend=args.backend,
        refactor_every=args.refactor_every,
        drift_tol=args.drift_tol,
        seed=args.seed,
    )
    m, n = X.shape
    ws = window_init(cfg, X[:, : args.width])
    header = ["step"] + [f"var{i}" for i in range(m)]
    if probes is not None:
        header += [f"score{p}" for p in range(probes.shape[1])]
    out.write(",".join(header) + "\n")

    def emit(step):
        row = [str(step)] + [_fmt(v) for v in np.diag(ws.stats.scatter) / (ws.stats.count - 1)]
        if probes is not None:
            row += [_fmt(window_score(ws, probes[:, p])) for p in range(probes.shape[1])]
        out.write(",".join(row) + "\n")

    emit(0)
    pos, step = args.width, 0
    while pos + args.step <= n:
        window_slide(ws, X[:, pos : pos + args.step])
        pos += args.step
        step += 1
        emit(step)
    r = ws.report
    print(
        f"steps={r.steps} refactors={r.refactors} scheduled={r.scheduled_refactors} "
        f"drift={r.drift_refactors} definiteness_recoveries={r.definiteness_recoveries} "
        f"spot_checks={r.spot_checks}",
        file=sys.stderr,
    )


def cmd_verify(args, out):
    from covstream.verify import digest, run_verify, summarize

    checks = run_verify(seed=args.seed, cases=args.cases)
    failed = [c for c in checks if not c.passed]
    for c in summarize(checks):
        status = "PASS" if all(x.passed for x in checks if x.name == c.name) else "FAIL"
        out.write(f"{status} {c.name:32s} worst={c.value:.3e} tol={c.tol:.0e}\n")
    out.write(f"checks={len(checks)} failed={len(failed)} digest={digest(checks)}\n")
    for c in failed[:20]:
        print(f"failed: {c.name} case={c.case} value={c.value!r} tol={c.tol}",
              file=sys.stderr)
    return 1 if failed else 0


def cmd_bench(args, out):
    from covstream import bench
    from covstream.counting import count_report

    r = bench.speedup(args.m, args.n, args.k, seed=args.seed)
    out.write("kind,m,n,k,incremental_s,naive_s,speedup\n")
    out.write(f"covariance_update,{r['m']},{r['n']},{r['k']},{r['incremental_s']:.6g},"
              f"{r['naive_s']:.6g},{r['speedup']:.1f}\n")
    if args.ldl:
        r = bench.ldl_speedup(args.m, args.n, args.k, seed=args.seed)
        out.write(f"ldl_update,{r['m']},{r['n']},{r['k']},{r['incremental_s']:.6g},"
                  f"{r['naive_s']:.6g},{r['speedup']:.1f}\n")
    if args.backends:
        out.write("\nbackend,kernel,m,k,seconds\n")
        for row in bench.backend_comparison(args.m, args.k, seed=args.seed):
            out.write(f"{row['backend']},{row['kernel']},{row['m']},{row['k']},"
                      f"{row['seconds']:.6g}\n")
    if args.count_ops:
        out.write("\n")
        for kind in ("update", "downdate", "ldl_update", "ldl_downdate"):
            rec = count_report(args.m, args.n, args.k, kind, seed=args.seed)
            out.write("\n".join(rec.lines()) + "\n")


def build_parser():
    p = argparse.ArgumentParser(prog="covstream", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version=f"%(prog)s 0.1.0 (kernels: {_kernels.active.name})")
    sub = p.add_subparsers(dest="command", required=True)

    def data_opts(sp):
        sp.add_argument("--format", choices=("csv", "bin"), default=None,
                        help="input format (default: by extension or magic)")
        sp.add_argument("--header", action="store_true",
                        help="csv inputs start with a header line")

    sp = sub.add_parser("fit", help="build a covariance state from data")
    sp.add_argument("input")
    sp.add_argument("--out")
    data_opts(sp)
    sp.set_defaults(func=cmd_fit)

    for name, func in (("update", cmd_update), ("downdate", cmd_downdate)):
        sp = sub.add_parser(name, help=f"{name} a state file with observations")
        sp.add_argument("state")
        sp.add_argument("rows")
        sp.add_argument("--out")
        data_opts(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("mixed", help="add and remove observations in one step")
    sp.add_argument("state")
    sp.add_argument("--add")
    sp.add_argument("--remove")
    sp.add_argument("--root", choices=("minus", "plus"), default="minus")
    sp.add_argument("--out")
    data_opts(sp)
    sp.set_defaults(func=cmd_mixed)

    sp = sub.add_parser("ldl", help="print the LDL factors of a state's covariance")
    sp.add_argument("state")
    sp.set_defaults(func=cmd_ldl)

    sp = sub.add_parser("solve", help="solve S x = b for each row of b")
    sp.add_argument("state")
    sp.add_argument("rhs")
    data_opts(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("window", help="run the sliding-window engine over a stream")
    sp.add_argument("--width", type=int, required=True)
    sp.add_argument("--stream", required=True)
    sp.add_argument("--backend", choices=("ldl", "covariance_only"), default="ldl")
    sp.add_argument("--step", type=int, default=1)
    sp.add_argument("--score", help="probe observations to score at every step")
    sp.add_argument("--refactor-every", type=int, default=0)
    sp.add_argument("--drift-tol", type=float, default=1e-8)
    sp.add_argument("--seed", type=int, default=0)
    data_opts(sp)
    sp.set_defaults(func=cmd_window)

    sp = sub.add_parser("verify", help="run the oracle property suite")
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--cases", type=int, default=200)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="incremental vs naive timings")
    sp.add_argument("--m", type=int, default=100)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count-ops", action="store_true",
                    help="also print instrumented operation counts")
    sp.add_argument("--ldl", action="store_true", help="also time the LDL update")
    sp.add_argument("--backends", action="store_true",
                    help="also time numba against the numpy fallback")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out) or 0
    except MatrixFileError as exc:
        print(f"MatrixFileError: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except CovStreamError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
