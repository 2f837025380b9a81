"""Command-line entry point: ``qsearch <subcommand> ...``.

Data goes to standard output (or --output), logs to standard error.
Exit codes: 0 success, 1 usage error, 2 numerical-consistency failure,
3 infeasible size.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys

from . import lab
from .grover import optimal_queries, run_grover
from .hilbert import NormDriftError
from .lattice import GeometryError, SizeError, make_lattice
from .spatial import ConsistencyError, SearchConfig, lower_bound_check, run_search

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SIZE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> list[int]:
    try:
        return lab.parse_int_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None


def _labels(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qsearch", description="Grover and lattice spatial-search experiments.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--max-n", type=int, default=None, help="size cap (default: $QSEARCH_MAX_N or 2^22)")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("grover", help="run Grover search on N items")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--marked", type=_ints, default=[0])
    g.add_argument("--q", type=int, default=None, help="iterations (default: optimal)")
    g.add_argument("--trace", action="store_true", help="print the success probability after each query")

    s = sub.add_parser("spatial", help="one lattice search run")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--t1", type=int, default=3)
    tau = s.add_mutually_exclusive_group()
    tau.add_argument("--tau", type=float)
    tau.add_argument("--tune", action="store_true", help="tune tau (the default when --tau is absent)")
    s.add_argument("--t2-max", type=int)
    s.add_argument("--curve", action="store_true", help="print the full P(t2) curve")

    t = sub.add_parser("tulsi", help="regulated d=2 search")
    t.add_argument("--l", type=int, required=True)
    t.add_argument("--d", type=int, default=2)
    t.add_argument("--t1", type=int, default=3)
    t.add_argument("--tau", type=float)
    cd = t.add_mutually_exclusive_group()
    cd.add_argument("--cos-delta", default="auto", help='number, "auto" or "auto:k"')
    cd.add_argument("--sweep-delta", type=_labels)
    t.add_argument("--order", choices=("reflect", "literal"), default="reflect")
    t.add_argument("--t2-max", type=int)
    t.add_argument("--output")

    w = sub.add_parser("sweep", help="run a sweep from a key = value config file")
    w.add_argument("--config", required=True)
    w.add_argument("--jobs", type=int)
    w.add_argument("--output")

    f3 = sub.add_parser("fig3", help="effective queries vs d, fitted to a + b/d")
    f3.add_argument("--ls", type=_ints, default=[4])
    f3.add_argument("--ds", type=_ints, default=list(range(3, 10)))
    f3.add_argument("--t1", type=int, default=3)
    f3.add_argument("--output")

    f4 = sub.add_parser("fig4", help="regulated d=2 scaling, fitted to a + b/L")
    f4.add_argument("--ls", type=_ints, default=[16, 32, 64, 128])
    f4.add_argument("--cos-delta", type=_labels, default=["auto"])
    f4.add_argument("--t1", type=int, default=3)
    f4.add_argument("--no-control", action="store_true")
    f4.add_argument("--output")

    tb = sub.add_parser("table", help="classical vs quantum query counts")
    tb.add_argument("--ns", type=_ints, required=True)
    tb.add_argument("--format", choices=("text", "csv"), default="text")
    return p


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _cmd_grover(a, max_n):
    if max_n is not None and a.n > max_n:
        raise SizeError(f"N={a.n} exceeds the size cap {max_n}")
    m = len(set(a.marked))
    q = a.q
    if q is None:
        q, _ = optimal_queries(a.n, m)
    run = run_grover(a.n, a.marked, q)
    out = csv.writer(sys.stdout, lineterminator="\n")
    if a.trace:
        out.writerow(("q", "p_success"))
        for k, pk in run.trace:
            out.writerow((k, lab.fmt(pk)))
    else:
        out.writerow(("N", "M", "Q", "p_success"))
        out.writerow((a.n, m, q, lab.fmt(run.trace[-1][1])))
    return EXIT_OK


def _cmd_spatial(a, max_n):
    lat = make_lattice(a.d, a.l, max_n)
    r = run_search(SearchConfig(lat, t1=a.t1, tau=a.tau, t2_max=a.t2_max))
    rep = lower_bound_check(lat, r)
    out = csv.writer(sys.stdout, lineterminator="\n")
    if a.curve:
        out.writerow(("t2", "p_marked"))
        for k, pk in enumerate(r.p_curve):
            out.writerow((k, lab.fmt(float(pk))))
        return EXIT_OK
    rec = lab.SearchRecord("spatial", a.d, a.l, lat.N, a.t1, r.tau, None, r.t2_star, r.p_max,
                           r.effective_queries, r.walk_steps_total, None, r.status)
    sys.stdout.write(lab.records_to_csv([rec]))
    logging.getLogger(__name__).info(
        "steps/(dL)=%.4g effective/sqrt(N)=%.4g", rep.steps_over_dL, rep.queries_over_sqrt_n)
    return EXIT_OK


def _consistency_status(records) -> int:
    bad = [r for r in records if r.status in ("error:ConsistencyError", "error:NormDriftError")]
    return EXIT_NUMERIC if bad else EXIT_OK


def _cmd_tulsi(a, max_n):
    labels = a.sweep_delta or [a.cos_delta]
    spec = lab.SweepSpec("tulsi", dims=[a.d], sides=[a.l], t1_values=[a.t1], tau=a.tau,
                         cos_delta_values=labels, t2_max=a.t2_max, order=a.order, max_n=max_n,
                         stop_at_peak=False)
    recs = lab.sweep(spec)
    _emit(lab.records_to_csv(recs), a.output)
    return _consistency_status(recs)


def _cmd_sweep(a, max_n):
    spec = lab.load_config(a.config)
    if a.jobs is not None:
        spec.jobs = a.jobs
    if a.output is not None:
        spec.output_path = a.output
    if a.max_n is not None or "QSEARCH_MAX_N" in os.environ:
        # a config-file max_n only yields to an explicit flag or environment cap
        spec.max_n = max_n
    recs = lab.sweep(spec)
    if not spec.output_path:
        sys.stdout.write(lab.records_to_csv(recs))
    return _consistency_status(recs)


def _cmd_fig3(a, max_n):
    recs, fit = lab.reproduce_fig3(a.ls, a.ds, a.t1, max_n=max_n)
    _emit(lab.records_to_csv(recs), a.output)
    if fit is not None:
        print(f"fit y = a + b/d: a={fit.a:.6g} b={fit.b:.6g} rms={fit.residual_rms:.3g} "
              f"n={fit.points_used} (a - pi/4 = {fit.a - math.pi / 4:+.4g})", file=sys.stderr)
    return _consistency_status(recs)


def _cmd_fig4(a, max_n):
    recs, fits = lab.reproduce_fig4(a.ls, a.cos_delta, a.t1, max_n=max_n, control=not a.no_control)
    _emit(lab.records_to_csv(recs), a.output)
    for label, fit in fits.items():
        if fit is not None:
            print(f"cos_delta={label}: y = a + b/L with a={fit.a:.6g} b={fit.b:.6g} "
                  f"rms={fit.residual_rms:.3g}", file=sys.stderr)
    return _consistency_status(recs)


def _cmd_table(a, max_n):
    rows = lab.grover_table(a.ns)
    sys.stdout.write(lab.table_csv(rows) if a.format == "csv" else lab.table_text(rows))
    return EXIT_OK


_COMMANDS = {
    "grover": _cmd_grover,
    "spatial": _cmd_spatial,
    "tulsi": _cmd_tulsi,
    "sweep": _cmd_sweep,
    "fig3": _cmd_fig3,
    "fig4": _cmd_fig4,
    "table": _cmd_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(a.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    log = logging.getLogger("qsearch")
    try:
        max_n = a.max_n if a.max_n is not None else lab.max_n_from_env()
        return _COMMANDS[a.cmd](a, max_n)
    except SizeError as exc:
        log.error("%s", exc)
        return EXIT_SIZE
    except (NormDriftError, ConsistencyError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except (GeometryError, lab.ConfigError, ValueError, IndexError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
