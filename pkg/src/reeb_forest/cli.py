"""``reeb-forest`` command line: approximate | hyp | bounds | zn | verify.

Exit codes: 0 success, 1 a bound inequality failed, 2 unreadable or
malformed input, 3 input violates a structural invariant.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

from .graph import GraphError, MetricGraph, hyp_base, hyp_full
from .io import FORMATS, ParseError, dump_json, format_number, read_input, to_dot, to_newick, write_text
from .metric import EmbeddingError, FiniteMetricSpace, MetricError, approximate_metric_space, sweep_bases
from .poset import BoundUnavailable, BudgetExceeded, PosetError
from .reeb import TOL, FilteredPoset, approximation_bound, hyp_poset, reeb_poset, reeb_tree
from .report import jsonable

EXIT_OK, EXIT_BOUND, EXIT_PARSE, EXIT_INVARIANT = 0, 1, 2, 3


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _n_range(text: str) -> list[int]:
    """``3``, ``1..8``, ``1-8``, ``1:8`` (inclusive) or ``1,2,5``."""
    try:
        for sep in ("..", ":", "-"):
            if sep in text:
                a, b = text.split(sep, 1)
                return list(range(int(a), int(b) + 1))
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reeb-forest",
                                 description="Tree approximations of posets, metric graphs and finite metric spaces.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common_input(p):
        p.add_argument("--input", required=True, help="input file")
        p.add_argument("--format", default="auto", choices=FORMATS)
        p.add_argument("--base", default=None, help="base point (default: sweep all points)")
        p.add_argument("--mf-mode", default="exact", choices=("exact", "bound"))
        p.add_argument("--tol", type=_positive, default=TOL)

    p = sub.add_parser("approximate", help="build the tree and report distortion and bounds")
    common_input(p)
    p.add_argument("--out-tree", help="Newick output path")
    p.add_argument("--out-dot", help="DOT output path for the covering graph")
    p.add_argument("--out-report", help="JSON report path (default: stdout)")

    p = sub.add_parser("hyp", help="print the hyperbolicity of the input")
    common_input(p)

    p = sub.add_parser("bounds", help="print all bounds as JSON")
    common_input(p)
    p.add_argument("--out-report")

    p = sub.add_parser("zn", help="growth comparison table for the Z_n family (CSV)")
    p.add_argument("--n-range", type=_n_range, default=list(range(1, 9)))
    p.add_argument("--R", type=_positive, default=1.0)
    p.add_argument("--r", type=_positive, default=1.0)
    p.add_argument("--tol", type=_positive, default=TOL)
    p.add_argument("--out-report", help="also write the full rows as JSON")

    p = sub.add_parser("verify", help="run the seeded property suites")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--suite", action="append", help="restrict to a suite (repeatable)")
    p.add_argument("--out-report")
    return ap


def _emit(text: str, path: str | None, out) -> None:
    if path:
        write_text(path, text)
    else:
        out.write(text)


def _load(args):
    return read_input(args.input, args.format, base=None)


def _run(args, obj):
    """Pipeline result: (report dict, ok, tree, filtered poset for DOT, failing pair)."""
    if isinstance(obj, FilteredPoset):
        rp, _ = reeb_poset(obj)
        _, rep = approximation_bound(rp, args.mf_mode, tol=args.tol)
        T, _ = reeb_tree(rp)
        return rep.to_dict(), rep.ok, T, rp, rep.worst_pair
    if isinstance(obj, FiniteMetricSpace):
        res = approximate_metric_space(obj, base=args.base, mf_mode=args.mf_mode, tol=args.tol)
    else:
        G: MetricGraph = obj
        if args.base is not None:
            bases = [args.base]
        elif G.base is not None:
            bases = [G.base]
        else:
            bases = list(G.vertices)
        for b in bases:
            G.index(b)
        res = sweep_bases(G, bases, mf_mode=args.mf_mode, tol=args.tol)
    rep = res.report
    return rep.to_dict(), rep.ok, res.tree, res.projection.source, rep.worst_pair


def cmd_approximate(args, out) -> int:
    report, ok, T, fp, pair = _run(args, _load(args))
    if args.out_tree:
        write_text(args.out_tree, to_newick(T) + "\n")
    if args.out_dot:
        write_text(args.out_dot, to_dot(fp))
    _emit(dump_json(jsonable(report)), args.out_report, out)
    if not ok:
        print(f"bound check failed; worst pair {pair}", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def cmd_hyp(args, out) -> int:
    obj = _load(args)
    if isinstance(obj, FilteredPoset):
        h = hyp_poset(reeb_poset(obj)[0])
    else:
        d = obj.distance_matrix()
        h = hyp_full(d) if args.base is None else hyp_base(d, obj.index(args.base))
    out.write(format_number(h) + "\n")
    return EXIT_OK


BOUND_KEYS = ("base", "hyp", "hyp_p", "hyp_f", "betti", "MF", "MF_mode", "bound", "bound_main",
              "bound_graph", "bound_graph_p", "upsilon", "phi_of_G", "phi_upper", "distortion",
              "ok", "log_base")


def cmd_bounds(args, out) -> int:
    report, ok, *_ = _run(args, _load(args))
    picked = {k: report[k] for k in BOUND_KEYS if k in report}
    _emit(dump_json(jsonable(picked)), args.out_report, out)
    return EXIT_OK if ok else EXIT_BOUND


ZN_COLUMNS = ("n", "hyp", "upsilon", "phi", "distortion", "ratio")


def cmd_zn(args, out) -> int:
    from .bench.zn import growth_comparison

    if args.R < args.r:
        print("need R >= r", file=sys.stderr)
        return EXIT_INVARIANT
    rows = growth_comparison(args.n_range, args.R, args.r, tol=args.tol)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ZN_COLUMNS)
    for row in rows:
        w.writerow([row["n"]] + [format_number(row[k]) for k in ZN_COLUMNS[1:]])
    out.write(buf.getvalue())
    if args.out_report:
        write_text(args.out_report, dump_json(jsonable(rows)))
    bad = [row["n"] for row in rows if not row["ok"]]
    if bad:
        print(f"growth comparison failed for n = {bad}", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from .bench.suites import SUITES, run_verification

    if args.suite:
        unknown = [s for s in args.suite if s not in SUITES]
        if unknown:
            print(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}", file=sys.stderr)
            return EXIT_INVARIANT
    summary = run_verification(args.seed, args.count, args.size, suites=args.suite)
    _emit(dump_json(jsonable(summary)), args.out_report, out)
    return EXIT_OK if summary["ok"] else EXIT_BOUND


COMMANDS = {
    "approximate": cmd_approximate,
    "hyp": cmd_hyp,
    "bounds": cmd_bounds,
    "zn": cmd_zn,
    "verify": cmd_verify,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as e:
        print(f"cannot read input: {e}", file=sys.stderr)
        return EXIT_PARSE
    except MetricError as e:
        where = f" (triple {e.triple})" if e.triple else f" (pair {e.pair})" if e.pair else ""
        print(f"invalid metric: {e}{where}", file=sys.stderr)
        return EXIT_INVARIANT
    except (EmbeddingError, GraphError, PosetError, BoundUnavailable, BudgetExceeded) as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except KeyError as e:
        print(f"unknown point {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
