"""Command-line front end.

Subcommands: gen, apply, check {duality|pointwise|weak1|j2|transform},
probe {sharpness|unbounded}, search. Exit code 0 means every hard check
passed, 2 signals a check failure, 1 a usage or I/O error. All randomized
commands take --seed (default 42) and are byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import lab
from .errors import MhlsError
from .filtration import (
    Chain,
    Dyadic,
    Explicit,
    Random,
    Uniform,
    build_tree,
    deserialize_tree,
    serialize_tree,
)
from .fractional import (
    Exponents,
    OperatorKind,
    apply_to_function,
    truncated_transform,
)
from .martingale import MartingaleSequence, SimpleFunction
from .reports import ExperimentReport, TrialRow, emit_report

PROG = "mhls"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_exponents(p):
        p.add_argument("--alpha", type=float, help="order of integration, in (0,1)")
        p.add_argument("--p", dest="p_exp", type=float, help="input L_p exponent")
        p.add_argument("--q", dest="q_exp", type=float, help="output L_q exponent")

    def add_output(p):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    g = sub.add_parser("gen", help="generate a filtration tree as JSON")
    g.add_argument("--tree-kind", choices=("dyadic", "uniform", "chain", "random", "explicit"), required=True)
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--m", type=int, default=2, help="arity for uniform trees")
    g.add_argument("--chain", help="comma-separated chain masses r_0,r_1,...")
    g.add_argument("--children", help="JSON nested children lists for explicit trees")
    g.add_argument("--max-children", type=int, default=3)
    g.add_argument("--min-ratio", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--out")

    a = sub.add_parser("apply", help="apply an operator to a function file")
    a.add_argument("--op", choices=[k.value for k in OperatorKind], default="ia")
    add_exponents(a)
    a.add_argument("--tree", required=True, help="tree JSON file")
    a.add_argument("--fn", action="append", required=True, help="function JSON file")
    a.add_argument("--out", help="write the result function as JSON")

    c = sub.add_parser("check", help="run a hard (tier-1) verification")
    c.add_argument("what", choices=("duality", "pointwise", "weak1", "j2", "transform"))
    c.add_argument("--tree", help="explicit tree file: check this single instance")
    c.add_argument("--fn", action="append", help="function file(s) for the instance")
    c.add_argument("--tree-kind", choices=("random",), default="random")
    c.add_argument("--depth", type=int, default=12, help="maximum ensemble tree depth")
    add_exponents(c)
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--tol", type=float, help="override the check tolerance")
    add_output(c)

    pr = sub.add_parser("probe", help="ratio sweeps over dyadic splits")
    pr.add_argument("what", choices=("sharpness", "unbounded"))
    add_exponents(pr)
    pr.add_argument("--skews", type=int, default=20,
                    help="number of dyadic splits (sharpness from 2^-1, unbounded from 2^-2)")
    add_output(pr)

    s = sub.add_parser("search", help="hill-climb for extremal operator ratios")
    s.add_argument("--op", choices=[k.value for k in OperatorKind], default="ia")
    add_exponents(s)
    s.add_argument("--budget", type=int, default=2000)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--max-children", type=int, default=3)
    s.add_argument("--min-ratio", type=float, default=0.02)
    add_output(s)
    return parser


def _resolve_exponents(args) -> Exponents:
    """Exponents from --alpha/--p/--q: alpha with p (q derived), or p with q
    (alpha derived); a full triple is validated to 1e-12."""
    alpha, p, q = args.alpha, args.p_exp, args.q_exp
    if p is None:
        raise UsageError("--p is required (give --alpha with --p, or --p with --q)")
    if alpha is not None and q is not None:
        return Exponents(alpha, p, q)
    if alpha is not None:
        return Exponents.from_alpha_p(alpha, p)
    if q is not None:
        return Exponents.from_p_q(p, q)
    raise UsageError("give --alpha with --p, or an explicit --p/--q pair")


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_tree(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize_tree(fh.read())


def _load_fn(tree, path: str) -> SimpleFunction:
    with open(path, "r", encoding="utf-8") as fh:
        return SimpleFunction.from_payload(tree, json.load(fh))


def _format_values(values) -> str:
    return "[" + ", ".join(f"{v:.5f}" for v in values) + "]"


def _cmd_gen(args) -> int:
    kind = args.tree_kind
    if kind == "dyadic":
        spec = Dyadic(args.depth)
    elif kind == "uniform":
        spec = Uniform(args.m, args.depth)
    elif kind == "chain":
        if not args.chain:
            raise UsageError("chain trees need --chain r_0,r_1,...")
        spec = Chain([float(x) for x in args.chain.split(",")])
    elif kind == "explicit":
        if not args.children:
            raise UsageError("explicit trees need --children JSON")
        spec = Explicit(json.loads(args.children))
    else:
        spec = Random(args.seed, args.depth, args.max_children, args.min_ratio)
    _write(serialize_tree(build_tree(spec)), args.out)
    return 0


def _cmd_apply(args) -> int:
    e = _resolve_exponents(args)
    kind = OperatorKind(args.op)
    tree = _load_tree(args.tree)
    f = _load_fn(tree, args.fn[0])
    out = apply_to_function(f, e, kind)
    print(_format_values(out.values))
    if args.out:
        _write(json.dumps(out.to_payload()), args.out)
    return 0


def _single_instance_check(args, e: Exponents) -> ExperimentReport:
    tree = _load_tree(args.tree)
    what = args.what
    if what == "duality":
        if not args.fn or len(args.fn) != 2:
            raise UsageError("check duality --tree needs two --fn files (f and g)")
        f = _load_fn(tree, args.fn[0])
        g = _load_fn(tree, args.fn[1])
        kwargs = {"rel_tol": args.tol, "abs_tol": args.tol} if args.tol is not None else {}
        return lab.check_duality(tree, f, g, e.alpha, **kwargs)
    if what == "pointwise":
        # the chain runs down the leftmost branch of the tree file
        r = tuple(float(tree._mprob[n][0]) for n in range(tree.depth + 1))
        chain = lab.ChainInstance(r, e.alpha)
        kwargs = {"slack": args.tol} if args.tol is not None else {}
        return lab.check_pointwise_bound(chain, **kwargs)
    if what in ("weak1", "j2"):
        if not args.fn or len(args.fn) != 1:
            raise UsageError(f"check {what} --tree needs one --fn file (the atomic function)")
        fn = _load_fn(tree, args.fn[0])
        nz = np.flatnonzero(fn.values)
        if nz.size != 1:
            raise UsageError("the witness function must be atomic (one nonzero value)")
        i = int(nz[0])
        w = tree.atom(int(tree._elev[fn.level][i]), int(tree._epos[fn.level][i]))
        kwargs = {"slack": args.tol} if args.tol is not None else {}
        check = lab.check_weak_type_atomic if what == "weak1" else lab.check_j2_bounds
        return check(tree, w, e.alpha, **kwargs)
    # transform: defects of the previsible truncations on the given terminal
    if not args.fn or len(args.fn) != 1:
        raise UsageError("check transform --tree needs one --fn file (the terminal)")
    f = _load_fn(tree, args.fn[0])
    m = MartingaleSequence.from_terminal(f)
    tol = args.tol if args.tol is not None else 1e-12
    defects = {
        kind: truncated_transform(m, e.alpha, kind).martingale_defect()
        for kind in (OperatorKind.PREDICTABLE, OperatorKind.INFIMUM, OperatorKind.ATOMIC)
    }
    previsible = max(defects[OperatorKind.PREDICTABLE], defects[OperatorKind.INFIMUM])
    passed = previsible <= tol
    rows = tuple(
        TrialRow(i, args.seed, defects[k], tol, defects[k] <= tol or k is OperatorKind.ATOMIC)
        for i, k in enumerate(defects)
    )
    return ExperimentReport(
        "transform", args.seed, {"alpha": e.alpha}, len(rows), previsible, passed, tol,
        {"tree": json.loads(serialize_tree(tree)), "functions": [f.to_payload()],
         "params": {"alpha": e.alpha}},
        rows,
    )


def _cmd_check(args) -> int:
    e = _resolve_exponents(args)
    if args.tree:
        report = _single_instance_check(args, e)
    else:
        what = args.what
        if what == "duality":
            kwargs = {"rel_tol": args.tol, "abs_tol": args.tol} if args.tol is not None else {}
            report = lab.run_duality(e.alpha, trials=args.trials, seed=args.seed,
                                     max_depth=args.depth, **kwargs)
        elif what == "pointwise":
            kwargs = {"slack": args.tol} if args.tol is not None else {}
            report = lab.run_pointwise(alphas=(e.alpha,), trials=args.trials,
                                       seed=args.seed, **kwargs)
        elif what == "weak1":
            kwargs = {"slack": args.tol} if args.tol is not None else {}
            report = lab.run_weak_type(alphas=(e.alpha,), trials=args.trials,
                                       seed=args.seed, max_depth=args.depth, **kwargs)
        elif what == "j2":
            kwargs = {"slack": args.tol} if args.tol is not None else {}
            report = lab.run_j2(alphas=(e.alpha,), trials=args.trials, seed=args.seed,
                                max_depth=args.depth, **kwargs)
        else:
            kwargs = {"tol": args.tol} if args.tol is not None else {}
            report = lab.run_transform_check(e.alpha, trials=args.trials, seed=args.seed,
                                             max_depth=min(args.depth, 8), **kwargs)
    _write(emit_report(report, args.format), args.out)
    print(f"{report.experiment}: worst={report.worst_case:.6g} "
          f"{'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 2


def _cmd_probe(args) -> int:
    e = _resolve_exponents(args)
    count = max(args.skews, 2)
    if args.what == "sharpness":
        skews, ratios = lab.run_sharpness_sweep(e, 1, count)
        slope = None
        summary = (f"sharpness: ratio(2^-{count})={ratios[-1]:.6f} "
                   f"max/min={ratios.max() / ratios.min():.4f}")
    else:
        skews, ratios = lab.run_unbounded_sweep(e, 2, count + 1)
        slope = lab.fit_loglog_slope(skews, ratios)
        summary = f"unbounded: fitted slope={slope:.5f} (target {-e.alpha})"
    if args.format == "json":
        doc = {"experiment": f"probe_{args.what}", "alpha": e.alpha, "p": e.p, "q": e.q,
               "skews": list(map(float, skews)), "ratios": list(map(float, ratios))}
        if slope is not None:
            doc["slope"] = slope
        _write(json.dumps(doc, sort_keys=True), args.out)
    else:
        lines = ["skew,ratio"] + [f"{repr(float(s))},{repr(float(r))}" for s, r in zip(skews, ratios)]
        _write("\n".join(lines) + "\n", args.out)
    print(summary)
    return 0


def _cmd_search(args) -> int:
    e = _resolve_exponents(args)
    report = lab.extremal_search(
        e,
        OperatorKind(args.op),
        budget=args.budget,
        seed=args.seed,
        depth=args.depth,
        max_children=args.max_children,
        min_ratio=args.min_ratio,
    )
    _write(emit_report(report, args.format), args.out)
    print(f"search[{args.op}]: best ratio {report.worst_case:.6f} "
          f"({report.trials} evaluations)")
    return 0


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        handler = {
            "gen": _cmd_gen,
            "apply": _cmd_apply,
            "check": _cmd_check,
            "probe": _cmd_probe,
            "search": _cmd_search,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except (MhlsError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
