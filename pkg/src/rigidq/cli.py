"""Command-line front end.

Subcommands: gen (synthetic clouds), apply (operator application on files),
verify (orthogonality-quality CSV), bench (scaling measurements), dump-q
(explicit Q in hierarchical or dense text form).

Exit codes: 0 success, 2 argument or input-file error, 3 numerical guard
tripped (size guard, singular H, duplicate beads, too-small body).
"""

from __future__ import annotations

import argparse
import sys
import time
from contextlib import contextmanager

import numpy as np

from . import io as qio
from .clouds import KINDS, make_cloud
from .counting import count_flops
from .errors import (BodyTooSmallError, DuplicateBeadsError,
                     LengthMismatchError, ShapeMismatchError, SingularHError,
                     SizeGuardError, TooSmallError)
from .factor import factor_all, generate_explicit_q, materialize_dense
from .matfree import MultiBodyOperator, downward_apply, upward_apply
from .model import BeadModel, assemble_z
from .oracle import REPORT_COLUMNS, body_report, report_to_csv
from .tree import build_tree

_GUARD_ERRORS = (SizeGuardError, SingularHError, DuplicateBeadsError,
                 TooSmallError, BodyTooSmallError)
_INPUT_ERRORS = (LengthMismatchError, ShapeMismatchError, ValueError, OSError)


@contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fp:
            yield fp


def cmd_gen(args) -> int:
    pos = make_cloud(args.kind, args.n, args.seed)
    model = BeadModel(pos)
    with _open_out(args.out) as fp:
        fp.write(f"# kind={args.kind} n={args.n} seed={args.seed}\n")
        qio.save_beads(model, fp)
    return 0


_OPS = ("qv", "qtv", "qtilde_v", "qtilde_tv")


def cmd_apply(args) -> int:
    with open(args.beads) as fp:
        model = qio.load_beads(fp)
    with open(args.vector) as fp:
        vec, _ = qio.load_vector(fp)
    op = MultiBodyOperator(model)
    out = op.apply(args.op, vec)
    spectral_n = model.n_total if args.op == "qv" else None
    with _open_out(args.out) as fp:
        qio.save_vector(out, fp, spectral_n=spectral_n)
    return 0


def cmd_verify(args) -> int:
    with open(args.beads) as fp:
        model = qio.load_beads(fp)
    rows = []
    notes = []
    for j, body in enumerate(model):
        rows.append(body_report(body, seed=args.seed, dense_guard=args.dense_guard))
        if body.n >= 2:
            s = np.linalg.svd(assemble_z(body).entries, compute_uv=False)
            rank = int((s > max(6, 3 * body.n) * np.finfo(float).eps * s[0]).sum())
            if rank < 6:
                notes.append(f"# body {j}: rank(Z) = {rank}, "
                             f"complement dimension = {3 * body.n - rank}")
        else:
            notes.append(f"# body {j}: single bead, complement columns n/a")
    with _open_out(args.out) as fp:
        for note in notes:
            fp.write(note + "\n")
        fp.write(report_to_csv(rows))
    return 0


def _factor_float_count(factors) -> int:
    total = 0
    for i in range(len(factors)):
        f = factors[i]
        total += f.t22.size
        if f.omega is not None:
            total += f.omega.size
        for m in (f.r21, f.s21):
            if m is not None:
                total += m.size
    return total


def _tree_float_count(tree) -> int:
    return 9 * len(tree.nodes) + tree.positions.size


def run_bench(n_values, repeats: int, seed: int) -> list[dict]:
    """Per n: min wall time, flop count and live-float count for explicit
    generation, the upward pass and the downward pass.

    The upward timing includes the factor pass (it computes the mixers the
    downward pass reuses), matching how the three algorithms split work.
    """
    records = []
    for n in n_values:
        model = BeadModel(make_cloud("uniform", int(n), seed))
        tree = build_tree(model)
        v = np.random.default_rng([seed, n, 1]).normal(size=3 * int(n))

        def timed(fn, repeats=repeats):
            best = np.inf
            result = None
            for _ in range(repeats):
                t0 = time.perf_counter()
                result = fn()
                best = min(best, time.perf_counter() - t0)
            return best, result

        t_up, factors = timed(lambda: factor_all(tree))
        t_apply, spectral = timed(lambda: upward_apply(tree, factors, v))
        t_down, _ = timed(lambda: downward_apply(tree, factors, spectral))
        t_gen, hq = timed(lambda: generate_explicit_q(tree, factors))

        with count_flops() as c:
            f2 = factor_all(tree)
            upward_apply(tree, f2, v)
        up_flops = c.total
        with count_flops() as c:
            downward_apply(tree, factors, spectral)
        down_flops = c.total
        with count_flops() as c:
            generate_explicit_q(tree, factor_all(tree))
        gen_flops = c.total

        base = _tree_float_count(tree) + _factor_float_count(factors)
        pass_floats = base + 6 * len(tree.nodes) + 6 * int(n)
        records.append({
            "n": int(n),
            "qgen": {"wall_time_s": t_up + t_gen, "flops": gen_flops,
                     "peak_floats": base + hq.float_count()},
            "upward": {"wall_time_s": t_up + t_apply, "flops": up_flops,
                       "peak_floats": pass_floats},
            "downward": {"wall_time_s": t_down, "flops": down_flops,
                         "peak_floats": pass_floats},
        })
    return records


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


BENCH_ALGOS = ("qgen", "upward", "downward")


def bench_to_csv(records) -> str:
    lines = ["n,algorithm,wall_time_s,peak_floats,flops"]
    for rec in records:
        for algo in BENCH_ALGOS:
            r = rec[algo]
            lines.append(f"{rec['n']},{algo},{r['wall_time_s']:.6e},"
                         f"{r['peak_floats']},{r['flops']}")
    if len(records) >= 2:
        ns = [rec["n"] for rec in records]
        for algo in BENCH_ALGOS:
            st = loglog_slope(ns, [rec[algo]["wall_time_s"] for rec in records])
            sf = loglog_slope(ns, [rec[algo]["peak_floats"] for rec in records])
            so = loglog_slope(ns, [rec[algo]["flops"] for rec in records])
            lines.append(f"slope,{algo},{st:.4f},{sf:.4f},{so:.4f}")
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    n_values = [int(s) for s in args.n.split(",") if s]
    if not n_values or args.repeats < 1:
        raise ValueError("need at least one n and repeats >= 1")
    records = run_bench(n_values, args.repeats, args.seed)
    with _open_out(args.out) as fp:
        fp.write(bench_to_csv(records))
    return 0


def cmd_dump_q(args) -> int:
    with open(args.beads) as fp:
        model = qio.load_beads(fp)
    if model.m != 1:
        raise ValueError("dump-q expects a single-body bead file")
    tree = build_tree(model.bodies[0])
    hq = generate_explicit_q(tree)
    with _open_out(args.out) as fp:
        if args.format == "hier":
            hq.dump(fp)
        else:
            dense = materialize_dense(hq, order=args.order, guard=args.dense_guard)
            for row in dense:
                fp.write(" ".join(f"{x:.17g}" for x in row) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigidq",
        description="Hierarchical orthogonal bases for rigid-body bead models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic bead cloud")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("apply", help="apply an operator to a vector file")
    p.add_argument("beads")
    p.add_argument("op", choices=_OPS)
    p.add_argument("vector")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=1,
                   help="reserved; output is independent of threading")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("verify", help="orthogonality-quality report (CSV)")
    p.add_argument("beads")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dense-guard", type=int, default=6000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="scaling benchmark (CSV)")
    p.add_argument("--n", default="500,1000,2000,4000,8000,16000")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="reserved; output is independent of threading")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dump-q", help="write the explicit orthogonal matrix")
    p.add_argument("beads")
    p.add_argument("--format", choices=("hier", "dense"), default="hier")
    p.add_argument("--order", choices=("tree", "original"), default="tree")
    p.add_argument("--dense-guard", type=int, default=6000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dump_q)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _GUARD_ERRORS as exc:
        print(f"rigidq: {exc}", file=sys.stderr)
        return 3
    except _INPUT_ERRORS as exc:
        print(f"rigidq: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
