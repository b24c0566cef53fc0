"""Command-line entry point: ``weakflip <verb> [options]``.

Exit status: 0 on success, 1 on usage, parse or validation errors, 2 when
``verify`` finds a fair protocol whose cheat product falls below 1/2.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import cheating, montecarlo, oracle
from .errors import WeakFlipError
from .protocol import load_protocol, serialize_profile, serialize_protocol

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2
DEFAULT_SEED = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _emit(args, payload: dict, lines):
    if args.json:
        print(_dump(payload))
    else:
        print("\n".join(lines))


def _fmt(x) -> str:
    return f"{x:.6f}" if isinstance(x, float) else str(x)


def _report_lines(rep: cheating.CheatReport):
    rows = [
        ("p0", rep.p0),
        ("P_A", rep.paper_pa),
        ("P_B", rep.paper_pb),
        ("product", rep.product),
        ("holder floor", rep.holder_floor),
        ("preparer -> 0", rep.op_preparer[0]),
        ("preparer -> 1", rep.op_preparer[1]),
        ("receiver -> 0", rep.op_receiver[0]),
        ("receiver -> 1", rep.op_receiver[1]),
        ("bound", rep.fair_bound_holds),
    ]
    return [f"{k:<16}{_fmt(v):>14}" for k, v in rows]


def cmd_analyze(args) -> int:
    rep = cheating.analyze(load_protocol(args.protocol))
    _emit(args, rep.to_dict(), _report_lines(rep))
    return EXIT_OK


def cmd_align(args) -> int:
    p = load_protocol(args.protocol)
    q = cheating.align(p)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(serialize_protocol(q))
    before = {"paper_pa": cheating.paper_pa(p), "paper_pb": cheating.paper_pb(p), "p0": p.p0}
    after = {"paper_pa": cheating.paper_pa(q), "paper_pb": cheating.paper_pb(q), "p0": q.p0}
    prof = cheating.diagonal_profile(q)
    payload = {
        "schema": "weakflip.align/1",
        "before": before,
        "after": after,
        "a": [float(x) for x in prof.a],
        "b": [float(x) for x in prof.b],
    }
    lines = [f"{'':<10}{'p0':>12}{'P_A':>12}{'P_B':>12}"]
    for name, d in (("before", before), ("after", after)):
        lines.append(f"{name:<10}{d['p0']:>12.6f}{d['paper_pa']:>12.6f}{d['paper_pb']:>12.6f}")
    lines.append("a = " + ", ".join(f"{x:.6f}" for x in prof.a))
    lines.append("b = " + ", ".join(f"{x:.6f}" for x in prof.b))
    if not args.output:
        lines.append("")
        lines.append(serialize_protocol(q).rstrip())
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_frontier(args) -> int:
    prof = cheating.frontier_profile(args.pa, args.family)
    text = serialize_profile(prof.a, prof.b)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    p = prof.to_protocol()
    if args.family == "paper":
        pair = (cheating.paper_pa(p), cheating.paper_pb(p))
    else:
        pair = (cheating.preparer_max(p, 0), cheating.receiver_max(p, 1))
    payload = {
        "schema": "weakflip.frontier/1",
        "family": args.family,
        "target": args.pa,
        "a": [float(x) for x in prof.a],
        "b": [float(x) for x in prof.b],
        "p0": p.p0,
        "P_A": pair[0],
        "P_B": pair[1],
        "product": pair[0] * pair[1],
    }
    lines = [
        f"family  {args.family}",
        "a       " + ", ".join(f"{x:.10f}" for x in prof.a),
        "b       " + ", ".join(f"{x:.10f}" for x in prof.b),
        f"P_A     {pair[0]:.10f}",
        f"P_B     {pair[1]:.10f}",
        f"product {pair[0] * pair[1]:.10f}",
    ]
    if not args.output:
        lines.append(text.rstrip())
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_verify(args) -> int:
    payload = {"schema": "weakflip.verify/1", "seed": args.seed, "restarts": args.restarts}
    lines = [f"seed {args.seed}"]
    status = EXIT_OK
    if args.protocol:
        p = load_protocol(args.protocol)
        rep = cheating.analyze(p)
        checks = []
        for w in (0, 1):
            po = oracle.preparer_oracle(p, w, args.restarts, args.seed)
            checks.append(("preparer", w, po.value, rep.op_preparer[w], po.converged))
            if p.dim_b <= oracle.MAX_RECEIVER_DIM_B:
                ro = oracle.receiver_oracle(p, w, args.receiver_restarts, args.seed)
                checks.append(("receiver", w, ro.value, rep.op_receiver[w], ro.converged))
        payload["report"] = rep.to_dict()
        payload["oracle"] = [
            {"role": r, "target": w, "oracle": v, "closed_form": c, "converged": cv}
            for r, w, v, c, cv in checks
        ]
        lines += _report_lines(rep)
        lines.append(f"{'role':<10}{'w':>3}{'oracle':>12}{'closed':>12}{'conv':>6}")
        for r, w, v, c, cv in checks:
            lines.append(f"{r:<10}{w:>3}{v:>12.6f}{c:>12.6f}{'yes' if cv else 'no':>6}")
        if rep.fair_bound_holds == "violated":
            lines.append("BOUND VIOLATED: fair protocol with P_A * P_B < 1/2")
            status = EXIT_VIOLATION
    audit = oracle.audit_labels(args.samples, args.seed)
    payload["audit"] = audit
    lines.append(f"label audit over {audit['samples']} fair two-qubit protocols")
    for row in audit["pairings"]:
        mark = "match" if row["match"] else ""
        lines.append(f"  {row['formula']:<9}~ {row['quantity']:<11}{row['max_deviation']:>12.3e}  {mark}")
    _emit(args, payload, lines)
    return status


def _strategy(role, kind, target):
    if kind == "honest":
        return montecarlo.Strategy.honest(role)
    return montecarlo.Strategy.optimal(role, target)


def cmd_simulate(args) -> int:
    p = load_protocol(args.protocol)
    # default target is the bit that the winner table credits to the cheater
    alice_t = 1 if args.target is None else args.target
    bob_t = 0 if args.target is None else args.target
    stats = montecarlo.run_batch(
        p,
        _strategy("preparer", args.alice, alice_t),
        _strategy("receiver", args.bob, bob_t),
        args.rounds,
        args.seed,
    )
    lines = [f"seed {args.seed}", stats.table()]
    _emit(args, stats.to_dict(), lines)
    return EXIT_OK


def cmd_search(args) -> int:
    res = oracle.search_fair_minimum(args.dim, args.restarts, args.seed)
    payload = res.to_dict()
    payload["seed"] = args.seed
    lines = [
        f"seed     {args.seed}",
        f"best max {res.best_max:.10f}",
        "a        " + ", ".join(f"{x:.6f}" for x in res.best_profile.a),
        "b        " + ", ".join(f"{x:.6f}" for x in res.best_profile.b),
    ]
    _emit(args, payload, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weakflip", description="Weak coin flipping protocol laboratory.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.set_defaults(func=func)
        return sp

    sp = add("analyze", cmd_analyze, "closed-form cheat report for a protocol file")
    sp.add_argument("protocol")

    sp = add("align", cmd_align, "rewrite psi over the eigenbasis of E0")
    sp.add_argument("protocol")
    sp.add_argument("-o", "--output")

    sp = add("frontier", cmd_frontier, "build a fair protocol with P_A * P_B = 1/2")
    sp.add_argument("--pa", type=float, required=True)
    sp.add_argument("--family", choices=cheating.FAMILIES, default="paper")
    sp.add_argument("-o", "--output")

    sp = add("verify", cmd_verify, "brute-force oracles and label audit")
    sp.add_argument("protocol", nargs="?")
    sp.add_argument("--restarts", type=int, default=64)
    sp.add_argument("--receiver-restarts", type=int, default=8)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--samples", type=int, default=100)

    sp = add("simulate", cmd_simulate, "Monte Carlo runs of the protocol")
    sp.add_argument("protocol")
    sp.add_argument("--rounds", type=int, default=100_000)
    sp.add_argument("--alice", choices=("honest", "cheat"), default="honest")
    sp.add_argument("--bob", choices=("honest", "cheat"), default="honest")
    sp.add_argument("--target", type=int, choices=(0, 1))
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = add("search", cmd_search, "search fair profiles for the smallest max(P_A, P_B)")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--restarts", type=int, default=100)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (WeakFlipError, OSError, ValueError) as exc:
        print(f"weakflip: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
