"""Command-line driver.

Exit codes: 0 for success (well-formed, implementable, no counterexample),
1 for a violation or counterexample, 2 for usage and parse errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import checker, generators, semantics, synthesis
from .protocol import formats
from .protocol.gclts import Gclts, UnknownSymbol, to_dot, validate_gclts
from .protocol.globaltype import GlobalTypeError
from .protocol.symbolic import concretize_symbolic

log = logging.getLogger("implcheck")

LARGE = 10_000


class UsageError(Exception):
    pass


def _load(path: str, out) -> Gclts:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{path}: no such file")
    if p.suffix == ".sgclts":
        conc = concretize_symbolic(formats.parse_sgclts(p.read_text(encoding="utf-8"), str(p)))
        print(f"concrete states: {conc.state_count}", file=out)
        if conc.state_count > LARGE:
            print(f"warning: concretization has more than {LARGE} states", file=sys.stderr)
        return conc.protocol
    return formats.load_protocol(p)


def cmd_validate(args, out) -> int:
    g = _load(args.file, out)
    report = validate_gclts(g)
    print(report.render(), file=out)
    return 0 if report.ok else 1


def cmd_check(args, out) -> int:
    g = _load(args.file, out)
    try:
        verdict = checker.check_implementability(g, args.mode, witnesses=args.witness)
    except checker.IllFormed as exc:
        print(exc.report.render(), file=out)
        return 1
    print(verdict.render(witness=args.witness), file=out)
    return 0 if verdict.implementable else 1


def cmd_synthesize(args, out) -> int:
    g = _load(args.file, out)
    report = validate_gclts(g)
    if not report.ok:
        print(report.render(), file=out)
        return 1
    clts = synthesis.synthesize_canonical(g)
    for path in synthesis.write_clts(clts, Path(args.output)):
        print(path, file=out)
    return 0


def cmd_simulate(args, out) -> int:
    g = _load(args.file, out)
    report = validate_gclts(g)
    if not report.ok:
        print(report.render(), file=out)
        return 1
    result = semantics.random_run(synthesis.synthesize_canonical(g), args.seed, args.steps)
    for e in result.trace:
        print(e, file=out)
    print(f"# {result.outcome} after {len(result.trace)} events", file=out)
    return 1 if result.outcome == "deadlock" else 0


def cmd_oracle(args, out) -> int:
    g = _load(args.file, out)
    report = validate_gclts(g)
    if not report.ok:
        print(report.render(), file=out)
        return 1
    result = semantics.bounded_refute(g, args.bound)
    if result.refuted:
        print(result.counterexample.render(), file=out)
        return 1
    state = "inconclusive: the search reached the bound" if result.truncated else "state space exhausted"
    print(f"no counterexample up to {args.bound} events ({state})", file=out)
    return 0


def _emit(text: str, args, out) -> None:
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(args.output, file=out)
    else:
        out.write(text)


def cmd_gen(args, out) -> int:
    if args.family == "sat":
        if args.dimacs:
            f = generators.parse_dimacs(Path(args.dimacs).read_text(encoding="utf-8"))
        else:
            f = generators.random_cnf(args.seed, args.vars, args.clauses)
        g, q = generators.from_cnf(f)
        text = (f"# availability query: avail({q.p}, {q.q}, {q.m}, {q.state}, {{{','.join(sorted(q.blocked))}}})\n"
                + "".join(f"# {line}\n" for line in f.to_dimacs().splitlines())
                + formats.dump_gclts(g))
    elif args.family == "petri":
        if args.net:
            net = generators.parse_petri(Path(args.net).read_text(encoding="utf-8"))
            target = [x for x in (args.target or "").split(",") if x]
        else:
            net, target = generators.random_net(args.seed)
        sp = generators.from_petri(net, target)
        header = "".join(f"# {line}\n" for line in net.to_text().splitlines())
        header += f"# target: {','.join(sorted(target)) or '(empty)'}\n"
        text = header + formats.dump_sgclts(sp)
    else:
        spec = generators.RandomSpec(args.states, args.participants, args.values, args.branching,
                                     args.loop_prob, args.seed)
        text = formats.dump_gclts(generators.random_protocol(spec))
    _emit(text, args, out)
    return 0


def cmd_export_dot(args, out) -> int:
    out.write(to_dot(_load(args.file, out)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="implcheck", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the well-formedness conditions")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="decide implementability")
    p.add_argument("file")
    p.add_argument("--mode", choices=checker.MODES, default=checker.DEFAULT_MODE,
                   help="receive coherence variant (default: %(default)s)")
    p.add_argument("--witness", action="store_true", help="print a counterexample trace per violation")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synthesize", help="write the canonical implementation")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="random run of the canonical implementation")
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=50)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="bounded search for a counterexample")
    p.add_argument("file")
    p.add_argument("--bound", type=int, default=10)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="generate a protocol")
    p.add_argument("family", choices=("sat", "petri", "random"))
    p.add_argument("-o", "--output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dimacs", help="sat: DIMACS file instead of a random formula")
    p.add_argument("--vars", type=int, default=8, help="sat: maximum variables")
    p.add_argument("--clauses", type=int, default=12, help="sat: maximum clauses")
    p.add_argument("--net", help="petri: net file instead of a random net")
    p.add_argument("--target", help="petri: comma-separated target marking")
    p.add_argument("--states", type=int, default=5)
    p.add_argument("--participants", type=int, default=3)
    p.add_argument("--values", type=int, default=3)
    p.add_argument("--branching", type=int, default=2)
    p.add_argument("--loop-prob", type=float, default=0.3)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("export-dot", help="print the protocol as a DOT graph")
    p.add_argument("file")
    p.set_defaults(func=cmd_export_dot)
    return parser


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except (UsageError, formats.ParseError, GlobalTypeError, UnknownSymbol) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
