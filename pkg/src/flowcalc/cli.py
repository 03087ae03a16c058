"""Command-line front end.

    flowcalc run PROGRAM DB [--lattice L] [--fuel N] [--trace[=full]] [--json]
    flowcalc erase PROGRAM DB --observer L [--lattice L] [--json]
    flowcalc check [--suite S] [--seed N] [--trials N] [--lattice L] [--mutant M] [--json]

Exit codes: 0 success, 1 parse or validation error (or a failed check),
2 fuel exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import database as dbm
from .erasure import erase_program
from .evaluator import MUTANTS, FuelExhausted, eval_star
from .generate import GenConfig
from .lattice import LabelSyntaxError, lattice_from_selector
from .metatheory import SUITES, run_suite
from .syntax import Pg
from .text import db_digest, db_to_json, parse_db, parse_program, render_db, render_program

EXIT_OK, EXIT_ERROR, EXIT_FUEL = 0, 1, 2
LATTICES = ("twopoint", "powerset:A,B,C", "confinteg")


class UsageError(Exception):
    pass


def _scheme(selector: str):
    try:
        return lattice_from_selector(selector)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load(prog_path: str, db_path: str, scheme):
    try:
        db_src = Path(db_path).read_text()
        prog_src = Path(prog_path).read_text()
    except OSError as e:
        raise UsageError(f"{e.filename}: {e.strerror}") from None
    db = parse_db(db_src, scheme.parse, source=db_path)
    report = dbm.validate_db(db)
    if not report.ok:
        raise UsageError(f"{db_path}: invalid database: {report}")
    p = parse_program(prog_src, db, scheme.bottom(), scheme.parse, source=prog_path)
    return p


def _trace_entry(i: int, q, full: bool) -> dict:
    entry = {"step": i,
             "label": q.label.render() if isinstance(q, Pg) else None,
             "term": render_program(q)}
    if full:
        entry["db"] = db_to_json(q.db)
    else:
        entry["db_digest"] = db_digest(q.db)
    return entry


def cmd_run(args, out) -> int:
    scheme = _scheme(args.lattice)
    p = _load(args.program, args.db, scheme)
    trace: list | None = [] if args.trace else None
    outcome = eval_star(p, args.fuel, MUTANTS[args.mutant], trace)
    status = "fuel-exhausted" if isinstance(outcome, FuelExhausted) else "terminated"
    final = outcome.program
    full = args.trace == "full"
    entries = [_trace_entry(i, q, full) for i, q in enumerate(trace)] if trace is not None else None
    if args.json:
        doc = {"status": status, "steps": outcome.steps, "program": render_program(final),
               "db": db_to_json(final.db)}
        if entries is not None:
            doc["trace"] = entries
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        if entries is not None:
            for e in entries:
                tail = json.dumps(e["db"], sort_keys=True) if full else e["db_digest"]
                out.write(f"[{e['step']}] {e['term']}  db={tail}\n")
        out.write(f"{status} after {outcome.steps} steps\n")
        out.write(render_program(final) + "\n")
        out.write(render_db(final.db) + "\n")
    return EXIT_FUEL if status == "fuel-exhausted" else EXIT_OK


def cmd_erase(args, out) -> int:
    scheme = _scheme(args.lattice)
    try:
        observer = scheme.parse(args.observer)
    except LabelSyntaxError as e:
        raise UsageError(f"--observer: {e}") from None
    p = _load(args.program, args.db, scheme)
    e = erase_program(observer, p, hide_fresh=not args.keep_fresh)
    prog_text, db_text = render_program(e) + "\n", render_db(e.db) + "\n"
    if args.output_program:
        Path(args.output_program).write_text(prog_text)
    if args.output_db:
        Path(args.output_db).write_text(db_text)
    if args.json:
        out.write(json.dumps({"program": render_program(e), "db": db_to_json(e.db)}, indent=2) + "\n")
    elif not (args.output_program or args.output_db):
        out.write(prog_text + db_text)
    return EXIT_OK


def cmd_check(args, out) -> int:
    suites = list(SUITES) if args.suite == "all" else [args.suite.replace("-", "_")]
    for s in suites:
        if s not in SUITES:
            raise UsageError(f"unknown suite {args.suite!r}")
    lattices = LATTICES if args.lattice == "all" else (args.lattice,)
    for lat in lattices:
        _scheme(lat)
    reports = []
    for lat in lattices:
        if args.observer is not None:
            try:
                _scheme(lat).parse(args.observer)
            except LabelSyntaxError as e:
                raise UsageError(f"--observer: {e}") from None
        cfg = GenConfig(seed=args.seed, max_term_depth=args.depth, fuel=args.fuel, lattice=lat,
                        observer=args.observer, hide_fresh=not args.keep_fresh)
        for s in suites:
            reports.append(run_suite(cfg, s, MUTANTS[args.mutant], args.trials,
                                     workers=args.workers, max_failures=args.max_failures))
    if args.json:
        out.write(json.dumps({"ok": all(r.ok for r in reports),
                              "reports": [r.to_json() for r in reports]}, indent=2, sort_keys=True) + "\n")
    else:
        for r in reports:
            out.write(r.to_text() + "\n")
        total_fail = sum(r.failed for r in reports)
        out.write(f"{'OK' if total_fail == 0 else 'FAILED'}: {len(reports)} report(s), "
                  f"{total_fail} failure(s)\n")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flowcalc", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, lattice_default="twopoint"):
        p.add_argument("--lattice", default=lattice_default,
                       help="twopoint | powerset:A,B,C | confinteg | confinteg:A,B")

    r = sub.add_parser("run", help="evaluate a program against a database")
    r.add_argument("program")
    r.add_argument("db")
    common(r)
    r.add_argument("--fuel", type=int, default=1_000)
    r.add_argument("--trace", nargs="?", const="digest", choices=("digest", "full"),
                   help="print every configuration (db as a digest, or in full)")
    r.add_argument("--json", action="store_true")
    r.add_argument("--mutant", default="none", choices=sorted(MUTANTS))
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("erase", help="print what an observer can see")
    e.add_argument("program")
    e.add_argument("db")
    e.add_argument("--observer", required=True)
    common(e)
    e.add_argument("--keep-fresh", action="store_true",
                   help="do not reset the fresh counters of hidden tables")
    e.add_argument("--output-program", metavar="FILE")
    e.add_argument("--output-db", metavar="FILE")
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_erase)

    c = sub.add_parser("check", help="run property suites")
    c.add_argument("--suite", default="all",
                   help="laws | simulation | simulation-star | noninterference | idempotence | "
                        "monotonicity | safety | all")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--trials", type=int, default=1_000)
    c.add_argument("--fuel", type=int, default=1_000)
    c.add_argument("--depth", type=int, default=5)
    common(c)
    c.add_argument("--observer", default=None, help="fixed observer label (default: random per trial)")
    c.add_argument("--mutant", default="none", choices=sorted(MUTANTS))
    c.add_argument("--keep-fresh", action="store_true",
                   help="erasure keeps hidden tables' fresh counters")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--max-failures", type=int, default=3)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_check)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "fuel", 1) < 0:
            raise UsageError("--fuel must be non-negative")
        if getattr(args, "trials", 1) < 0:
            raise UsageError("--trials must be non-negative")
        return args.func(args, out)
    except (UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
