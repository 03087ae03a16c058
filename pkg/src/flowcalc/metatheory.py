"""Executable checks of the metatheory: lattice laws, erasure idempotence,
safety preservation, label monotonicity, simulation and noninterference.

Every check returns a verdict. Runs that exhaust fuel are
:class:`Inconclusive`, never a pass. Suites draw each trial from its own
``random.Random(trial_seed(seed, i))``, so any failure can be replayed from
the suite seed and the trial index alone.
"""

from __future__ import annotations

import dataclasses
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import database as dbm
from .erasure import erase_db, erase_program, erase_term
from .evaluator import DEFAULT_RULES, FuelExhausted, Rules, eval_star, step_outcome
from .generate import GenConfig, Generator, gen_low_equiv_pair, gen_program, pick_observer
from .lattice import Label, check_laws
from .syntax import (HOLE, Pg, PgHole, Program, TInt, Term, TLabel, TTrue, TFalse,
                     UNIT, children, is_db_value, is_safe, map_children, subst)
from .text import db_to_json, render_program, render_term

SUITES = ("laws", "simulation", "simulation_star", "noninterference",
          "idempotence", "monotonicity", "safety")


# -- verdicts ----------------------------------------------------------------


@dataclass(frozen=True)
class Pass:
    trials: int = 1


@dataclass(frozen=True)
class Fail:
    observer: Label
    programs: tuple
    lhs: Program
    rhs: Program
    divergence: str
    note: str = ""


@dataclass(frozen=True)
class Inconclusive:
    fuel_exhausted: int = 1


Verdict = Pass | Fail | Inconclusive


def first_divergence(a, b, path: str = "") -> Optional[str]:
    """Dotted path to the first structural difference, or None."""
    if a == b:
        return None
    if type(a) is not type(b):
        return path or "."
    if isinstance(a, tuple):
        if len(a) != len(b):
            return f"{path}.len"
        for i, (x, y) in enumerate(zip(a, b)):
            d = first_divergence(x, y, f"{path}[{i}]")
            if d is not None:
                return d
        return path
    if dataclasses.is_dataclass(a):
        for f in dataclasses.fields(a):
            d = first_divergence(getattr(a, f.name), getattr(b, f.name), f"{path}.{f.name}")
            if d is not None:
                return d
    return path or "."


def _compare(l: Label, programs: tuple, lhs: Program, rhs: Program, note: str) -> Verdict:
    if lhs == rhs:
        return Pass()
    return Fail(l, programs, lhs, rhs, first_divergence(lhs, rhs), note)


# -- theorem checks ------------------------------------------------------------


def check_simulation(l: Label, p: Program, fuel: int = 1_000,
                     rules: Rules = DEFAULT_RULES, *, hide_fresh: bool = True) -> Verdict:
    """One step commutes with erasure."""
    e = _eraser(l, hide_fresh)
    real = step_outcome(p, fuel, rules)
    erased = step_outcome(e(p), fuel, rules)
    if isinstance(real, FuelExhausted) or isinstance(erased, FuelExhausted):
        return Inconclusive()
    return _compare(l, (p,), e(erased.program), e(real.program), "simulation")


def check_simulation_star(l: Label, p: Program, fuel: int = 1_000,
                          rules: Rules = DEFAULT_RULES, *, hide_fresh: bool = True) -> Verdict:
    e = _eraser(l, hide_fresh)
    real = eval_star(p, fuel, rules)
    erased = eval_star(e(p), fuel, rules)
    if isinstance(real, FuelExhausted) or isinstance(erased, FuelExhausted):
        return Inconclusive()
    return _compare(l, (p,), e(erased.program), e(real.program), "simulation_star")


def _eraser(l: Label, hide_fresh: bool):
    return lambda p: erase_program(l, p, hide_fresh=hide_fresh)


def _low_equiv_pre(l, p1, p2, hide_fresh):
    if erase_program(l, p1, hide_fresh=hide_fresh) != erase_program(l, p2, hide_fresh=hide_fresh):
        raise ValueError("noninterference precondition: programs are not low-equivalent")
    if not (is_safe(p1) and is_safe(p2)):
        raise ValueError("noninterference precondition: programs are not safe")


def check_noninterference(l: Label, p1: Program, p2: Program, fuel: int = 1_000,
                          rules: Rules = DEFAULT_RULES, *, hide_fresh: bool = True) -> Verdict:
    _low_equiv_pre(l, p1, p2, hide_fresh)
    e = _eraser(l, hide_fresh)
    o1, o2 = step_outcome(p1, fuel, rules), step_outcome(p2, fuel, rules)
    if isinstance(o1, FuelExhausted) or isinstance(o2, FuelExhausted):
        return Inconclusive()
    return _compare(l, (p1, p2), e(o1.program), e(o2.program), "noninterference")


def check_noninterference_star(l: Label, p1: Program, p2: Program, fuel: int = 1_000,
                               rules: Rules = DEFAULT_RULES, *, hide_fresh: bool = True) -> Verdict:
    _low_equiv_pre(l, p1, p2, hide_fresh)
    e = _eraser(l, hide_fresh)
    o1, o2 = eval_star(p1, fuel, rules), eval_star(p2, fuel, rules)
    if isinstance(o1, FuelExhausted) or isinstance(o2, FuelExhausted):
        return Inconclusive()
    return _compare(l, (p1, p2), e(o1.program), e(o2.program), "noninterference_star")


def check_idempotence(l: Label, p: Program) -> Verdict:
    once = erase_program(l, p)
    twice = erase_program(l, once)
    if once != twice:
        return Fail(l, (p,), twice, once, first_divergence(twice, once), "idempotence")
    return Pass()


def check_monotonicity(p: Program, fuel: int = 1_000, rules: Rules = DEFAULT_RULES) -> Verdict:
    trace: list = []
    out = eval_star(p, fuel, rules, trace)
    if isinstance(out, FuelExhausted):
        return Inconclusive()
    labels = [q.label for q in trace if isinstance(q, Pg)]
    for i, (a, b) in enumerate(zip(labels, labels[1:])):
        if not a.can_flow_to(b):
            return Fail(a, (p,), trace[i], trace[i + 1], ".label", "monotonicity")
    return Pass()


def check_safety(p: Program, fuel: int = 1_000, rules: Rules = DEFAULT_RULES) -> Verdict:
    """Safety is preserved by every step, and the database stays valid."""
    trace: list = []
    out = eval_star(p, fuel, rules, trace)
    for i, q in enumerate(trace):
        if not is_safe(q) or not dbm.validate_db(q.db).ok:
            prev = trace[i - 1] if i else q
            return Fail(prev.label if isinstance(prev, Pg) else None, (p,), prev, q, ".term", "safety")
    if isinstance(out, FuelExhausted):
        return Inconclusive()
    return Pass()


def check_db_value_erasure(l: Label, v: Term) -> Verdict:
    e = erase_term(l, v)
    if is_db_value(v) and not is_db_value(e):
        return Fail(l, (), e, v, ".", "db-value preservation")
    return Pass()


def check_subst_homomorphism(l: Label, x: int, tx: Term, t: Term) -> Verdict:
    lhs = erase_term(l, subst(x, tx, t))
    rhs = subst(x, erase_term(l, tx), erase_term(l, t))
    if lhs != rhs:
        return Fail(l, (), lhs, rhs, first_divergence(lhs, rhs), "substitution homomorphism")
    return Pass()


# -- shrinking -------------------------------------------------------------------


def _term_paths(t: Term, prefix=()):
    yield prefix, t
    for i, c in enumerate(children(t)):
        yield from _term_paths(c, prefix + (i,))


def _at(t: Term, path):
    for i in path:
        t = children(t)[i]
    return t


def _replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    i, rest = path[0], path[1:]
    k = [0]

    def fn(c):
        j = k[0]
        k[0] += 1
        return _replace_at(c, rest, new) if j == i else c

    return map_children(t, fn)


def _simpler(t: Term):
    """Smaller replacements for ``t``: its descendants (nearest first), then
    zeroed payloads."""
    level = children(t)
    for _ in range(3):
        yield from level
        level = [g for c in level for g in children(c)]
    if isinstance(t, TInt) and t.value != 0:
        yield TInt(0)
    if isinstance(t, (TTrue, TFalse, TLabel, TInt)):
        yield UNIT
    if t != HOLE and not children(t):
        yield HOLE


def _db_edits(db: dbm.Database):
    for i, (name, _) in enumerate(db.tables):
        yield dbm.Database(db.tables[:i] + db.tables[i + 1:])
    for i, (name, t) in enumerate(db.tables):
        for j in range(len(t.rows)):
            yield db.replace_table(name, dbm.Table(t.policy, t.rows[:j] + t.rows[j + 1:]))


def _program_edits(p: Program):
    if isinstance(p, PgHole):
        return
    for path, sub in list(_term_paths(p.term)):
        for new in _simpler(sub):
            yield Pg(p.label, p.db, _replace_at(p.term, path, new))
    for db in _db_edits(p.db):
        yield Pg(p.label, db, p.term)


def _size(programs) -> int:
    from .syntax import term_size
    total = 0
    for p in programs:
        total += sum(len(t.rows) + 1 for _, t in p.db.tables)
        if isinstance(p, Pg):
            total += term_size(p.term)
    return total


def _pair_edits(p1: Program, p2: Program):
    """Edits applied at the same place in both programs, then one-sided ones."""
    if isinstance(p1, Pg) and isinstance(p2, Pg):
        paths2 = {path for path, _ in _term_paths(p2.term)}
        for path, sub in list(_term_paths(p1.term)):
            if path not in paths2:
                continue
            sub2 = _at(p2.term, path)
            for k, new in enumerate(_simpler(sub)):
                if k < len(children(sub)) and len(children(sub2)) == len(children(sub)):
                    new2 = children(sub2)[k]
                else:
                    new2 = new
                yield (Pg(p1.label, p1.db, _replace_at(p1.term, path, new)),
                       Pg(p2.label, p2.db, _replace_at(p2.term, path, new2)))
    if len(p1.db.tables) == len(p2.db.tables):
        for i in range(len(p1.db.tables)):
            d1 = dbm.Database(p1.db.tables[:i] + p1.db.tables[i + 1:])
            d2 = dbm.Database(p2.db.tables[:i] + p2.db.tables[i + 1:])
            yield dataclasses.replace(p1, db=d1), dataclasses.replace(p2, db=d2)
    for e in _program_edits(p1):
        yield e, p2
    for e in _program_edits(p2):
        yield p1, e


def shrink(programs: tuple, still_fails: Callable[[tuple], bool], max_rounds: int = 200) -> tuple:
    """Greedy minimisation: keep the first smaller candidate that still
    fails, until no candidate does."""
    current = programs
    for _ in range(max_rounds):
        if len(current) == 1:
            cands = ((e,) for e in _program_edits(current[0]))
        else:
            cands = _pair_edits(*current)
        size = _size(current)
        for cand in cands:
            if _size(cand) >= size:
                continue
            if all(is_safe(p) and dbm.validate_db(p.db).ok for p in cand) and still_fails(cand):
                current = cand
                break
        else:
            return current
    return current


# -- suites --------------------------------------------------------------------


def trial_seed(seed: int, i: int) -> int:
    return (seed << 32) | i


@dataclass
class FailureRecord:
    trial: int
    trial_seed: int
    observer: str
    check: str
    divergence: str
    programs: list
    databases: list
    lhs: str
    rhs: str

    def to_json(self):
        return dataclasses.asdict(self)


@dataclass
class SuiteReport:
    suite: str
    lattice: str
    seed: int
    trials: int
    fuel: int
    rules: str
    passed: int = 0
    failed: int = 0
    inconclusive: int = 0
    failures: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    @property
    def inconclusive_rate(self) -> float:
        return self.inconclusive / self.trials if self.trials else 0.0

    def merge(self, other: "SuiteReport") -> "SuiteReport":
        out = dataclasses.replace(self, failures=self.failures + other.failures,
                                  details=dict(self.details))
        out.trials += other.trials
        out.passed += other.passed
        out.failed += other.failed
        out.inconclusive += other.inconclusive
        return out

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["failures"] = [f.to_json() for f in self.failures]
        return d

    def to_text(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        lines = [f"{status} {self.suite} lattice={self.lattice} rules={self.rules} seed={self.seed} "
                 f"trials={self.trials} fuel={self.fuel} passed={self.passed} "
                 f"failed={self.failed} inconclusive={self.inconclusive}"]
        for k in sorted(self.details):
            lines.append(f"  {k}: {self.details[k]}")
        for f in self.failures:
            lines.append(f"  failure trial={f.trial} trial_seed={f.trial_seed} observer={f.observer} "
                         f"check={f.check} divergence={f.divergence}")
            for i, (prog, db) in enumerate(zip(f.programs, f.databases), 1):
                lines.append(f"    program{i}: {prog}")
                lines.append(f"    db{i}: {json.dumps(db, sort_keys=True)}")
            lines.append(f"    lhs: {f.lhs}")
            lines.append(f"    rhs: {f.rhs}")
        return "\n".join(lines)


def _record(i: int, seed: int, v: Fail, programs: tuple) -> FailureRecord:
    return FailureRecord(
        trial=i, trial_seed=trial_seed(seed, i),
        observer=v.observer.render() if v.observer is not None else "",
        check=v.note, divergence=v.divergence,
        programs=[render_program(p) for p in programs],
        databases=[db_to_json(p.db) for p in programs],
        lhs=render_program(v.lhs) if isinstance(v.lhs, (Pg, PgHole)) else render_term(v.lhs),
        rhs=render_program(v.rhs) if isinstance(v.rhs, (Pg, PgHole)) else render_term(v.rhs),
    )


def _simulation_trial(cfg, rules, rng, star: bool):
    obs = pick_observer(cfg, rng)
    p = gen_program(cfg, rng, obs)
    check = check_simulation_star if star else check_simulation

    def verdict(ps):
        return check(obs, ps[0], cfg.fuel, rules, hide_fresh=cfg.hide_fresh)

    v = verdict((p,))
    if not star and isinstance(v, Pass):
        # also check one configuration from the middle of the run
        trace: list = []
        eval_star(p, cfg.fuel, rules, trace)
        if len(trace) > 2:
            q = trace[rng.randrange(1, len(trace) - 1)]
            v = verdict((q,))
            p = q
    return (p,), v, verdict


def _ni_trial(cfg, rules, rng):
    obs = pick_observer(cfg, rng)
    p1, p2 = gen_low_equiv_pair(cfg, rng, obs)

    def verdict(ps):
        a, b = ps
        e = _eraser(obs, cfg.hide_fresh)
        if e(a) != e(b):
            return Inconclusive()
        v = check_noninterference(obs, a, b, cfg.fuel, rules, hide_fresh=cfg.hide_fresh)
        if isinstance(v, Fail):
            return v
        v2 = check_noninterference_star(obs, a, b, cfg.fuel, rules, hide_fresh=cfg.hide_fresh)
        if isinstance(v2, Fail) or isinstance(v, Inconclusive):
            return v2 if isinstance(v2, Fail) else v
        return v2

    return (p1, p2), verdict((p1, p2)), verdict


def _idempotence_trial(cfg, rules, rng):
    obs = pick_observer(cfg, rng)
    g = Generator(cfg, rng, obs)
    p = g.program()
    v = check_idempotence(obs, p)
    if isinstance(v, Pass):
        x = g.fresh_var()
        v = check_subst_homomorphism(obs, x, g.pure("any", 2), g.monadic(3)[0])
    return (p,), v, lambda ps: check_idempotence(obs, ps[0])


def _monotonicity_trial(cfg, rules, rng):
    obs = pick_observer(cfg, rng)
    p = gen_program(cfg, rng, obs)
    return (p,), check_monotonicity(p, cfg.fuel, rules), lambda ps: check_monotonicity(ps[0], cfg.fuel, rules)


def _safety_trial(cfg, rules, rng):
    obs = pick_observer(cfg, rng)
    g = Generator(cfg, rng, obs)
    p = g.program()
    for _ in range(4):
        v = check_db_value_erasure(obs, g.db_value())
        if isinstance(v, Fail):
            return (p,), v, None
    for _, t in erase_db(obs, p.db):
        for r in t.rows:
            for x in (r.v1, r.v2):
                if not is_db_value(x):
                    return (p,), Fail(obs, (p,), x, x, ".", "db-value preservation"), None
    return (p,), check_safety(p, cfg.fuel, rules), lambda ps: check_safety(ps[0], cfg.fuel, rules)


_TRIALS = {
    "simulation": lambda cfg, rules, rng: _simulation_trial(cfg, rules, rng, False),
    "simulation_star": lambda cfg, rules, rng: _simulation_trial(cfg, rules, rng, True),
    "noninterference": _ni_trial,
    "idempotence": _idempotence_trial,
    "monotonicity": _monotonicity_trial,
    "safety": _safety_trial,
}


def run_trial(cfg: GenConfig, which: str, rules: Rules, i: int, *, minimize: bool = True):
    """Run trial ``i`` of a suite. Returns ``(verdict, programs)`` with the
    witness already shrunk when the verdict is a failure."""
    rng = random.Random(trial_seed(cfg.seed, i))
    programs, v, verdict = _TRIALS[which](cfg, rules, rng)
    if isinstance(v, Fail) and minimize and verdict is not None and v.programs:
        programs = shrink(v.programs, lambda ps: isinstance(verdict(ps), Fail))
        v = verdict(programs)
    elif isinstance(v, Fail):
        programs = v.programs or programs
    return v, programs


def _laws_report(cfg: GenConfig, rules: Rules) -> SuiteReport:
    scheme = cfg.scheme
    rep = check_laws(scheme.elements())
    out = SuiteReport("laws", scheme.selector(), cfg.seed, 1, cfg.fuel, rules.name)
    out.details = {f"{k} cases": v for k, v in rep.checked.items()}
    if rep.ok:
        out.passed = 1
    else:
        out.failed = 1
        out.details["violations"] = "; ".join(str(v) for v in rep.violations)
    return out


def _chunk(args) -> SuiteReport:
    cfg, which, rules, lo, hi, max_failures = args
    rep = SuiteReport(which, cfg.scheme.selector(), cfg.seed, 0, cfg.fuel, rules.name)
    for i in range(lo, hi):
        v, programs = run_trial(cfg, which, rules, i, minimize=len(rep.failures) < max_failures)
        rep.trials += 1
        if isinstance(v, Pass):
            rep.passed += 1
        elif isinstance(v, Inconclusive):
            rep.inconclusive += 1
        else:
            rep.failed += 1
            if len(rep.failures) < max_failures:
                rep.failures.append(_record(i, cfg.seed, v, programs))
    return rep


def run_suite(cfg: GenConfig, which: str, rules: Rules = DEFAULT_RULES, trials: int = 1_000,
              *, workers: int = 1, max_failures: int = 3, stop_after: Optional[int] = None) -> SuiteReport:
    """Run ``trials`` independent trials of a suite.

    Parallel and serial runs give identical reports: each trial depends only
    on ``(cfg.seed, i)`` and chunks are merged in index order. With
    ``stop_after`` set, a serial run stops once that many failures are seen.
    """
    which = which.replace("-", "_")
    if which == "laws":
        return _laws_report(cfg, rules)
    if which not in _TRIALS:
        raise ValueError(f"unknown suite {which!r}")
    if stop_after is not None:
        rep = SuiteReport(which, cfg.scheme.selector(), cfg.seed, 0, cfg.fuel, rules.name)
        for i in range(trials):
            rep = rep.merge(_chunk((cfg, which, rules, i, i + 1, max_failures - len(rep.failures))))
            if rep.failed >= stop_after:
                break
        return rep
    n = max(1, workers)
    bounds = [(trials * k // n, trials * (k + 1) // n) for k in range(n)]
    jobs = [(cfg, which, rules, lo, hi, max_failures) for lo, hi in bounds]
    if n == 1:
        parts = [_chunk(jobs[0])]
    else:
        with ProcessPoolExecutor(n) as ex:
            parts = list(ex.map(_chunk, jobs))
    rep = SuiteReport(which, cfg.scheme.selector(), cfg.seed, 0, cfg.fuel, rules.name)
    for part in parts:
        rep = rep.merge(part)
    rep.failures = rep.failures[:max_failures]
    return rep
