"""Three leaks the checker finds when the evaluator or erasure is weakened.

    python demos/leaks.py

Each section builds a small configuration, checks it under the default
rules (passes) and under a weakened variant (fails), and prints the
divergence.
"""

from flowcalc.database import Const, Database, Row, Table, TablePolicy
from flowcalc.evaluator import LITERAL_RULES, MUTANTS
from flowcalc.generate import GenConfig
from flowcalc.lattice import PUBLIC, SECRET, lattice_from_selector
from flowcalc.metatheory import check_noninterference, check_simulation, run_suite
from flowcalc.syntax import UNIT, TInt
from flowcalc.text import parse_program


def show(title, good, bad):
    print(f"{title}\n  default rules: {type(good).__name__}\n  weakened:      {type(bad).__name__}"
          f" at {getattr(bad, 'divergence', '-')}\n")


def fresh_counter():
    db = Database((("t1", Table(TablePolicy(SECRET, 0, SECRET, Const(SECRET)), ())),))
    p = parse_program('(pg secret (insert "t1" (labeled secret (int 1)) (labeled secret unit)))',
                      db, PUBLIC)
    show("1. a hidden table's fresh counter moves on insert",
         check_simulation(PUBLIC, p), check_simulation(PUBLIC, p, hide_fresh=False))


def returned_key():
    def table(fresh):
        return Database((("t0", Table(TablePolicy(SECRET, fresh, PUBLIC, Const(SECRET)), ())),))
    src = '(pg public (insert "t0" (labeled public (int 2)) (labeled secret unit)))'
    p1, p2 = parse_program(src, table(5), PUBLIC), parse_program(src, table(6), PUBLIC)
    show("2. insert returns the fresh key of a hidden table",
         check_noninterference(PUBLIC, p1, p2),
         check_noninterference(PUBLIC, p1, p2, rules=LITERAL_RULES))


def delete_check():
    scheme = lattice_from_selector("powerset:A,B,C")
    L = scheme.parse
    pol = TablePolicy(L("{A,B}"), 1, L("{}"), Const(L("{B,C}")))
    rows = (Row(TInt(0), TInt(3), UNIT),)
    db = Database((("t1", Table(pol, rows)),))
    p = parse_program('(pg {} (delete "t1" (not (= f2 (int 3)))))', db, L("{}"), L)
    show("3. delete's check reads second-field labels guarded only by the table label",
         check_simulation(L("{}"), p), check_simulation(L("{}"), p, rules=LITERAL_RULES))


def mutants():
    cfg = GenConfig(seed=1)
    for name in ("insert-no-l1", "update-no-table"):
        rep = run_suite(cfg, "noninterference", MUTANTS[name], 5_000, max_failures=1, stop_after=1)
        print(rep.to_text(), "\n")


if __name__ == "__main__":
    fresh_counter()
    returned_key()
    delete_check()
    mutants()
