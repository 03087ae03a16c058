import pytest

from flowcalc.database import Const, Database, Eq, Field, Not, PTrue, Row, Table, TablePolicy
from flowcalc.evaluator import DEFAULT_RULES, LITERAL_RULES, MUTANTS
from flowcalc.generate import GenConfig
from flowcalc.lattice import PUBLIC as P, SECRET as S, PowersetLabel, lattice_from_selector
from flowcalc.metatheory import (Fail, Inconclusive, Pass, SuiteReport, check_idempotence,
                                 check_monotonicity, check_noninterference,
                                 check_noninterference_star, check_safety, check_simulation,
                                 check_simulation_star, first_divergence, run_suite, run_trial,
                                 shrink)
from flowcalc.syntax import (UNIT, Pg, PgHole, TApp, TBind, TFix, TIf, TInsert, TInt, TLabeled,
                             TLam, TReturn, TUnlabel, TVar, TRUE, is_safe, term_size)
from flowcalc.text import parse_program

EMPTY = Database()
K = TLam(0, TReturn(TVar(0)))


def _secret_table(fresh=0):
    return Database((("t1", Table(TablePolicy(S, fresh, S, Const(S)), ())),))


def test_simulation_examples():
    assert check_simulation(P, Pg(P, EMPTY, TReturn(UNIT))) == Pass()
    assert check_simulation(P, Pg(S, _secret_table(), TReturn(UNIT))) == Pass()
    loop = Pg(P, EMPTY, TBind(TFix(TLam(0, TVar(0))), K))
    assert isinstance(check_simulation(P, loop, 50), Inconclusive)


def test_simulation_star_examples():
    chain = Pg(P, EMPTY, TBind(TReturn(TInt(1)), TLam(0, TBind(TReturn(TVar(0)),
                                                             TLam(1, TReturn(TVar(1)))))))
    assert check_simulation_star(S, chain) == Pass()
    leak = Pg(P, EMPTY, TBind(TUnlabel(TLabeled(S, TInt(3))), K))
    assert check_simulation_star(P, leak) == Pass()
    assert isinstance(check_simulation_star(P, Pg(P, EMPTY, TFix(TLam(0, TVar(0)))), 40), Inconclusive)


def test_noninterference_examples():
    p = Pg(P, EMPTY, TBind(TReturn(TLabeled(S, TInt(1))), K))
    assert check_noninterference(P, p, p) == Pass()
    q = Pg(P, EMPTY, TBind(TReturn(TLabeled(S, TInt(2))), K))
    assert check_noninterference(P, p, q) == Pass()
    assert check_noninterference_star(P, p, q) == Pass()
    with pytest.raises(ValueError):
        check_noninterference(P, p, Pg(P, EMPTY, TReturn(UNIT)))


def test_fresh_counter_leak_with_kept_counters():
    # a secret-context insert into a secret table moves its fresh counter
    src = '(pg secret (insert "t1" (labeled secret (int 1)) (labeled secret (int 0))))'
    p = parse_program(src, _secret_table(), P)
    assert check_simulation(P, p) == Pass()
    v = check_simulation(P, p, hide_fresh=False)
    assert isinstance(v, Fail) and v.divergence == ".db.tables[0][1].policy.fresh"


def test_returned_key_leaks_under_literal_insert():
    pub = Database((("t0", Table(TablePolicy(S, 5, P, Const(S)), ())),))
    pub2 = Database((("t0", Table(TablePolicy(S, 6, P, Const(S)), ())),))
    t = TInsert("t0", TLabeled(P, TInt(2)), TLabeled(S, TInt(1)))
    p1, p2 = Pg(P, pub, t), Pg(P, pub2, t)
    assert check_noninterference(P, p1, p2) == Pass()
    assert isinstance(check_noninterference(P, p1, p2, rules=LITERAL_RULES), Fail)


def test_delete_reads_second_field_labels():
    ps = lambda *n: PowersetLabel(n, "ABC")  # noqa: E731
    pol = TablePolicy(ps("A", "B"), 1, ps(), Const(ps("B", "C")))
    db = Database((("t1", Table(pol, (Row(TInt(0), TInt(3), UNIT),))),))
    scheme = lattice_from_selector("powerset:A,B,C")
    p = parse_program('(pg {} (delete "t1" (not (= f2 (int 3)))))', db, ps(), scheme.parse)
    assert p.term.pred == Not(Eq(Field.F2, TInt(3)))
    assert check_simulation(ps(), p) == Pass()
    assert isinstance(check_simulation(ps(), p, rules=LITERAL_RULES), Fail)


def test_idempotence_monotonicity_safety_checks():
    p = Pg(P, _secret_table(), TBind(TUnlabel(TLabeled(S, UNIT)), K))
    assert check_idempotence(P, p) == Pass()
    assert check_monotonicity(p) == Pass()
    assert check_safety(p) == Pass()
    assert isinstance(check_monotonicity(Pg(P, EMPTY, TFix(TLam(0, TVar(0)))), 20), Inconclusive)


def test_first_divergence():
    a = Pg(P, EMPTY, TReturn(TInt(1)))
    assert first_divergence(a, a) is None
    assert first_divergence(a, Pg(S, EMPTY, TReturn(TInt(1)))) == ".label"
    assert first_divergence(a, Pg(P, EMPTY, TReturn(TInt(2)))) == ".term.body.value"
    assert first_divergence(a, PgHole(EMPTY)) == "."


def test_shrink_keeps_failure_and_safety():
    big = Pg(P, EMPTY, TIf(TRUE, TApp(TLam(0, TVar(0)), TBind(TReturn(TInt(3)), K)), TInt(7)))

    def has_three(ps):
        return "(int 3)" in repr(ps[0].term)

    out = shrink((big,), has_three)
    assert has_three(out) and is_safe(out[0])
    assert term_size(out[0].term) < term_size(big.term)
    assert term_size(out[0].term) <= 2


def test_run_suite_is_deterministic_and_parallel_safe():
    cfg = GenConfig(seed=42)
    a = run_suite(cfg, "noninterference", trials=200)
    b = run_suite(cfg, "noninterference", trials=200)
    c = run_suite(cfg, "noninterference", trials=200, workers=2)
    assert a.to_json() == b.to_json() == c.to_json()
    assert a.trials == 200 and a.passed + a.failed + a.inconclusive == 200
    assert a.ok


def test_suite_names_and_laws():
    cfg = GenConfig(lattice="powerset:A,B,C")
    rep = run_suite(cfg, "laws")
    assert rep.ok and rep.details
    assert run_suite(cfg, "simulation-star", trials=20).suite == "simulation_star"
    with pytest.raises(ValueError):
        run_suite(cfg, "nosuch", trials=1)


@pytest.mark.parametrize("mutant", ["insert-no-l1", "update-no-table"])
def test_mutants_are_caught_and_replayable(mutant):
    cfg = GenConfig(seed=1)
    rules = MUTANTS[mutant]
    rep = run_suite(cfg, "noninterference", rules, trials=5_000, stop_after=1)
    assert rep.failed >= 1
    rec = rep.failures[0]
    v, programs = run_trial(cfg, "noninterference", rules, rec.trial)
    assert isinstance(v, Fail)
    assert [repr(p) for p in programs] and len(programs) == 2
    # the same witness is harmless under the default rules
    d, _ = run_trial(cfg, "noninterference", DEFAULT_RULES, rec.trial)
    assert not isinstance(d, Fail)
    assert "failure trial=" in rep.to_text()


def test_report_merge():
    a = SuiteReport("safety", "twopoint", 0, 2, 10, "default", passed=2)
    b = SuiteReport("safety", "twopoint", 0, 3, 10, "default", passed=1, inconclusive=2)
    m = a.merge(b)
    assert (m.trials, m.passed, m.inconclusive, m.inconclusive_rate) == (5, 3, 2, 0.4)
