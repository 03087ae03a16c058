import random

import pytest
from hypothesis import given, strategies as st

from strategies import db_values, labels, terms
from flowcalc.database import Const, Database, IfEqInt, Row, Table, TablePolicy
from flowcalc.erasure import erase_db, erase_program, erase_row, erase_table, erase_term
from flowcalc.generate import GenConfig, gen_program
from flowcalc.lattice import PUBLIC as P, SECRET as S, PowersetLabel
from flowcalc.syntax import (HOLE, UNIT, Pg, PgHole, TInt, TLabel, TLabeled, TReturn, TTLabel,
                             TToLabeled, is_db_value, subst)

ps = lambda *n: PowersetLabel(n, "ABC")  # noqa: E731
A, B, AB = ps("A"), ps("B"), ps("A", "B")


def test_erase_term_examples():
    assert erase_term(P, TLabeled(S, TInt(3))) == TLabeled(S, HOLE)
    assert erase_term(S, TLabeled(P, TInt(3))) == TLabeled(P, TInt(3))
    assert erase_term(P, TTLabel(TLabel(S), TInt(3))) == TTLabel(TLabel(S), HOLE)
    assert erase_term(P, TToLabeled(TLabel(S), TLabeled(S, UNIT))) == \
        TToLabeled(TLabel(S), TLabeled(S, HOLE))


def _db(table_label=S, rows=(Row(TInt(0), TInt(1), TInt(2)),), fresh=1):
    return Database((("t", Table(TablePolicy(table_label, fresh, P, Const(P)), rows)),))


def test_erase_program_examples():
    db = _db()
    assert erase_program(P, Pg(S, db, TReturn(UNIT))) == PgHole(erase_db(P, db))
    assert erase_program(S, Pg(P, db, TReturn(UNIT))) == Pg(P, erase_db(S, db), TReturn(UNIT))
    assert erase_program(P, PgHole(db)) == PgHole(erase_db(P, db))


def test_erase_table_examples():
    hidden = erase_table(P, _db().tables[0][1])
    assert hidden.rows == ()
    assert hidden.policy.table_label == S
    pol = TablePolicy(AB, 1, AB, Const(A))
    assert erase_row(A, pol, Row(TInt(0), TInt(1), TInt(9))) == Row(TInt(0), HOLE, HOLE)
    pol = TablePolicy(AB, 1, A, IfEqInt(0, Const(A), Const(B)))
    assert erase_row(A, pol, Row(TInt(0), TInt(1), TInt(9))) == Row(TInt(0), TInt(1), HOLE)
    assert erase_row(A, pol, Row(TInt(0), TInt(0), TInt(9))) == Row(TInt(0), TInt(0), TInt(9))


def test_hidden_fresh_counter():
    t = _db(fresh=5).tables[0][1]
    assert erase_table(P, t).policy.fresh == 0
    assert erase_table(P, t, hide_fresh=False).policy.fresh == 5
    assert erase_table(S, t).policy.fresh == 5


def test_erase_db_keeps_names_and_order():
    db = Database((("b", _db().tables[0][1]), ("a", _db(table_label=P).tables[0][1])))
    assert erase_db(P, db).names() == ["b", "a"]


@given(labels, terms)
def test_erase_term_idempotent(l, t):
    once = erase_term(l, t)
    assert erase_term(l, once) == once


@given(labels, db_values)
def test_db_value_preserved(l, v):
    assert is_db_value(erase_term(l, v))


@given(labels, st.integers(0, 3), db_values, terms)
def test_subst_homomorphism(l, x, tx, t):
    assert erase_term(l, subst(x, tx, t)) == subst(x, erase_term(l, tx), erase_term(l, t))


@pytest.mark.parametrize("lattice", ["twopoint", "powerset:A,B,C", "confinteg"])
def test_erase_program_idempotent_on_generated(lattice):
    cfg = GenConfig(seed=3, lattice=lattice)
    rng = random.Random(3)
    scheme = cfg.scheme
    for _ in range(200):
        p = gen_program(cfg, rng)
        for l in scheme.elements():
            once = erase_program(l, p)
            assert erase_program(l, once) == once
            assert erase_db(l, erase_db(l, p.db)) == erase_db(l, p.db)
