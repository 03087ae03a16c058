"""Small-step evaluation with an explicit, shared fuel budget.

``eval_term`` performs one pure step. ``step`` performs one monadic step on
a program; bind and toLabeled run a nested evaluation to a value, and every
step of that nested run draws from the same :class:`Fuel`. ``eval_star``
iterates ``step`` until the term is a value.

Running out of fuel is signalled with :class:`OutOfFuel` inside the
machinery and surfaces from ``eval_star`` as a :class:`FuelExhausted`
outcome. A term that cannot make progress (for example ``TIf`` on a
non-boolean) would self-step forever; it is treated as exhausting the
remaining fuel immediately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import database as dbm
from .syntax import (
    EXCEPTION, UNIT, LabelOp, Pg, PgHole, Program, TApp, TBind, TDelete,
    TFalse, TFix, TGetLabel, TIf, TInsert, TLabel, TLabelOf, TLabeled, TLam, TLIO,
    TOp, TReturn, TSelect, TTLabel, TToLabeled, TTrue, TUnlabel, TUpdate, Term,
    bool_term, is_value, subst,
)


@dataclass(frozen=True)
class Rules:
    """Switches for the label-raising side conditions of the database rules.

    The defaults give the noninterfering calculus. The two ``False``
    variants of ``insert_raises_field1`` / ``update_raises_table`` reproduce
    historically buggy rules and exist for mutation testing.
    ``insert_raises_table`` additionally protects the returned fresh key by
    the table label, and ``delete_raises_table`` protects the outcome of a
    delete whose predicate reads the second field (its success depends on
    the labels of every row, which only the table label covers). Turning
    both off gives the rules as originally written.
    """

    insert_raises_field1: bool = True
    insert_raises_table: bool = True
    update_raises_table: bool = True
    delete_raises_table: bool = True

    @property
    def name(self) -> str:
        for key, rules in MUTANTS.items():
            if rules == self:
                return key
        return "custom"


DEFAULT_RULES = Rules()
LITERAL_RULES = Rules(insert_raises_table=False, delete_raises_table=False)
MUTANTS = {
    "none": DEFAULT_RULES,
    "literal": LITERAL_RULES,
    "insert-no-l1": Rules(insert_raises_field1=False),
    "update-no-table": Rules(update_raises_table=False),
}


class OutOfFuel(Exception):
    pass


class Fuel:
    """Mutable step budget shared by a whole run, nested runs included."""

    __slots__ = ("remaining", "used")

    def __init__(self, remaining: int):
        if remaining < 0:
            raise ValueError("fuel must be non-negative")
        self.remaining = remaining
        self.used = 0

    def consume(self) -> None:
        if self.remaining <= 0:
            raise OutOfFuel
        self.remaining -= 1
        self.used += 1

    def drain(self) -> None:
        self.used += self.remaining
        self.remaining = 0
        raise OutOfFuel


def _as_fuel(fuel) -> Fuel:
    return fuel if isinstance(fuel, Fuel) else Fuel(int(fuel))


@dataclass(frozen=True)
class Terminated:
    program: Program
    steps: int


@dataclass(frozen=True)
class FuelExhausted:
    program: Program
    steps: int


Outcome = Terminated | FuelExhausted


# -- pure step ---------------------------------------------------------------


def _label_op(op: LabelOp, l1, l2) -> Term:
    if op is LabelOp.MEET:
        return TLabel(l1.meet(l2))
    if op is LabelOp.JOIN:
        return TLabel(l1.join(l2))
    return bool_term(l1.can_flow_to(l2))


def eval_term(t: Term) -> Term:
    """One call-by-name step. Returns ``t`` itself when no rule applies."""
    cls = type(t)
    if cls is TApp:
        f = t.fun
        if type(f) is TLam:
            return subst(f.var, t.arg, f.body)
        nf = eval_term(f)
        return t if nf is f else TApp(nf, t.arg)
    if cls is TLabelOf:
        b = t.body
        if type(b) is TLabeled:
            return TLabel(b.label)
        nb = eval_term(b)
        return t if nb is b else TLabelOf(nb)
    if cls is TOp:
        a, b = t.left, t.right
        if type(a) is TLabel:
            if type(b) is TLabel:
                return _label_op(t.op, a.label, b.label)
            nb = eval_term(b)
            return t if nb is b else TOp(t.op, a, nb)
        na = eval_term(a)
        return t if na is a else TOp(t.op, na, b)
    if cls is TIf:
        c = t.cond
        if type(c) is TTrue:
            return t.then
        if type(c) is TFalse:
            return t.orelse
        nc = eval_term(c)
        return t if nc is c else TIf(nc, t.then, t.orelse)
    if cls is TFix:
        b = t.body
        if type(b) is TLam:
            return subst(b.var, t, b.body)
        nb = eval_term(b)
        return t if nb is b else TFix(nb)
    return t


# -- monadic step ------------------------------------------------------------


def _run(p: Pg, fuel: Fuel, rules: Rules) -> Program:
    """Nested evaluation to a value; raises OutOfFuel."""
    while not isinstance(p, PgHole) and not is_value(p.term):
        fuel.consume()
        nxt = _step(p, fuel, rules)
        if nxt is p:
            fuel.drain()
        p = nxt
    return p


def _step(p: Program, fuel: Fuel, rules: Rules) -> Program:
    if isinstance(p, PgHole):
        return p
    lc, db, t = p.label, p.db, p.term
    cls = type(t)

    if cls is TBind:
        q = _run(Pg(lc, db, t.first), fuel, rules)
        if type(q.term) is TLIO:
            return Pg(q.label, q.db, TApp(t.then, q.term.body))
        return Pg(q.label, q.db, EXCEPTION)

    if cls is TReturn:
        return Pg(lc, db, TLIO(t.body))

    if cls is TGetLabel:
        return Pg(lc, db, TReturn(TLabel(lc)))

    if cls is TTLabel:
        lt = t.label
        if type(lt) is TLabel:
            if lc.can_flow_to(lt.label):
                return Pg(lc, db, TReturn(TLabeled(lt.label, t.body)))
            return Pg(lc, db, EXCEPTION)
        nl = eval_term(lt)
        return p if nl is lt else Pg(lc, db, TTLabel(nl, t.body))

    if cls is TUnlabel:
        b = t.body
        if type(b) is TLabeled:
            return Pg(b.label.join(lc), db, TReturn(b.body))
        nb = eval_term(b)
        return p if nb is b else Pg(lc, db, TUnlabel(nb))

    if cls is TToLabeled:
        lt = t.label
        if type(lt) is TLabel:
            lab = lt.label
            q = _run(Pg(lc, db, t.body), fuel, rules)
            if type(q.term) is TLIO and lc.can_flow_to(lab) and q.label.can_flow_to(lab):
                return Pg(lc, q.db, TReturn(TLabeled(lab, q.term.body)))
            return Pg(lc, q.db, TReturn(TLabeled(lab, EXCEPTION)))
        nl = eval_term(lt)
        return p if nl is lt else Pg(lc, db, TToLabeled(nl, t.body))

    if cls is TInsert:
        return _insert(p, t, rules)
    if cls is TSelect:
        return _select(p, t)
    if cls is TDelete:
        return _delete(p, t, rules)
    if cls is TUpdate:
        return _update(p, t, rules)

    nt = eval_term(t)
    return p if nt is t else Pg(lc, db, nt)


def _insert(p: Pg, t: TInsert, rules: Rules) -> Program:
    a, b = t.first, t.second
    if type(a) is not TLabeled or type(b) is not TLabeled:
        return p
    lc, db = p.label, p.db
    l1, v1, l2, v2 = a.label, a.body, b.label, b.body
    raised = lc.join(l1) if rules.insert_raises_field1 else lc
    tab = dbm.lookup_table(db, t.table)
    if (tab is not None and l1.can_flow_to(tab.label_f1)
            and l2.can_flow_to(tab.label_f2(v1)) and lc.can_flow_to(tab.label_t)):
        key = tab.fresh_key
        new_db = dbm.insert_row(db, t.table, dbm.Row(key, v1, v2))
        if rules.insert_raises_table:
            raised = raised.join(tab.label_t)
        return Pg(raised, new_db, TReturn(key))
    return Pg(raised, db, TReturn(EXCEPTION))


def _select(p: Pg, t: TSelect) -> Program:
    lc, db = p.label, p.db
    tab = dbm.lookup_table(db, t.table)
    if tab is None:
        return Pg(lc, db, TReturn(EXCEPTION))
    raised = lc.join(tab.label_t).join(dbm.label_pred(t.pred, tab))
    return Pg(raised, db, TReturn(dbm.select_rows(db, t.table, t.pred)))


def _delete(p: Pg, t: TDelete, rules: Rules) -> Program:
    lc, db = p.label, p.db
    tab = dbm.lookup_table(db, t.table)
    if tab is None:
        return Pg(lc, db, TReturn(EXCEPTION))
    raised = lc.join(dbm.label_read(t.pred, tab))
    if rules.delete_raises_table and dbm.pred_arity(t.pred) == 2:
        raised = raised.join(tab.label_t)
    if lc.join(dbm.label_pred(t.pred, tab)).can_flow_to(tab.label_t):
        return Pg(raised, dbm.delete_rows(db, t.table, t.pred), TReturn(UNIT))
    return Pg(raised, db, TReturn(EXCEPTION))


def _update(p: Pg, t: TUpdate, rules: Rules) -> Program:
    a, b = t.first, t.second
    if type(a) is not TLabeled or type(b) is not TLabeled:
        return p
    lc, db = p.label, p.db
    tab = dbm.lookup_table(db, t.table)
    if tab is None:
        return Pg(lc, db, TReturn(EXCEPTION))
    l1, v1, l2, v2 = a.label, a.body, b.label, b.body
    lpred = dbm.label_pred(t.pred, tab)
    raised = lc.join(l1).join(dbm.label_read(t.pred, tab))
    if rules.update_raises_table:
        raised = raised.join(tab.label_t)
    if (lc.join(l1).join(lpred).can_flow_to(tab.label_f1)
            and lc.join(l2).join(lpred).can_flow_to(tab.label_f2(v1))):
        return Pg(raised, dbm.update_rows(db, t.table, t.pred, v1, v2), TReturn(UNIT))
    return Pg(raised, db, TReturn(EXCEPTION))


# -- public entry points -----------------------------------------------------


def step(p: Program, fuel=1_000, rules: Rules = DEFAULT_RULES) -> Program:
    """One top-level step. Consumes one unit of fuel plus whatever nested
    bind / toLabeled runs need; raises :class:`OutOfFuel` if that is more
    than is available."""
    fuel = _as_fuel(fuel)
    fuel.consume()
    return _step(p, fuel, rules)


def eval_star(p: Program, fuel=1_000, rules: Rules = DEFAULT_RULES,
              trace: Optional[list] = None) -> Outcome:
    """Evaluate until the term is a value (or the program is a hole).

    When ``trace`` is a list, every top-level configuration visited is
    appended to it, starting with ``p``.
    """
    fuel = _as_fuel(fuel)
    if trace is not None:
        trace.append(p)
    while not isinstance(p, PgHole) and not is_value(p.term):
        try:
            fuel.consume()
            nxt = _step(p, fuel, rules)
            if nxt is p:
                fuel.drain()
        except OutOfFuel:
            return FuelExhausted(p, fuel.used)
        p = nxt
        if trace is not None:
            trace.append(p)
    return Terminated(p, fuel.used)


def step_outcome(p: Program, fuel=1_000, rules: Rules = DEFAULT_RULES) -> Outcome:
    """``step`` with fuel exhaustion reported as an outcome."""
    fuel = _as_fuel(fuel)
    try:
        return Terminated(step(p, fuel, rules), fuel.used)
    except OutOfFuel:
        return FuelExhausted(p, fuel.used)

