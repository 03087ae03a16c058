"""Seeded random generation of safe programs, databases and low-equivalent
program pairs.

There is no type system, so the generator tracks a rough result type for
every term it builds and only plugs variables into positions where that
type makes sense. This keeps almost all generated programs from getting
stuck. Insert and update arguments are always literal labeled database
values, so every generated program is safe.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Optional

from . import database as dbm
from .erasure import erase_program
from .lattice import Label, lattice_from_selector
from .syntax import (
    EXCEPTION, FALSE, GET_LABEL, NIL, TRUE, UNIT, LabelOp, Pg, PgHole, Program,
    TApp, TBind, TCons, TDelete, TFalse, TFix, TIf, TInsert, TInt, TLabel,
    TLabelOf, TLabeled, TLam, TOp, TReturn, TSelect, TTLabel, TToLabeled, TTrue,
    TUnit, TUnlabel, TUpdate, TVar, Term, is_db_value, is_safe, map_children,
)

INT_RANGE = 4
MISSING_TABLE = "missing"

# rough result types
UNIT_T, INT_T, BOOL_T, LABEL_T, LIST_T, ANY_T = "unit", "int", "bool", "label", "list", "any"
_BASE = (UNIT_T, INT_T, BOOL_T, LABEL_T)


def labeled_t(inner):
    return ("labeled", inner)


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_term_depth: int = 5
    max_tables: int = 2
    max_rows_per_table: int = 3
    fuel: int = 1_000
    lattice: str = "twopoint"
    observer: Optional[str] = None  # None: drawn per trial
    fix_rate: float = 0.02
    hide_fresh: bool = True  # erasure resets hidden tables' fresh counters

    def __post_init__(self):
        for name in ("max_term_depth", "max_tables", "max_rows_per_table", "fuel"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    @property
    def scheme(self):
        return lattice_from_selector(self.lattice)


def pick_observer(cfg: GenConfig, rng: random.Random) -> Label:
    scheme = cfg.scheme
    if cfg.observer is not None:
        return scheme.parse(cfg.observer)
    top = scheme.top()
    return rng.choice([l for l in scheme.elements() if l != top])


class Generator:
    def __init__(self, cfg: GenConfig, rng: random.Random, observer: Label):
        self.cfg = cfg
        self.rng = rng
        self.observer = observer
        scheme = cfg.scheme
        self.labels = scheme.elements()
        self.bottom = scheme.bottom()
        self.top = scheme.top()
        self.env: list[tuple[int, object]] = []
        self.next_var = 0
        self.db = dbm.EMPTY_DB

    # -- labels and values ----------------------------------------------------

    def label(self) -> Label:
        r = self.rng.random()
        if r < 0.2:
            return self.bottom
        if r < 0.4:
            return self.observer
        if r < 0.5:
            return self.top
        return self.rng.choice(self.labels)

    def label_below(self, bound: Label) -> Label:
        below = [l for l in self.labels if l.can_flow_to(bound)]
        if self.observer in below and self.rng.random() < 0.3:
            return self.observer
        return self.rng.choice(below)

    def label_near(self, target: Label) -> Label:
        """Mostly a label comparable with ``target``, so both branches of a
        flow check get exercised."""
        if self.rng.random() < 0.25:
            return self.label()
        comparable = [l for l in self.labels if l.can_flow_to(target) or target.can_flow_to(l)]
        return self.rng.choice(comparable)

    def split_pair(self) -> tuple[Label, Label]:
        """A visible and a hidden label when the observer allows it."""
        vis = [l for l in self.labels if l.can_flow_to(self.observer)]
        hid = [l for l in self.labels if not l.can_flow_to(self.observer)]
        if hid and self.rng.random() < 0.7:
            pair = [self.rng.choice(vis), self.rng.choice(hid)]
            self.rng.shuffle(pair)
            return pair[0], pair[1]
        return self.label(), self.label()

    def db_value(self, kind=None) -> Term:
        if kind is None:
            r = self.rng.random()
            kind = INT_T if r < 0.55 else BOOL_T if r < 0.75 else UNIT_T if r < 0.85 else LABEL_T
        if kind == INT_T:
            return TInt(self.rng.randrange(INT_RANGE))
        if kind == BOOL_T:
            return self.rng.choice((TRUE, FALSE))
        if kind == LABEL_T:
            return TLabel(self.label())
        return UNIT

    # -- databases -------------------------------------------------------------

    def label_fn(self) -> dbm.LabelFn:
        r = self.rng.random()
        if r < 0.35:
            return dbm.Const(self.label())
        if r < 0.9:
            a, b = self.split_pair()
            return dbm.IfEqInt(self.rng.randrange(INT_RANGE), dbm.Const(a), dbm.Const(b))
        cls = self.rng.choice((dbm.FnJoin, dbm.FnMeet))
        return cls(dbm.Const(self.label()), dbm.Const(self.label()))

    def rows(self, n: int) -> tuple[tuple, int]:
        keys = sorted(self.rng.sample(range(n + 2), n))
        rows = tuple(dbm.Row(TInt(k), self.db_value(), self.db_value()) for k in keys)
        fresh = (keys[-1] + 1 if keys else 0) + self.rng.randrange(2)
        return rows, fresh

    def table(self) -> dbm.Table:
        r = self.rng.random()
        if r < 0.45:
            # hidden length, visible first field: the shape that stresses
            # predicate labels
            hidden = [l for l in self.labels if not l.can_flow_to(self.observer)]
            tl = self.rng.choice(hidden) if hidden else self.label()
        else:
            tl = self.label()
        f1 = self.label_below(tl)
        rows, fresh = self.rows(self.rng.randint(0, self.cfg.max_rows_per_table))
        return dbm.Table(dbm.TablePolicy(tl, fresh, f1, self.label_fn()), rows)

    def database(self) -> dbm.Database:
        n = self.rng.randint(1, self.cfg.max_tables)
        return dbm.Database(tuple((f"t{i}", self.table()) for i in range(n)))

    # -- pure terms --------------------------------------------------------------

    def _var_of(self, ty) -> Optional[Term]:
        cands = [v for v, t in self.env if t == ty]
        if cands and self.rng.random() < 0.5:
            return TVar(self.rng.choice(cands))
        return None

    def _labeled_vars(self) -> list[tuple[int, object]]:
        return [(v, t) for v, t in self.env if isinstance(t, tuple)]

    def fresh_var(self) -> int:
        self.next_var += 1
        return self.next_var - 1

    def pure(self, ty, depth: int) -> Term:
        rng = self.rng
        if ty == ANY_T:
            ty = rng.choice(_BASE + (LIST_T, labeled_t(INT_T)))
        v = self._var_of(ty)
        if v is not None:
            return v
        leaf = depth <= 0 or rng.random() < 0.45
        if isinstance(ty, tuple):
            inner = ty[1] if ty[1] in _BASE else INT_T
            return TLabeled(self.label(), self.pure(inner, depth - 1) if not leaf else self.db_value(inner))
        if ty == LIST_T:
            if leaf:
                return NIL
            return TCons(self.pure(INT_T, depth - 1), self.pure(LIST_T, depth - 1))
        if ty == UNIT_T:
            return UNIT
        if leaf:
            return self.db_value(ty)
        r = rng.random()
        if r < 0.25:
            return TIf(self.pure(BOOL_T, depth - 1), self.pure(ty, depth - 1), self.pure(ty, depth - 1))
        if r < 0.45:
            x = self.fresh_var()
            arg_ty = rng.choice(_BASE)
            self.env.append((x, arg_ty))
            body = self.pure(ty, depth - 1)
            self.env.pop()
            return TApp(TLam(x, body), self.pure(arg_ty, depth - 1))
        if ty == BOOL_T:
            return TOp(LabelOp.CAN_FLOW_TO, self.pure(LABEL_T, depth - 1), self.pure(LABEL_T, depth - 1))
        if ty == LABEL_T:
            if rng.random() < 0.4:
                labeled = self._labeled_vars()
                if labeled and rng.random() < 0.5:
                    return TLabelOf(TVar(rng.choice(labeled)[0]))
                return TLabelOf(self.pure(labeled_t(INT_T), depth - 1))
            op = rng.choice((LabelOp.JOIN, LabelOp.MEET))
            return TOp(op, self.pure(LABEL_T, depth - 1), self.pure(LABEL_T, depth - 1))
        return self.db_value(ty)

    def label_term(self, depth: int) -> Term:
        if self.rng.random() < 0.8:
            return TLabel(self.label())
        return self.pure(LABEL_T, min(depth, 2))

    # -- predicates ----------------------------------------------------------------

    def pred(self, depth: int, want_f2: bool = False) -> dbm.Pred:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.55:
            r = rng.random()
            if want_f2 or r < 0.35:
                f = dbm.Field.F2
            elif r < 0.7:
                f = dbm.Field.F1
            elif r < 0.8:
                f = dbm.Field.KEY
            else:
                return rng.choice((dbm.PTrue(), dbm.PFalse()))
            if rng.random() < 0.6:
                return dbm.Eq(f, self.db_value(INT_T) if f is dbm.Field.KEY else self.db_value())
            return dbm.Lt(f, rng.randrange(INT_RANGE + 1))
        r = rng.random()
        if r < 0.4:
            return dbm.And(self.pred(depth - 1, want_f2), self.pred(depth - 1))
        if r < 0.8:
            return dbm.Or(self.pred(depth - 1, want_f2), self.pred(depth - 1))
        return dbm.Not(self.pred(depth - 1, want_f2))

    # -- database operations ------------------------------------------------------------

    def table_ref(self) -> tuple[str, Optional[dbm.Table]]:
        if not self.db.tables or self.rng.random() < 0.05:
            return MISSING_TABLE, None
        name, t = self.rng.choice(self.db.tables)
        return name, t

    def field_args(self, t: Optional[dbm.Table]) -> tuple[Term, Term]:
        v1 = self.db_value()
        v2 = self.db_value()
        if t is None:
            return TLabeled(self.label(), v1), TLabeled(self.label(), v2)
        l1 = self.label_near(t.label_f1)
        fn = t.policy.label_field2
        if isinstance(fn, dbm.IfEqInt) and self.rng.random() < 0.6:
            # first field picks the second field's label: vary it
            v1 = TInt(fn.value if self.rng.random() < 0.5 else self.rng.randrange(INT_RANGE))
        l2 = self.label_near(t.label_f2(v1))
        return TLabeled(l1, v1), TLabeled(l2, v2)

    def db_op(self, depth: int) -> tuple[Term, object]:
        name, t = self.table_ref()
        r = self.rng.random()
        if r < 0.3:
            a, b = self.field_args(t)
            return TInsert(name, a, b), ANY_T
        if r < 0.55:
            return TSelect(name, self.pred(2)), LIST_T
        if r < 0.75:
            return TDelete(name, self.pred(2, want_f2=self.rng.random() < 0.5)), ANY_T
        a, b = self.field_args(t)
        return TUpdate(name, self.pred(2, want_f2=self.rng.random() < 0.6), a, b), ANY_T

    # -- monadic terms ------------------------------------------------------------------

    def monadic(self, depth: int) -> tuple[Term, object]:
        rng = self.rng
        if depth <= 0:
            r = rng.random()
            if r < 0.4:
                ty = rng.choice(_BASE)
                return TReturn(self.pure(ty, 0)), ty
            if r < 0.55:
                return GET_LABEL, LABEL_T
            if r < 0.65:
                return self.unlabel(0)
            return self.db_op(0)
        if rng.random() < self.cfg.fix_rate:
            return self.fix(depth), ANY_T
        r = rng.random()
        if r < 0.40:
            return self.connective(depth)
        if r < 0.65:
            return self.db_op(depth)
        if r < 0.85:
            return self.labeling(depth)
        ty = rng.choice(_BASE + (labeled_t(INT_T), LIST_T))
        return TReturn(self.pure(ty, depth - 1)), ty

    def connective(self, depth: int) -> tuple[Term, object]:
        rng = self.rng
        r = rng.random()
        if r < 0.75:
            first, ty = self.monadic(depth - 1)
            x = self.fresh_var()
            self.env.append((x, ty))
            then, ty2 = self.monadic(depth - 1)
            self.env.pop()
            return TBind(first, TLam(x, then)), ty2
        if r < 0.9:
            a, ta = self.monadic(depth - 1)
            b, tb = self.monadic(depth - 1)
            return TIf(self.pure(BOOL_T, 1), a, b), ta if ta == tb else ANY_T
        x = self.fresh_var()
        arg_ty = rng.choice(_BASE + (labeled_t(INT_T),))
        self.env.append((x, arg_ty))
        body, ty = self.monadic(depth - 1)
        self.env.pop()
        return TApp(TLam(x, body), self.pure(arg_ty, 1)), ty

    def unlabel(self, depth: int) -> tuple[Term, object]:
        labeled = self._labeled_vars()
        if labeled and self.rng.random() < 0.6:
            v, ty = self.rng.choice(labeled)
            inner = ty[1] if ty[1] in _BASE else ANY_T
            return TUnlabel(TVar(v)), inner
        inner = self.rng.choice(_BASE)
        return TUnlabel(self.pure(labeled_t(inner), max(depth - 1, 0))), inner

    def labeling(self, depth: int) -> tuple[Term, object]:
        r = self.rng.random()
        if r < 0.3:
            inner = self.rng.choice(_BASE)
            return TTLabel(self.label_term(depth), self.pure(inner, depth - 1)), labeled_t(inner)
        if r < 0.6:
            return self.unlabel(depth)
        if r < 0.9:
            body, ty = self.monadic(depth - 1)
            return TToLabeled(self.label_term(depth), body), labeled_t(None)
        return GET_LABEL, LABEL_T

    def fix(self, depth: int) -> Term:
        """``fix (\\f. \\x. if c then m else f x) arg``: terminates exactly
        when ``c`` is true."""
        f, x = self.fresh_var(), self.fresh_var()
        body, _ = self.monadic(min(depth - 1, 1))
        loop = TLam(x, TIf(self.pure(BOOL_T, 1), body, TApp(TVar(f), TVar(x))))
        return TApp(TFix(TLam(f, loop)), self.pure(INT_T, 0))

    # -- programs ------------------------------------------------------------------------

    def program(self, db: Optional[dbm.Database] = None) -> Pg:
        self.db = self.database() if db is None else db
        lc = self.bottom if self.rng.random() < 0.6 else self.label()
        term, _ = self.monadic(self.cfg.max_term_depth)
        return Pg(lc, self.db, term)

    # -- low-equivalent variants ---------------------------------------------------

    def redraw(self, t: Term) -> Term:
        """A value of the same shape, for a payload the observer cannot see."""
        if isinstance(t, TInt):
            return TInt(self.rng.randrange(INT_RANGE))
        if isinstance(t, (TTrue, TFalse)):
            return self.rng.choice((TRUE, FALSE))
        if isinstance(t, TLabel):
            return TLabel(self.rng.choice(self.labels))
        return self.vary_term(t)

    def vary_term(self, t: Term) -> Term:
        obs = self.observer
        if isinstance(t, TLabeled):
            if t.label.can_flow_to(obs):
                return TLabeled(t.label, self.vary_term(t.body))
            return TLabeled(t.label, self.redraw(t.body))
        if isinstance(t, TTLabel) and isinstance(t.label, TLabel) and not t.label.label.can_flow_to(obs):
            return TTLabel(t.label, self.redraw(t.body))
        if not t._term_fields:
            return t
        return map_children(t, self.vary_term)

    def vary_table(self, t: dbm.Table) -> dbm.Table:
        obs = self.observer
        pol = t.policy
        if not pol.table_label.can_flow_to(obs):
            rows, fresh = self.rows(self.rng.randint(0, self.cfg.max_rows_per_table))
            if not self.cfg.hide_fresh:
                # the counter stays visible: keep it, and keep keys below it
                rows = tuple(r for r in rows if r.key.value < pol.fresh)
                fresh = pol.fresh
            return dbm.Table(replace(pol, fresh=fresh), rows)
        rows = []
        for r in t.rows:
            if not pol.label_field1.can_flow_to(obs):
                r = dbm.Row(r.key, self.db_value(), self.db_value())
            elif not pol.label_field2(r.v1).can_flow_to(obs):
                r = dbm.Row(r.key, r.v1, self.db_value())
            rows.append(r)
        return dbm.Table(pol, tuple(rows))

    def vary_program(self, p: Pg) -> Program:
        db = dbm.Database(tuple((n, self.vary_table(t)) for n, t in p.db.tables))
        if not p.label.can_flow_to(self.observer):
            self.db = db
            term, _ = self.monadic(self.cfg.max_term_depth)
            return Pg(p.label, db, term)
        return Pg(p.label, db, self.vary_term(p.term))


class GeneratorDefect(AssertionError):
    pass


def gen_db(cfg: GenConfig, rng: random.Random, observer: Optional[Label] = None) -> dbm.Database:
    observer = observer if observer is not None else pick_observer(cfg, rng)
    return Generator(cfg, rng, observer).database()


def gen_program(cfg: GenConfig, rng: random.Random, observer: Optional[Label] = None) -> Pg:
    """A closed, safe program over a valid generated database. Deterministic
    in the state of ``rng``."""
    observer = observer if observer is not None else pick_observer(cfg, rng)
    p = Generator(cfg, rng, observer).program()
    if not is_safe(p) or not dbm.validate_db(p.db).ok:
        raise GeneratorDefect(f"generated an invalid program: {p!r}")
    return p


def gen_term(cfg: GenConfig, rng: random.Random, observer: Optional[Label] = None) -> Term:
    return gen_program(cfg, rng, observer).term


def gen_low_equiv_pair(cfg: GenConfig, rng: random.Random, observer: Label) -> tuple[Pg, Program]:
    g = Generator(cfg, rng, observer)
    p1 = g.program()
    p2 = g.vary_program(p1)
    if erase_program(observer, p1, hide_fresh=cfg.hide_fresh) != erase_program(observer, p2, hide_fresh=cfg.hide_fresh):
        raise GeneratorDefect(f"pair is not low-equivalent at {observer.render()}")
    for p in (p1, p2):
        if not is_safe(p) or not dbm.validate_db(p.db).ok:
            raise GeneratorDefect(f"generated an invalid program: {p!r}")
    return p1, p2
