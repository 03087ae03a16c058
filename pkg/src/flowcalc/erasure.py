"""Observer-indexed erasure: the part of a program or database that an
observer at label ``l`` is allowed to see, with everything else replaced by
holes.

Tables whose label does not flow to the observer lose their rows. Their
policy is kept, except that the fresh-key counter is reset to 0 when
``hide_fresh`` is set (the default): the counter moves whenever a row is
inserted, so it is as sensitive as the table's length.
"""

from __future__ import annotations

from dataclasses import replace

from .database import Database, Row, Table, TablePolicy
from .lattice import Label
from .syntax import (HOLE, Pg, PgHole, Program, TLabel, TLabeled, TTLabel, Term,
                     map_children)


def erase_term(l: Label, t: Term) -> Term:
    cls = type(t)
    if cls is TLabeled:
        if t.label.can_flow_to(l):
            body = erase_term(l, t.body)
            return t if body is t.body else TLabeled(t.label, body)
        return TLabeled(t.label, HOLE)
    if cls is TTLabel and type(t.label) is TLabel:
        if t.label.label.can_flow_to(l):
            body = erase_term(l, t.body)
            return t if body is t.body else TTLabel(t.label, body)
        return TTLabel(t.label, HOLE)
    if not t._term_fields:
        return t
    return map_children(t, lambda c: erase_term(l, c))


def erase_row(l: Label, policy: TablePolicy, r: Row) -> Row:
    if not policy.label_field1.can_flow_to(l):
        return Row(r.key, HOLE, HOLE)
    if not policy.label_field2(r.v1).can_flow_to(l):
        return Row(r.key, erase_term(l, r.v1), HOLE)
    return Row(r.key, erase_term(l, r.v1), erase_term(l, r.v2))


def erase_table(l: Label, t: Table, *, hide_fresh: bool = True) -> Table:
    tp = t.policy
    if not tp.table_label.can_flow_to(l):
        if hide_fresh and tp.fresh != 0:
            tp = replace(tp, fresh=0)
        return Table(tp, ())
    return Table(tp, tuple(erase_row(l, tp, r) for r in t.rows))


def erase_db(l: Label, db: Database, *, hide_fresh: bool = True) -> Database:
    return Database(tuple((n, erase_table(l, t, hide_fresh=hide_fresh)) for n, t in db.tables))


def erase_program(l: Label, p: Program, *, hide_fresh: bool = True) -> Program:
    db = erase_db(l, p.db, hide_fresh=hide_fresh)
    if isinstance(p, PgHole) or not p.label.can_flow_to(l):
        return PgHole(db)
    return Pg(p.label, db, erase_term(l, p.term))
