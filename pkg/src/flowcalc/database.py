"""The labeled in-memory database.

Tables carry a policy with a table label (guarding the table's length), a
constant label for the first field, and a label for the second field that
is computed from the first field's value. The query operators here are the
unchecked primitives; the label checks live in the evaluator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

from .lattice import Label
from .syntax import NIL, TCons, TInt, TLabeled, Term, is_db_value


# -- label functions for the second field ------------------------------------


class LabelFn:
    __slots__ = ()

    def __call__(self, v1: Term) -> Label:
        raise NotImplementedError


@dataclass(frozen=True, slots=True)
class Const(LabelFn):
    label: Label

    def __call__(self, v1):
        return self.label


@dataclass(frozen=True, slots=True)
class IfEqInt(LabelFn):
    """``then`` when the first field is ``TInt(value)``, else ``orelse``."""

    value: int
    then: LabelFn
    orelse: LabelFn

    def __call__(self, v1):
        if isinstance(v1, TInt) and v1.value == self.value:
            return self.then(v1)
        return self.orelse(v1)


@dataclass(frozen=True, slots=True)
class FnJoin(LabelFn):
    left: LabelFn
    right: LabelFn

    def __call__(self, v1):
        return self.left(v1).join(self.right(v1))


@dataclass(frozen=True, slots=True)
class FnMeet(LabelFn):
    left: LabelFn
    right: LabelFn

    def __call__(self, v1):
        return self.left(v1).meet(self.right(v1))


# -- predicates --------------------------------------------------------------


class Field(enum.Enum):
    KEY = "key"
    F1 = "f1"
    F2 = "f2"


class Pred:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class PTrue(Pred):
    pass


@dataclass(frozen=True, slots=True)
class PFalse(Pred):
    pass


@dataclass(frozen=True, slots=True)
class Eq(Pred):
    field: Field
    value: Term


@dataclass(frozen=True, slots=True)
class Lt(Pred):
    field: Field
    bound: int


@dataclass(frozen=True, slots=True)
class And(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True, slots=True)
class Or(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True, slots=True)
class Not(Pred):
    body: Pred


def pred_fields(p: Pred) -> set[Field]:
    if isinstance(p, (Eq, Lt)):
        return {p.field}
    if isinstance(p, (And, Or)):
        return pred_fields(p.left) | pred_fields(p.right)
    if isinstance(p, Not):
        return pred_fields(p.body)
    return set()


def pred_arity(p: Pred) -> int:
    """2 if the second field is examined, else 1 if the first field is,
    else 0. Key references never raise the arity."""
    used = pred_fields(p)
    if Field.F2 in used:
        return 2
    if Field.F1 in used:
        return 1
    return 0


# -- rows, tables, databases -------------------------------------------------


@dataclass(frozen=True, slots=True)
class Row:
    key: Term
    v1: Term
    v2: Term

    def get(self, f: Field) -> Term:
        if f is Field.KEY:
            return self.key
        return self.v1 if f is Field.F1 else self.v2


def eval_predicate(p: Pred, r: Row) -> bool:
    if isinstance(p, PTrue):
        return True
    if isinstance(p, PFalse):
        return False
    if isinstance(p, Eq):
        return r.get(p.field) == p.value
    if isinstance(p, Lt):
        v = r.get(p.field)
        return isinstance(v, TInt) and v.value < p.bound
    if isinstance(p, And):
        return eval_predicate(p.left, r) and eval_predicate(p.right, r)
    if isinstance(p, Or):
        return eval_predicate(p.left, r) or eval_predicate(p.right, r)
    if isinstance(p, Not):
        return not eval_predicate(p.body, r)
    raise TypeError(f"not a predicate: {p!r}")


@dataclass(frozen=True, slots=True)
class TablePolicy:
    table_label: Label
    fresh: int
    label_field1: Label
    label_field2: LabelFn


@dataclass(frozen=True, slots=True)
class Table:
    policy: TablePolicy
    rows: tuple = ()

    @property
    def label_t(self) -> Label:
        return self.policy.table_label

    @property
    def label_f1(self) -> Label:
        return self.policy.label_field1

    def label_f2(self, v1: Term) -> Label:
        return self.policy.label_field2(v1)

    @property
    def fresh_key(self) -> Term:
        return TInt(self.policy.fresh)


@dataclass(frozen=True, slots=True)
class Database:
    """Ordered ``(name, table)`` pairs with unique names."""

    tables: tuple = ()

    def __post_init__(self):
        names = [n for n, _ in self.tables]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate table names in {names}")

    def names(self) -> list[str]:
        return [n for n, _ in self.tables]

    def __iter__(self):
        return iter(self.tables)

    def __len__(self):
        return len(self.tables)

    def replace_table(self, name: str, table: Table) -> "Database":
        return Database(tuple((n, table if n == name else t) for n, t in self.tables))


EMPTY_DB = Database()


def lookup_table(db: Database, name: str) -> Optional[Table]:
    for n, t in db.tables:
        if n == name:
            return t
    return None


def _existing(db: Database, name: str) -> Table:
    t = lookup_table(db, name)
    if t is None:
        raise KeyError(f"no table named {name!r}")
    return t


def label_f2(policy: TablePolicy, v1: Term) -> Label:
    return policy.label_field2(v1)


# -- primitive operators (no label checks) -----------------------------------


def insert_row(db: Database, name: str, row: Row) -> Database:
    t = _existing(db, name)
    if row.key != t.fresh_key:
        raise ValueError(f"row key {row.key!r} is not the fresh key {t.fresh_key!r}")
    policy = replace(t.policy, fresh=t.policy.fresh + 1)
    return db.replace_table(name, Table(policy, t.rows + (row,)))


def select_rows(db: Database, name: str, p: Pred) -> Term:
    """Matching rows as a list term. Each element is the row
    ``[key, v1, v2 labeled by labelF2(v1)]`` labeled by labelF1."""
    t = _existing(db, name)
    f1 = t.label_f1
    out: Term = NIL
    for r in reversed(t.rows):
        if eval_predicate(p, r):
            inner = TCons(r.key, TCons(r.v1, TCons(TLabeled(t.label_f2(r.v1), r.v2), NIL)))
            out = TCons(TLabeled(f1, inner), out)
    return out


def delete_rows(db: Database, name: str, p: Pred) -> Database:
    t = _existing(db, name)
    kept = tuple(r for r in t.rows if not eval_predicate(p, r))
    return db.replace_table(name, Table(t.policy, kept))


def update_rows(db: Database, name: str, p: Pred, v1: Term, v2: Term) -> Database:
    t = _existing(db, name)
    rows = tuple(Row(r.key, v1, v2) if eval_predicate(p, r) else r for r in t.rows)
    return db.replace_table(name, Table(t.policy, rows))


# -- predicate labels --------------------------------------------------------


def label_pred(p: Pred, t: Table) -> Label:
    """Everything the predicate may read from ``t``."""
    arity = pred_arity(p)
    if arity == 2:
        acc = t.label_f1
        for r in t.rows:
            acc = acc.join(t.label_f2(r.v1))
        return acc
    if arity == 1:
        return t.label_f1
    return t.label_t.bottom()


def label_read(p: Pred, t: Table) -> Label:
    if pred_arity(p) == 2:
        return t.label_f1
    return t.label_t.bottom()


# -- validation --------------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.violations)


def validate_policy(t: Table, name: str = "table") -> ValidationReport:
    report = ValidationReport()
    pol = t.policy
    if not pol.label_field1.can_flow_to(pol.table_label):
        report.violations.append(
            f"{name}: labelField1 {pol.label_field1.render()} does not flow to "
            f"tableLabel {pol.table_label.render()}")
    if pol.fresh < 0:
        report.violations.append(f"{name}: negative fresh counter {pol.fresh}")
    seen = set()
    for r in t.rows:
        if not isinstance(r.key, TInt):
            report.violations.append(f"{name}: non-integer key {r.key!r}")
            continue
        k = r.key.value
        if k in seen:
            report.violations.append(f"{name}: duplicate key {k}")
        seen.add(k)
        if k >= pol.fresh:
            report.violations.append(f"{name}: key {k} is not below fresh {pol.fresh}")
        for label, v in (("v1", r.v1), ("v2", r.v2)):
            if not is_db_value(v):
                report.violations.append(f"{name}: row {k} {label} is not a database value: {v!r}")
    return report


def validate_db(db: Database) -> ValidationReport:
    report = ValidationReport()
    for n, t in db.tables:
        report.violations.extend(validate_policy(t, n).violations)
    return report


def row_count(db: Database, name: str) -> int:
    t = lookup_table(db, name)
    return 0 if t is None else len(t.rows)

