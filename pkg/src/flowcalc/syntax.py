"""Terms and programs of the labeled calculus, plus the structural
predicates and substitution that the evaluator and erasure build on.

Every node is an immutable dataclass, so ``==`` is structural equality.
Nullary constructors are also exposed as module constants (``UNIT``,
``HOLE``, ...).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING, Callable

from .lattice import Label

if TYPE_CHECKING:
    from .database import Database, Pred


class Term:
    __slots__ = ()
    # positions of sub-terms among the dataclass fields; filled in below
    _term_mask: tuple = ()
    _term_fields: tuple = ()


class LabelOp(enum.Enum):
    MEET = "meet"
    JOIN = "join"
    CAN_FLOW_TO = "canflowto"


def _node(cls):
    return dataclass(frozen=True, slots=True, repr=False)(cls)


# -- pure terms --------------------------------------------------------------

@_node
class TUnit(Term):
    pass


@_node
class TInt(Term):
    value: int


@_node
class TTrue(Term):
    pass


@_node
class TFalse(Term):
    pass


@_node
class TLabel(Term):
    label: Label


@_node
class TLabeled(Term):
    label: Label
    body: Term


@_node
class TLabelOf(Term):
    body: Term


@_node
class TVar(Term):
    var: int


@_node
class TLam(Term):
    var: int
    body: Term


@_node
class TApp(Term):
    fun: Term
    arg: Term


@_node
class TFix(Term):
    body: Term


@_node
class TIf(Term):
    cond: Term
    then: Term
    orelse: Term


@_node
class TOp(Term):
    op: LabelOp
    left: Term
    right: Term


@_node
class TNil(Term):
    pass


@_node
class TCons(Term):
    head: Term
    tail: Term


@_node
class THole(Term):
    pass


# -- monadic terms -----------------------------------------------------------

@_node
class TBind(Term):
    first: Term
    then: Term


@_node
class TReturn(Term):
    body: Term


@_node
class TGetLabel(Term):
    pass


@_node
class TLIO(Term):
    body: Term


@_node
class TTLabel(Term):
    label: Term
    body: Term


@_node
class TUnlabel(Term):
    body: Term


@_node
class TException(Term):
    pass


@_node
class TToLabeled(Term):
    label: Term
    body: Term


@_node
class TInsert(Term):
    table: str
    first: Term
    second: Term


@_node
class TSelect(Term):
    table: str
    pred: "Pred"


@_node
class TDelete(Term):
    table: str
    pred: "Pred"


@_node
class TUpdate(Term):
    table: str
    pred: "Pred"
    first: Term
    second: Term


UNIT = TUnit()
TRUE = TTrue()
FALSE = TFalse()
NIL = TNil()
HOLE = THole()
GET_LABEL = TGetLabel()
EXCEPTION = TException()

TERM_CLASSES = [
    TUnit, TInt, TTrue, TFalse, TLabel, TLabeled, TLabelOf, TVar, TLam, TApp,
    TFix, TIf, TOp, TNil, TCons, THole, TBind, TReturn, TGetLabel, TLIO,
    TTLabel, TUnlabel, TException, TToLabeled, TInsert, TSelect, TDelete, TUpdate,
]

_SUBTERM_FIELDS = {
    TLabeled: ("body",), TLabelOf: ("body",), TLam: ("body",),
    TApp: ("fun", "arg"), TFix: ("body",), TIf: ("cond", "then", "orelse"),
    TOp: ("left", "right"), TCons: ("head", "tail"), TBind: ("first", "then"),
    TReturn: ("body",), TLIO: ("body",), TTLabel: ("label", "body"),
    TUnlabel: ("body",), TToLabeled: ("label", "body"),
    TInsert: ("first", "second"), TUpdate: ("first", "second"),
}

for _cls in TERM_CLASSES:
    _sub = _SUBTERM_FIELDS.get(_cls, ())
    _cls._term_mask = tuple(f.name in _sub for f in fields(_cls))
    _cls._term_fields = _sub
del _cls, _sub


def children(t: Term) -> list[Term]:
    return [getattr(t, name) for name in t._term_fields]


def map_children(t: Term, fn: Callable[[Term], Term]) -> Term:
    """Rebuild ``t`` with ``fn`` applied to each immediate sub-term.

    Leaves are returned as-is; so is ``t`` when ``fn`` changes nothing.
    """
    mask = t._term_mask
    if not t._term_fields:
        return t
    changed = False
    args = []
    for name, is_term in zip(t.__slots__, mask):
        v = getattr(t, name)
        if is_term:
            nv = fn(v)
            if nv is not v:
                changed = True
            v = nv
        args.append(v)
    return type(t)(*args) if changed else t


def _repr(self):
    from .text import render_term
    return render_term(self)


for _cls in TERM_CLASSES:
    _cls.__repr__ = _repr
del _cls


# -- programs ----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Pg:
    label: Label
    db: "Database"
    term: Term

    def __repr__(self):
        from .text import render_program
        return render_program(self)


@dataclass(frozen=True, slots=True)
class PgHole:
    db: "Database"

    def __repr__(self):
        from .text import render_program
        return render_program(self)


Program = Pg | PgHole


# -- predicates --------------------------------------------------------------

_VALUE_CLASSES = (TUnit, TInt, TTrue, TFalse, TLabel, TLabeled, TVar, TLam,
                  THole, TNil, TCons, TLIO, TException)
_DB_VALUE_CLASSES = (THole, TInt, TUnit, TLabel, TTrue, TFalse)


def is_value(t: Term) -> bool:
    return isinstance(t, _VALUE_CLASSES)


def is_db_value(t: Term) -> bool:
    return isinstance(t, _DB_VALUE_CLASSES)


def _labeled_db_value(t: Term) -> bool:
    return isinstance(t, TLabeled) and is_db_value(t.body)


def is_safe_term(t: Term) -> bool:
    if isinstance(t, (TInsert, TUpdate)):
        return _labeled_db_value(t.first) and _labeled_db_value(t.second)
    return all(is_safe_term(getattr(t, name)) for name in t._term_fields)


def is_safe(p: Program) -> bool:
    """The safety predicate: every insert/update anywhere in the program
    carries two labeled database values."""
    if isinstance(p, PgHole):
        return True
    return is_safe_term(p.term)


def free_vars(t: Term) -> set[int]:
    if isinstance(t, TVar):
        return {t.var}
    if isinstance(t, TLam):
        return free_vars(t.body) - {t.var}
    out: set[int] = set()
    for c in children(t):
        out |= free_vars(c)
    return out


def subst(x: int, replacement: Term, body: Term) -> Term:
    """Replace free ``TVar(x)`` in ``body``. ``replacement`` must be closed,
    so stopping at a rebinding lambda is all the capture handling needed."""
    if isinstance(body, TVar):
        return replacement if body.var == x else body
    if isinstance(body, TLam):
        if body.var == x:
            return body
        new = subst(x, replacement, body.body)
        return body if new is body.body else TLam(body.var, new)
    if not body._term_fields:
        return body
    return map_children(body, lambda c: subst(x, replacement, c))


def bool_term(b: bool) -> Term:
    return TRUE if b else FALSE


def term_size(t: Term) -> int:
    return 1 + sum(term_size(c) for c in children(t))
