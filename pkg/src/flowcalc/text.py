"""Concrete syntax: s-expressions for terms, predicates and programs, and a
JSON document for databases.

Parsing errors carry a 1-based line and column.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from typing import Callable

from . import database as dbm
from .lattice import Label, LabelSyntaxError, parse_label
from .syntax import (
    EXCEPTION, FALSE, GET_LABEL, HOLE, NIL, TRUE, UNIT, LabelOp, Pg, PgHole,
    Program, TApp, TBind, TCons, TDelete, TException, TFalse, TFix, TGetLabel, THole,
    TIf, TInsert, TInt, TLabel, TLabelOf, TLabeled, TLam, TLIO, TNil, TOp, TReturn,
    TSelect, TTLabel, TToLabeled, TTrue, TUnit, TUnlabel, TUpdate, TVar, Term, is_db_value,
)


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0, source: str = ""):
        where = f"{source}:" if source else ""
        super().__init__(f"{where}{line}:{col}: {msg}" if line else f"{where}{msg}")
        self.line = line
        self.col = col


# -- rendering ---------------------------------------------------------------

_NULLARY = {TUnit: "unit", TTrue: "true", TFalse: "false", TNil: "nil",
            THole: "hole", TGetLabel: "getlabel", TException: "exception"}
_UNARY = {TLabelOf: "labelof", TFix: "fix", TReturn: "return", TLIO: "lio",
          TUnlabel: "unlabel"}
_BINARY = {TApp: ("app", "fun", "arg"), TCons: ("cons", "head", "tail"),
           TBind: ("bind", "first", "then"), TTLabel: ("tlabel", "label", "body"),
           TToLabeled: ("tolabeled", "label", "body")}


def _quote(name: str) -> str:
    return json.dumps(name)


def render_term(t: Term) -> str:
    cls = type(t)
    if cls in _NULLARY:
        return _NULLARY[cls]
    if cls in _UNARY:
        return f"({_UNARY[cls]} {render_term(t.body)})"
    if cls in _BINARY:
        head, a, b = _BINARY[cls]
        return f"({head} {render_term(getattr(t, a))} {render_term(getattr(t, b))})"
    if cls is TInt:
        return f"(int {t.value})"
    if cls is TLabel:
        return f"(label {t.label.render()})"
    if cls is TLabeled:
        return f"(labeled {t.label.render()} {render_term(t.body)})"
    if cls is TVar:
        return f"(var {t.var})"
    if cls is TLam:
        return f"(lam {t.var} {render_term(t.body)})"
    if cls is TIf:
        return f"(if {render_term(t.cond)} {render_term(t.then)} {render_term(t.orelse)})"
    if cls is TOp:
        return f"(op {t.op.value} {render_term(t.left)} {render_term(t.right)})"
    if cls is TInsert:
        return f"(insert {_quote(t.table)} {render_term(t.first)} {render_term(t.second)})"
    if cls is TSelect:
        return f"(select {_quote(t.table)} {render_pred(t.pred)})"
    if cls is TDelete:
        return f"(delete {_quote(t.table)} {render_pred(t.pred)})"
    if cls is TUpdate:
        return (f"(update {_quote(t.table)} {render_pred(t.pred)} "
                f"{render_term(t.first)} {render_term(t.second)})")
    raise TypeError(f"not a term: {t!r}")


def render_pred(p: dbm.Pred) -> str:
    if isinstance(p, dbm.PTrue):
        return "true"
    if isinstance(p, dbm.PFalse):
        return "false"
    if isinstance(p, dbm.Eq):
        return f"(= {p.field.value} {render_term(p.value)})"
    if isinstance(p, dbm.Lt):
        return f"(< {p.field.value} {p.bound})"
    if isinstance(p, dbm.And):
        return f"(and {render_pred(p.left)} {render_pred(p.right)})"
    if isinstance(p, dbm.Or):
        return f"(or {render_pred(p.left)} {render_pred(p.right)})"
    if isinstance(p, dbm.Not):
        return f"(not {render_pred(p.body)})"
    raise TypeError(f"not a predicate: {p!r}")


def render_program(p: Program) -> str:
    if isinstance(p, PgHole):
        return "pghole"
    return f"(pg {p.label.render()} {render_term(p.term)})"


# -- s-expression reader -----------------------------------------------------


@dataclass
class Atom:
    text: str
    line: int
    col: int
    quoted: bool = False


@dataclass
class SList:
    items: list
    line: int
    col: int


_TOKEN = re.compile(r'\s+|;[^\n]*|(?P<open>\()|(?P<close>\))|(?P<str>"(?:[^"\\]|\\.)*")|(?P<atom>[^\s()";]+)')


def read_sexprs(src: str, source: str = "") -> list:
    stack: list[SList] = [SList([], 1, 1)]
    pos = 0
    line, line_start = 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col, source)
        text = m.group(0)
        if m.group("open"):
            stack.append(SList([], line, col))
        elif m.group("close"):
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col, source)
            done = stack.pop()
            stack[-1].items.append(done)
        elif m.group("str"):
            stack[-1].items.append(Atom(json.loads(text), line, col, quoted=True))
        elif m.group("atom"):
            stack[-1].items.append(Atom(text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    if len(stack) != 1:
        open_ = stack[-1]
        raise ParseError("unclosed '('", open_.line, open_.col, source)
    return stack[0].items


class Reader:
    """Converts s-expressions to terms. ``label`` parses label text (usually
    a lattice's ``parse`` method)."""

    def __init__(self, label: Callable[[str], Label] = parse_label, source: str = ""):
        self._label_fn = label
        self.source = source

    def error(self, node, msg):
        return ParseError(msg, node.line, node.col, self.source)

    def label(self, node) -> Label:
        if not isinstance(node, Atom) or node.quoted:
            raise self.error(node, "expected a label")
        try:
            return self._label_fn(node.text)
        except LabelSyntaxError as e:
            raise self.error(node, str(e)) from None

    def integer(self, node) -> int:
        if isinstance(node, Atom) and not node.quoted and re.fullmatch(r"-?\d+", node.text):
            return int(node.text)
        raise self.error(node, "expected an integer")

    def name(self, node) -> str:
        if isinstance(node, Atom) and node.quoted:
            return node.text
        raise self.error(node, "expected a quoted table name")

    def _args(self, node, n):
        if len(node.items) != n + 1:
            raise self.error(node, f"{node.items[0].text} takes {n} argument(s)")
        return node.items[1:]

    def term(self, node) -> Term:
        if isinstance(node, Atom):
            if node.quoted:
                raise self.error(node, "unexpected string")
            leaf = {"unit": UNIT, "true": TRUE, "false": FALSE, "nil": NIL,
                    "hole": HOLE, "getlabel": GET_LABEL, "exception": EXCEPTION}.get(node.text)
            if leaf is None:
                raise self.error(node, f"unknown term {node.text!r}")
            return leaf
        if not node.items or not isinstance(node.items[0], Atom):
            raise self.error(node, "expected a constructor name")
        head = node.items[0].text
        T = self.term
        if head in ("labelof", "fix", "return", "lio", "unlabel"):
            (a,) = self._args(node, 1)
            return {"labelof": TLabelOf, "fix": TFix, "return": TReturn,
                    "lio": TLIO, "unlabel": TUnlabel}[head](T(a))
        if head in ("app", "cons", "bind", "tlabel", "tolabeled"):
            a, b = self._args(node, 2)
            return {"app": TApp, "cons": TCons, "bind": TBind, "tlabel": TTLabel,
                    "tolabeled": TToLabeled}[head](T(a), T(b))
        if head == "int":
            (a,) = self._args(node, 1)
            return TInt(self.integer(a))
        if head == "label":
            (a,) = self._args(node, 1)
            return TLabel(self.label(a))
        if head == "labeled":
            a, b = self._args(node, 2)
            return TLabeled(self.label(a), T(b))
        if head == "var":
            (a,) = self._args(node, 1)
            return TVar(self._var(a))
        if head == "lam":
            a, b = self._args(node, 2)
            return TLam(self._var(a), T(b))
        if head == "if":
            c, a, b = self._args(node, 3)
            return TIf(T(c), T(a), T(b))
        if head == "op":
            o, a, b = self._args(node, 3)
            try:
                op = LabelOp(o.text) if isinstance(o, Atom) else None
            except ValueError:
                op = None
            if op is None:
                raise self.error(o, "expected join, meet or canflowto")
            return TOp(op, T(a), T(b))
        if head == "insert":
            n, a, b = self._args(node, 3)
            return TInsert(self.name(n), T(a), T(b))
        if head in ("select", "delete"):
            n, p = self._args(node, 2)
            return (TSelect if head == "select" else TDelete)(self.name(n), self.pred(p))
        if head == "update":
            n, p, a, b = self._args(node, 4)
            return TUpdate(self.name(n), self.pred(p), T(a), T(b))
        raise self.error(node, f"unknown constructor {head!r}")

    def _var(self, node) -> int:
        v = self.integer(node)
        if v < 0:
            raise self.error(node, "variables are non-negative")
        return v

    def _field(self, node) -> dbm.Field:
        try:
            return dbm.Field(node.text)
        except (ValueError, AttributeError):
            raise self.error(node, "expected key, f1 or f2") from None

    def pred(self, node) -> dbm.Pred:
        if isinstance(node, Atom):
            if node.text == "true" and not node.quoted:
                return dbm.PTrue()
            if node.text == "false" and not node.quoted:
                return dbm.PFalse()
            raise self.error(node, f"unknown predicate {node.text!r}")
        if not node.items or not isinstance(node.items[0], Atom):
            raise self.error(node, "expected a predicate")
        head = node.items[0].text
        if head == "=":
            f, v = self._args(node, 2)
            value = self.term(v)
            if not is_db_value(value):
                raise self.error(v, "predicate constants must be database values")
            return dbm.Eq(self._field(f), value)
        if head == "<":
            f, n = self._args(node, 2)
            return dbm.Lt(self._field(f), self.integer(n))
        if head in ("and", "or"):
            a, b = self._args(node, 2)
            return (dbm.And if head == "and" else dbm.Or)(self.pred(a), self.pred(b))
        if head == "not":
            (a,) = self._args(node, 1)
            return dbm.Not(self.pred(a))
        raise self.error(node, f"unknown predicate {head!r}")

    def program(self, node, db, default_label: Label) -> Program:
        if isinstance(node, Atom) and node.text == "pghole":
            return PgHole(db)
        if isinstance(node, SList) and node.items and isinstance(node.items[0], Atom):
            head = node.items[0].text
            if head == "pghole":
                self._args(node, 0)
                return PgHole(db)
            if head == "pg":
                lab, t = self._args(node, 2)
                return Pg(self.label(lab), db, self.term(t))
        return Pg(default_label, db, self.term(node))


def _single(src: str, source: str):
    forms = read_sexprs(src, source)
    if len(forms) != 1:
        raise ParseError(f"expected exactly one form, found {len(forms)}", 1, 1, source)
    return forms[0]


def parse_term(src: str, label: Callable[[str], Label] = parse_label) -> Term:
    return Reader(label).term(_single(src, ""))


def parse_pred(src: str, label: Callable[[str], Label] = parse_label) -> dbm.Pred:
    return Reader(label).pred(_single(src, ""))


def parse_program(src: str, db: dbm.Database, default_label: Label,
                  label: Callable[[str], Label] = parse_label, source: str = "") -> Program:
    """``(pg LABEL TERM)``, ``pghole``, or a bare term run at ``default_label``."""
    return Reader(label, source).program(_single(src, source), db, default_label)


# -- database documents ------------------------------------------------------


def labelfn_to_json(f: dbm.LabelFn):
    if isinstance(f, dbm.Const):
        return {"const": f.label.render()}
    if isinstance(f, dbm.IfEqInt):
        return {"ifEqInt": [f.value, labelfn_to_json(f.then), labelfn_to_json(f.orelse)]}
    if isinstance(f, dbm.FnJoin):
        return {"join": [labelfn_to_json(f.left), labelfn_to_json(f.right)]}
    if isinstance(f, dbm.FnMeet):
        return {"meet": [labelfn_to_json(f.left), labelfn_to_json(f.right)]}
    raise TypeError(f"not a label function: {f!r}")


def labelfn_from_json(obj, label: Callable[[str], Label] = parse_label) -> dbm.LabelFn:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ParseError(f"bad label function {obj!r}")
    (kind, arg), = obj.items()
    try:
        if kind == "const":
            return dbm.Const(label(arg))
        if kind == "ifEqInt":
            n, f, g = arg
            if not isinstance(n, int):
                raise ParseError(f"ifEqInt needs an integer, got {n!r}")
            return dbm.IfEqInt(n, labelfn_from_json(f, label), labelfn_from_json(g, label))
        if kind in ("join", "meet"):
            f, g = arg
            cls = dbm.FnJoin if kind == "join" else dbm.FnMeet
            return cls(labelfn_from_json(f, label), labelfn_from_json(g, label))
    except (TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"bad label function {obj!r}: {e}") from None
    raise ParseError(f"unknown label function {kind!r}")


def db_to_json(db: dbm.Database) -> dict:
    tables = []
    for name, t in db.tables:
        pol = t.policy
        tables.append({
            "name": name,
            "policy": {
                "tableLabel": pol.table_label.render(),
                "fresh": pol.fresh,
                "labelField1": pol.label_field1.render(),
                "labelField2": labelfn_to_json(pol.label_field2),
            },
            "rows": [{"key": r.key.value if isinstance(r.key, TInt) else render_term(r.key),
                      "v1": render_term(r.v1), "v2": render_term(r.v2)} for r in t.rows],
        })
    return {"tables": tables}


def render_db(db: dbm.Database) -> str:
    return json.dumps(db_to_json(db), indent=2)


def db_digest(db: dbm.Database) -> str:
    blob = json.dumps(db_to_json(db), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def db_from_json(obj, label: Callable[[str], Label] = parse_label) -> dbm.Database:
    reader = Reader(label)

    def value(v, where):
        if isinstance(v, bool):
            raise ParseError(f"{where}: use \"true\"/\"false\" terms, not JSON booleans")
        if isinstance(v, int):
            return TInt(v)
        if isinstance(v, str):
            try:
                return reader.term(_single(v, where))
            except ParseError as e:
                raise ParseError(f"{where}: {e}") from None
        raise ParseError(f"{where}: expected a term, got {v!r}")

    if not isinstance(obj, dict) or not isinstance(obj.get("tables", []), list):
        raise ParseError("database document must be an object with a 'tables' list")
    tables = []
    for i, tab in enumerate(obj.get("tables", [])):
        try:
            name = tab["name"]
            pol = tab["policy"]
            rows = []
            for j, r in enumerate(tab.get("rows", [])):
                where = f"table {name!r} row {j}"
                rows.append(dbm.Row(value(r["key"], where), value(r["v1"], where),
                                    value(r["v2"], where)))
            try:
                tl = label(pol["tableLabel"])
                f1 = label(pol["labelField1"])
            except LabelSyntaxError as e:
                raise ParseError(f"table {name!r}: {e}") from None
            f2 = labelfn_from_json(pol["labelField2"], label)
            fresh = pol.get("fresh", len(rows))
            if not isinstance(fresh, int) or isinstance(fresh, bool):
                raise ParseError(f"table {name!r}: fresh must be an integer")
        except KeyError as e:
            raise ParseError(f"table #{i}: missing field {e}") from None
        except LabelSyntaxError as e:
            raise ParseError(f"table #{i}: {e}") from None
        tables.append((name, dbm.Table(dbm.TablePolicy(tl, fresh, f1, f2), tuple(rows))))
    try:
        return dbm.Database(tuple(tables))
    except ValueError as e:
        raise ParseError(str(e)) from None


def parse_db(src: str, label: Callable[[str], Label] = parse_label, source: str = "") -> dbm.Database:
    try:
        obj = json.loads(src)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno, source) from None
    return db_from_json(obj, label)
