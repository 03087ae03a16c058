"""Security labels: the lattice interface, three concrete instances, and
an exhaustive law checker.

Label values are immutable. Each instance class implements ``can_flow_to``,
``join``, ``meet`` and ``bottom``; instances that have a greatest element
also implement ``top``. Every label renders to a canonical text form that
:func:`parse_label` reads back.

A *lattice scheme* (``TwoPointLattice``, ``PowersetLattice``,
``ConfIntegLattice``) describes a finite carrier: it enumerates elements,
parses text, and is what the generator and the command line select on.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class Label:
    """Abstract element of a bounded lattice."""

    __slots__ = ()

    def can_flow_to(self, other: "Label") -> bool:
        raise NotImplementedError

    def join(self, other: "Label") -> "Label":
        raise NotImplementedError

    def meet(self, other: "Label") -> "Label":
        raise NotImplementedError

    def bottom(self) -> "Label":
        """Least element of the lattice this label belongs to."""
        raise NotImplementedError

    def top(self) -> "Label":
        raise TypeError(f"{type(self).__name__} has no top element")

    def render(self) -> str:
        raise NotImplementedError

    def __le__(self, other):
        return self.can_flow_to(other)

    def __or__(self, other):
        return self.join(other)

    def __and__(self, other):
        return self.meet(other)


def can_flow_to(l1: Label, l2: Label) -> bool:
    return l1.can_flow_to(l2)


def join(l1: Label, l2: Label) -> Label:
    return l1.join(l2)


def meet(l1: Label, l2: Label) -> Label:
    return l1.meet(l2)


def join_all(first: Label, rest: Iterable[Label]) -> Label:
    acc = first
    for lab in rest:
        acc = acc.join(lab)
    return acc


# -- two-point ---------------------------------------------------------------


class TwoPointLabel(Label, enum.Enum):
    PUBLIC = "public"
    SECRET = "secret"

    def can_flow_to(self, other):
        return self is TwoPointLabel.PUBLIC or other is TwoPointLabel.SECRET

    def join(self, other):
        if self is TwoPointLabel.SECRET or other is TwoPointLabel.SECRET:
            return TwoPointLabel.SECRET
        return TwoPointLabel.PUBLIC

    def meet(self, other):
        if self is TwoPointLabel.PUBLIC or other is TwoPointLabel.PUBLIC:
            return TwoPointLabel.PUBLIC
        return TwoPointLabel.SECRET

    def bottom(self):
        return TwoPointLabel.PUBLIC

    def top(self):
        return TwoPointLabel.SECRET

    def render(self):
        return self.value

    def __repr__(self):
        return self.value.capitalize()

    __str__ = render
    __hash__ = enum.Enum.__hash__


PUBLIC = TwoPointLabel.PUBLIC
SECRET = TwoPointLabel.SECRET


# -- powerset ----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PowersetLabel(Label):
    """A set of principals ordered by inclusion (taint sets).

    ``universe`` is carried only so that ``top()`` is available; it is not
    part of equality or hashing.
    """

    principals: frozenset
    universe: frozenset | None = field(default=None, compare=False, hash=False)

    def __init__(self, principals: Iterable[str] = (), universe: Iterable[str] | None = None):
        object.__setattr__(self, "principals", frozenset(principals))
        object.__setattr__(self, "universe", None if universe is None else frozenset(universe))

    def _universe(self, other):
        return self.universe if self.universe is not None else other.universe

    def can_flow_to(self, other):
        return self.principals <= other.principals

    def join(self, other):
        return PowersetLabel(self.principals | other.principals, self._universe(other))

    def meet(self, other):
        return PowersetLabel(self.principals & other.principals, self._universe(other))

    def bottom(self):
        return PowersetLabel((), self.universe)

    def top(self):
        if self.universe is None:
            raise TypeError("powerset label without a declared universe has no top")
        return PowersetLabel(self.universe, self.universe)

    def render(self):
        return "{" + ",".join(sorted(self.principals)) + "}"

    def __repr__(self):
        return self.render()

    __str__ = render


# -- confidentiality x integrity --------------------------------------------


@dataclass(frozen=True, slots=True)
class ConfIntegLabel(Label):
    """Product of a confidentiality label and an integrity label.

    The integrity component is ordered dually, so the bottom of the product
    needs the top of the integrity lattice.
    """

    conf: Label
    integ: Label

    def can_flow_to(self, other):
        return self.conf.can_flow_to(other.conf) and other.integ.can_flow_to(self.integ)

    def join(self, other):
        return ConfIntegLabel(self.conf.join(other.conf), self.integ.meet(other.integ))

    def meet(self, other):
        return ConfIntegLabel(self.conf.meet(other.conf), self.integ.join(other.integ))

    def bottom(self):
        return ConfIntegLabel(self.conf.bottom(), self.integ.top())

    def top(self):
        return ConfIntegLabel(self.conf.top(), self.integ.bottom())

    def render(self):
        return f"<{self.conf.render()},{self.integ.render()}>"

    def __repr__(self):
        return self.render()

    __str__ = render


# -- text --------------------------------------------------------------------


class LabelSyntaxError(ValueError):
    pass


def _split_pair(body: str) -> tuple[str, str]:
    depth = 0
    for i, ch in enumerate(body):
        if ch in "<{":
            depth += 1
        elif ch in ">}":
            depth -= 1
        elif ch == "," and depth == 0:
            return body[:i], body[i + 1:]
    raise LabelSyntaxError(f"expected a pair <CONF,INTEG>, got <{body}>")


def parse_label(text: str, universe: Iterable[str] | None = None) -> Label:
    """Read the canonical text form of a label.

    ``universe`` is attached to powerset labels (including those nested in
    pairs) so that their ``top()`` is defined.
    """
    text = text.strip()
    if text in ("public", "secret"):
        return TwoPointLabel(text)
    if text.startswith("{") and text.endswith("}"):
        body = text[1:-1].strip()
        names = [p.strip() for p in body.split(",")] if body else []
        if any(not n or not all(c.isalnum() or c in "_-" for c in n) for n in names):
            raise LabelSyntaxError(f"bad principal set {text!r}")
        return PowersetLabel(names, universe)
    if text.startswith("<") and text.endswith(">"):
        left, right = _split_pair(text[1:-1])
        return ConfIntegLabel(parse_label(left, universe), parse_label(right, universe))
    raise LabelSyntaxError(f"unrecognised label {text!r}")


# -- schemes -----------------------------------------------------------------


class TwoPointLattice:
    name = "twopoint"

    def elements(self) -> list[Label]:
        return [PUBLIC, SECRET]

    def bottom(self) -> Label:
        return PUBLIC

    def top(self) -> Label:
        return SECRET

    def parse(self, text: str) -> Label:
        lab = parse_label(text)
        if not self.contains(lab):
            raise LabelSyntaxError(f"{text!r} is not a two-point label")
        return lab

    def contains(self, lab: Label) -> bool:
        return isinstance(lab, TwoPointLabel)

    def selector(self) -> str:
        return "twopoint"


class PowersetLattice:
    name = "powerset"

    def __init__(self, universe: Sequence[str]):
        if not universe:
            raise ValueError("powerset lattice needs at least one principal")
        self.universe = frozenset(universe)

    def elements(self) -> list[Label]:
        names = sorted(self.universe)
        out = []
        for r in range(len(names) + 1):
            for combo in itertools.combinations(names, r):
                out.append(PowersetLabel(combo, self.universe))
        return out

    def bottom(self) -> Label:
        return PowersetLabel((), self.universe)

    def top(self) -> Label:
        return PowersetLabel(self.universe, self.universe)

    def parse(self, text: str) -> Label:
        lab = parse_label(text, self.universe)
        if not self.contains(lab):
            raise LabelSyntaxError(f"{text!r} is not a subset of {{{','.join(sorted(self.universe))}}}")
        return lab

    def contains(self, lab: Label) -> bool:
        return isinstance(lab, PowersetLabel) and lab.principals <= self.universe

    def selector(self) -> str:
        return "powerset:" + ",".join(sorted(self.universe))


class ConfIntegLattice:
    name = "confinteg"

    def __init__(self, conf, integ):
        self.conf = conf
        self.integ = integ

    def elements(self) -> list[Label]:
        return [ConfIntegLabel(c, i) for c in self.conf.elements() for i in self.integ.elements()]

    def bottom(self) -> Label:
        return ConfIntegLabel(self.conf.bottom(), self.integ.top())

    def top(self) -> Label:
        return ConfIntegLabel(self.conf.top(), self.integ.bottom())

    def parse(self, text: str) -> Label:
        universe = getattr(self.conf, "universe", None) or getattr(self.integ, "universe", None)
        lab = parse_label(text, universe)
        if not self.contains(lab):
            raise LabelSyntaxError(f"{text!r} is not a label of {self.selector()}")
        return lab

    def contains(self, lab: Label) -> bool:
        return (isinstance(lab, ConfIntegLabel)
                and self.conf.contains(lab.conf) and self.integ.contains(lab.integ))

    def selector(self) -> str:
        if isinstance(self.conf, PowersetLattice):
            return "confinteg:" + ",".join(sorted(self.conf.universe))
        return "confinteg"


def lattice_from_selector(text: str):
    """``twopoint`` | ``powerset:A,B,C`` | ``confinteg`` | ``confinteg:A,B``."""
    kind, _, arg = text.partition(":")
    names = [n for n in arg.split(",") if n] if arg else []
    if kind == "twopoint" and not arg:
        return TwoPointLattice()
    if kind == "powerset":
        return PowersetLattice(names or ["A", "B", "C"])
    if kind == "confinteg":
        if names:
            return ConfIntegLattice(PowersetLattice(names), PowersetLattice(names))
        return ConfIntegLattice(TwoPointLattice(), TwoPointLattice())
    raise ValueError(f"unknown lattice selector {text!r}")


# -- laws --------------------------------------------------------------------


@dataclass
class LawViolation:
    law: str
    witness: tuple

    def __str__(self):
        return f"{self.law}: " + ", ".join(map(repr, self.witness))


@dataclass
class LawReport:
    domain_size: int
    checked: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def failed_laws(self) -> set:
        return {v.law for v in self.violations}


def close_domain(domain: Iterable[Label]) -> list[Label]:
    """Smallest superset of ``domain`` closed under join and meet."""
    elems = list(dict.fromkeys(domain))
    seen = set(elems)
    frontier = list(elems)
    while frontier:
        fresh = []
        for a in frontier:
            for b in list(elems):
                for c in (a.join(b), a.meet(b), b.join(a), b.meet(a)):
                    if c not in seen:
                        seen.add(c)
                        fresh.append(c)
        elems.extend(fresh)
        frontier = fresh
    return elems


def check_laws(domain: Iterable[Label], *, max_witnesses: int = 5) -> LawReport:
    """Check every lattice law exhaustively over the join/meet closure of
    ``domain``. Violations are recorded (up to ``max_witnesses`` per law),
    never raised."""
    dom = close_domain(domain)
    report = LawReport(domain_size=len(dom))
    if not dom:
        return report
    bot = dom[0].bottom()
    flows = {(a, b): a.can_flow_to(b) for a in dom for b in dom}
    joins = {(a, b): a.join(b) for a in dom for b in dom}
    meets = {(a, b): a.meet(b) for a in dom for b in dom}

    def law(name, items, holds):
        n = 0
        bad = 0
        for w in items:
            n += 1
            if not holds(*w):
                bad += 1
                if bad <= max_witnesses:
                    report.violations.append(LawViolation(name, w))
        report.checked[name] = n

    pairs = list(itertools.product(dom, repeat=2))
    triples = list(itertools.product(dom, repeat=3))
    quads = list(itertools.product(dom, repeat=4))

    law("lawBot", [(a,) for a in dom], lambda a: bot.can_flow_to(a))
    law("lawFlowReflexivity", [(a,) for a in dom], lambda a: flows[a, a])
    law("lawFlowAntisymmetry", pairs,
        lambda a, b: not (flows[a, b] and flows[b, a]) or a == b)
    law("lawFlowTransitivity", triples,
        lambda a, b, c: not (flows[a, b] and flows[b, c]) or flows[a, c])

    def meet_ok(z, a, b, c):
        if z != meets[a, b]:
            return True
        return (z.can_flow_to(a) and z.can_flow_to(b)
                and (not (flows[c, a] and flows[c, b]) or c.can_flow_to(z)))

    def join_ok(z, a, b, c):
        if z != joins[a, b]:
            return True
        return (a.can_flow_to(z) and b.can_flow_to(z)
                and (not (flows[a, c] and flows[b, c]) or z.can_flow_to(c)))

    law("lawMeet", quads, meet_ok)
    law("lawJoin", quads, join_ok)
    law("canNotFlowToJoin", triples,
        lambda a, b, c: flows[a, c] or not joins[a, b].can_flow_to(c))
    law("joinIff", triples,
        lambda a, b, c: (flows[a, c] and flows[b, c]) == joins[a, b].can_flow_to(c))
    return report
