import random

import pytest

from flowcalc import database as dbm
from flowcalc.erasure import erase_program
from flowcalc.evaluator import Terminated, eval_star
from flowcalc.generate import (GenConfig, gen_db, gen_low_equiv_pair, gen_program, gen_term,
                               pick_observer)
from flowcalc.syntax import (EXCEPTION, TBind, TDelete, TFix, TInsert, TLabeled, TSelect, TToLabeled,
                             TTLabel, TUnlabel, TUpdate, children, is_safe)

LATTICES = ["twopoint", "powerset:A,B,C", "confinteg"]


def _walk(t):
    yield t
    for c in children(t):
        yield from _walk(c)


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(max_term_depth=0)
    with pytest.raises(ValueError):
        GenConfig(fuel=0)


@pytest.mark.parametrize("lattice", LATTICES)
def test_deterministic_in_seed(lattice):
    cfg = GenConfig(lattice=lattice)
    a = [gen_program(cfg, random.Random(9)) for _ in range(3)]
    b = [gen_program(cfg, random.Random(9)) for _ in range(3)]
    assert a == b
    assert gen_db(cfg, random.Random(1)) == gen_db(cfg, random.Random(1))
    assert gen_term(cfg, random.Random(2)) == gen_term(cfg, random.Random(2))


@pytest.mark.parametrize("lattice", LATTICES)
def test_programs_are_safe_and_valid(lattice):
    cfg = GenConfig(lattice=lattice)
    rng = random.Random(0)
    for _ in range(300):
        p = gen_program(cfg, rng)
        assert is_safe(p)
        assert dbm.validate_db(p.db).ok
        assert len(p.db) <= cfg.max_tables


def test_observer_never_top():
    cfg = GenConfig(lattice="powerset:A,B,C")
    rng = random.Random(0)
    top = cfg.scheme.top()
    assert all(pick_observer(cfg, rng) != top for _ in range(200))
    assert pick_observer(GenConfig(observer="{A}", lattice="powerset:A,B,C"), rng) == \
        cfg.scheme.parse("{A}")


@pytest.mark.parametrize("lattice", LATTICES)
def test_termination_rate(lattice):
    cfg = GenConfig(lattice=lattice, fuel=500, max_term_depth=5)
    rng = random.Random(123)
    n = 1_000
    done = sum(isinstance(eval_star(gen_program(cfg, rng), cfg.fuel), Terminated) for _ in range(n))
    assert done / n >= 0.95


def test_constructor_coverage():
    cfg = GenConfig()
    rng = random.Random(4)
    seen = set()
    for _ in range(500):
        seen.update(type(t) for t in _walk(gen_program(cfg, rng).term))
    for cls in (TBind, TUnlabel, TTLabel, TToLabeled, TInsert, TSelect, TDelete, TUpdate, TFix,
                TLabeled):
        assert cls in seen, cls.__name__


def test_failure_branches_are_reached():
    cfg = GenConfig()
    rng = random.Random(8)
    outcomes = [eval_star(gen_program(cfg, rng), cfg.fuel) for _ in range(500)]
    finals = [o.program.term for o in outcomes if isinstance(o, Terminated)]
    assert any(t == EXCEPTION for t in finals)
    assert any(t != EXCEPTION for t in finals)


@pytest.mark.parametrize("lattice", LATTICES)
@pytest.mark.parametrize("hide_fresh", [True, False])
def test_low_equivalent_pairs(lattice, hide_fresh):
    cfg = GenConfig(lattice=lattice, hide_fresh=hide_fresh)
    rng = random.Random(21)
    differing = 0
    for _ in range(300):
        l = pick_observer(cfg, rng)
        p1, p2 = gen_low_equiv_pair(cfg, rng, l)
        assert erase_program(l, p1, hide_fresh=hide_fresh) == erase_program(l, p2, hide_fresh=hide_fresh)
        assert is_safe(p1) and is_safe(p2)
        differing += p1 != p2
    assert differing > 100
