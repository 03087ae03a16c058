"""An executable model of a labeled IFC calculus with a labeled database:
lattices, terms, evaluation, erasure, and randomized checks of the
simulation and noninterference properties."""

from .lattice import (PUBLIC, SECRET, ConfIntegLabel, Label, PowersetLabel,
                      TwoPointLabel, check_laws, lattice_from_selector, parse_label)
from .syntax import Pg, PgHole, is_safe, is_value
from .evaluator import (DEFAULT_RULES, MUTANTS, FuelExhausted, Rules, Terminated,
                        eval_star, eval_term, step)
from .erasure import erase_db, erase_program, erase_term
from .text import parse_db, parse_program, parse_term, render_db, render_term

__version__ = "0.1.0"
