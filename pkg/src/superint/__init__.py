"""Exact ladder, symmetry and structure-equation engine for 2D superintegrable systems."""

from .exactalg import MPoly, RFunc, Ring, pochhammer, exact_div, even_part_in
from .shiftops import ShiftOp
from .systems import SYSTEM_IDS, build_model, build_ladders
from .structure import verify, verify_structure, build_L5, stackel_map
from .reps import build_rep, check_rep

__version__ = "0.1.0"
