"""Finite-dimensional representations from the one-variable models.

Basis vectors are delta functions at the lattice points of the model index,
spaced by the ladder step q.  Vector j (j = 0..M) sits at index value
``grid[j]``; the raising operator maps j to j+1 and must annihilate j = M, the
lowering operator maps j to j-1 and must annihilate j = 0.

Matrices are exact (FLINT ``fmpq_mat``), column j holding the image of basis
vector j, so the matrix of AB (B first) is the product of the matrices.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence

import flint

from .exactalg import RFunc, rat
from .shiftops import ShiftOp
from .structure import EQUATIONS, StructureReport, evaluate_equations, verify_structure
from .systems import SystemModel, build_model


class InadmissibleOffsets(ValueError):
    pass


class DegenerateParameters(ValueError):
    """The chosen parameters make the spectrum degenerate or hit a pole."""


REP_SYSTEMS = ("caged", "ttw")
PARAM_NAMES = {"caged": ("a1", "a2", "mu"), "ttw": ("a", "b", "omega")}


def _qq(x) -> flint.fmpq:
    x = rat(x)
    return flint.fmpq(x.numerator, x.denominator)


def _frac(x: flint.fmpq) -> Fraction:
    return Fraction(int(x.p), int(x.q))


@dataclass
class Representation:
    system: str
    p: int
    q: int
    params: Dict[str, Fraction]
    offsets: Dict[str, Fraction]
    dimension: int
    grid: List[Fraction]
    energy: Fraction
    energy_closed_form: Fraction
    separation_spectrum: List[Fraction]
    separation_closed_form: List[Fraction]
    values: Dict[str, Fraction]
    matrices: Dict[str, flint.fmpq_mat] = field(default_factory=dict)
    boundary: Dict[str, bool] = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.dimension - 1

    def energy_matches(self) -> bool:
        return self.energy == self.energy_closed_form

    def spectrum_matches(self) -> bool:
        return self.separation_spectrum == self.separation_closed_form

    def spectra_table(self) -> List[dict]:
        sep = "L1" if self.system == "caged" else "L2"
        return [
            {"N": j, "index": str(g), sep: str(v), "closed_form": str(c)}
            for j, (g, v, c) in enumerate(zip(self.grid, self.separation_spectrum, self.separation_closed_form))
        ]

    def to_json(self, with_matrices: bool = False) -> dict:
        out = {
            "system": self.system,
            "p": self.p,
            "q": self.q,
            "parameters": {k: str(v) for k, v in sorted(self.params.items())},
            "offsets": {k: str(v) for k, v in sorted(self.offsets.items())},
            "dimension": self.dimension,
            "energy": str(self.energy),
            "energy_closed_form": str(self.energy_closed_form),
            "energy_matches": self.energy_matches(),
            "spectrum": self.spectra_table(),
            "spectrum_matches": self.spectrum_matches(),
            "boundary": dict(sorted(self.boundary.items())),
        }
        if self.system == "ttw":
            out["energy_from_boundary"] = "2 omega (2pM + 2p0 + 2k q0 + k(a+b+1) + 1)"
        if with_matrices:
            out["matrices"] = {k: matrix_text(m) for k, m in sorted(self.matrices.items())}
        return out


def matrix_text(m: flint.fmpq_mat) -> List[List[str]]:
    return [[str(_frac(m[i, j])) for j in range(m.ncols())] for i in range(m.nrows())]


# ---------------------------------------------------------------------------
# lattice data


def _lattice(model: SystemModel, params: Mapping[str, Fraction], p0: int, q0: int, M: int):
    """Grid of index values, the value of u, and the closed forms."""
    p, q, k = model.p, model.q, model.k
    if not (0 <= p0 < p and 0 <= q0 < q):
        raise InadmissibleOffsets(f"need 0 <= p0 < {p} and 0 <= q0 < {q}, got p0={p0}, q0={q0}")
    if M < 0:
        raise InadmissibleOffsets(f"M must be nonnegative, got {M}")
    if model.id == "caged":
        a1, a2, mu = (params[x] for x in ("a1", "a2", "mu"))
        # top: (t+1)_q vanishes; bottom: (u - k t + 1)_p vanishes
        t0 = Fraction(-1 - q0 - M * q)
        grid = [t0 + j * q for j in range(M + 1)]
        u = k * t0 - 1 - p0
        E_closed = 2 * M * p * q * mu - 2 * mu * (p * (a1 - q0) + q * (a2 - p0))
        N1 = M
        sep_closed = [4 * mu * p * q * (N1 - N) - 2 * mu * p * (a1 - 2 * q0 - 1) for N in range(M + 1)]
        offsets = {"t0": t0, "p0": Fraction(p0), "q0": Fraction(q0), "N0": Fraction(0), "N1": Fraction(M), "u": u}
        return grid, u, E_closed, sep_closed, offsets
    a, b, om = (params[x] for x in ("a", "b", "omega"))
    c = (a + b + 1) / 2
    # top: (s + (a+b+1)/2)_q vanishes; bottom: (u + k(-s + (a+b+1)/2) + 1)_p vanishes
    s0 = -q0 - M * q - c
    grid = [s0 + j * q for j in range(M + 1)]
    u = -p0 - 1 - k * (q0 + M * q + a + b + 1)
    E_closed = 2 * om * (2 * p * M + a + b + 2 * k * q0 + 2 * p0 + 2)
    N1 = M
    sep_closed = [-4 * k * k * ((N1 - N) * q + c + q0) ** 2 for N in range(M + 1)]
    offsets = {"s0": s0, "p0": Fraction(p0), "q0": Fraction(q0), "N0": Fraction(0), "N1": Fraction(M), "u": u}
    return grid, u, E_closed, sep_closed, offsets


def _point(model: SystemModel, params, u, index_value) -> Dict[str, Fraction]:
    vals = dict(params)
    vals["u"] = u
    vals[model.index] = index_value
    return vals


def instantiate(op: ShiftOp, model: SystemModel, grid: Sequence[Fraction], scalars: Mapping[str, Fraction]) -> flint.fmpq_mat:
    """Matrix of a shift operator on the delta basis at the grid points.

    Shifts must be multiples of the grid step; a nonzero coefficient that would
    leave the grid means the space is not invariant and raises.
    """
    n = len(grid)
    step = model.step
    mat = flint.fmpq_mat(n, n)
    for m, c in op.terms.items():
        if m % step:
            raise ValueError(f"shift {m} is not a multiple of the grid step {step}")
        d = m // step
        for j, x in enumerate(grid):
            vals = dict(scalars)
            vals[model.index] = x
            try:
                v = c.evaluate(vals)
            except ZeroDivisionError as exc:
                raise DegenerateParameters(f"coefficient has a pole at {model.index}={x}") from exc
            if v == 0:
                continue
            i = j + d
            if not 0 <= i < n:
                raise ValueError(f"operator leaves the representation space at j={j}, shift {m}")
            mat[i, j] = _qq(v)
    return mat


class MatrixBackend:
    """Backend for the equation tables: exact matrices, scalars are Fractions."""

    def add(self, x, y):
        return x + y

    def mul(self, x, y):
        return x * y

    def scale(self, x, c):
        return x * _qq(c)

    def inv_scalar(self, c):
        return 1 / rat(c)

    def is_zero(self, x) -> bool:
        return all(e == 0 for e in x.entries())


def random_params(system: str, rng: random.Random) -> Dict[str, Fraction]:
    """Generic rational parameters (nonintegral, nonzero)."""

    def r():
        while True:
            v = Fraction(rng.randint(-40, 40), rng.randint(2, 17))
            if v.denominator != 1:
                return v

    if system == "caged":
        return {"a1": r(), "a2": r(), "mu": abs(r())}
    return {"a": r(), "b": r(), "omega": abs(r())}


def build_rep(model: SystemModel, params: Mapping[str, object], p0: int, q0: int, M: int,
              report: Optional[StructureReport] = None) -> Representation:
    if model.id not in REP_SYSTEMS:
        raise ValueError(f"representations are built for {', '.join(REP_SYSTEMS)}, not {model.id}")
    names = PARAM_NAMES[model.id]
    missing = [x for x in names if x not in params]
    if missing:
        raise ValueError(f"missing parameters {missing}")
    par = {x: rat(params[x]) for x in names}
    grid, u, E_closed, sep_closed, offsets = _lattice(model, par, p0, q0, M)
    scal = dict(par, u=u)
    report = report or verify_structure(model, with_L5=False)

    sep = [model.separation_value().evaluate(_point(model, par, u, x)) for x in grid]
    if len(set(sep)) != len(sep):
        raise DegenerateParameters("separation spectrum is not simple for these parameters")
    E = model.energy_value().evaluate(scal)

    mats = {name: instantiate(op, model, grid, scal) for name, op in report.generators.items()}
    raise_m, lower_m = mats["Xp"], mats["Xm"]
    n = M + 1
    for j in range(M):
        if raise_m[j + 1, j] == 0 or lower_m[j, j + 1] == 0:
            raise DegenerateParameters(f"a ladder coefficient vanishes inside the grid (j={j})")
    top = report.ladders.raise_.coeff(model.step).evaluate(_point(model, par, u, grid[-1]))
    bottom = report.ladders.lower.coeff(-model.step).evaluate(_point(model, par, u, grid[0]))
    boundary = {
        "raise annihilates top": top == 0,
        "lower annihilates bottom": bottom == 0,
        "raise single off-diagonal": _band(raise_m) <= {1},
        "lower single off-diagonal": _band(lower_m) <= {-1},
        "L3 band within one step": _band(mats["L3"]) <= {-1, 0, 1},
        "L4 band within one step": _band(mats["L4"]) <= {-1, 0, 1},
    }
    return Representation(
        system=model.id, p=model.p, q=model.q, params=par, offsets=offsets, dimension=n,
        grid=list(grid), energy=E, energy_closed_form=E_closed,
        separation_spectrum=sep, separation_closed_form=sep_closed,
        values=scal, matrices=mats, boundary=boundary,
    )


def _band(m: flint.fmpq_mat) -> set:
    out = set()
    for i in range(m.nrows()):
        for j in range(m.ncols()):
            if m[i, j] != 0:
                out.add(i - j)
    return out


@dataclass
class RepCheck:
    rep: Representation
    equations: Dict[str, bool]
    skipped: List[str]

    @property
    def ok(self) -> bool:
        return all(self.equations.values()) and all(self.rep.boundary.values())

    def to_json(self) -> dict:
        return {
            "representation": self.rep.to_json(),
            "equations": dict(sorted(self.equations.items())),
            "skipped_unverified": sorted(self.skipped),
            "status": "verified" if self.ok else "failed",
        }


def check_rep(rep: Representation, report: StructureReport) -> RepCheck:
    """Every symbolically verified equation must hold for the matrices."""
    if (rep.system, rep.p, rep.q) != (report.system, report.p, report.q):
        raise ValueError("representation and report belong to different systems")
    model = report.model
    scal = {}
    for name, v in report.scalars.items():
        scal[name] = v.evaluate(rep.values) if isinstance(v, RFunc) else rat(v)
    eqs = EQUATIONS[model.id](model.p, model.q)
    verified = {e.name for e in report.equations if e.ok}
    todo = [e for e in eqs if e.name in verified]
    skipped = [e.name for e in eqs if e.name not in verified]
    bk = MatrixBackend()
    res = evaluate_equations(todo, rep.matrices, scal, bk, model.id, model.p, model.q)
    return RepCheck(rep=rep, equations={e.name: bk.is_zero(r) for e, r in res}, skipped=skipped)


def sweep(system: str, p: int, q: int, n_sets: int = 5, M: int = 2, seed: int = 0) -> List[RepCheck]:
    """Representations at ``n_sets`` random parameter sets and random admissible offsets."""
    model = build_model(system, p, q)
    report = verify_structure(model, with_L5=False)
    rng = random.Random(f"{system}:{p}:{q}:{seed}")
    out = []
    while len(out) < n_sets:
        params = random_params(model.id, rng)
        p0, q0 = rng.randrange(p), rng.randrange(q)
        try:
            rep = build_rep(model, params, p0, q0, M, report)
        except DegenerateParameters:
            continue
        out.append(check_rep(rep, report))
    return out


__all__ = [
    "Representation",
    "RepCheck",
    "InadmissibleOffsets",
    "DegenerateParameters",
    "build_rep",
    "check_rep",
    "instantiate",
    "random_params",
    "sweep",
    "MatrixBackend",
]
