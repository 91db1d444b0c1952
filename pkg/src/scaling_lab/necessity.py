"""Parameter sequences showing that no regime or scaling can be dropped."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from . import logspace as ls
from .logspace import F, LogQuantity, Tower
from .scaling import DomainError, LogParams, RegimeId, eval_scaling_log_symbolic, regime_log_value


class Claim(enum.Enum):
    ratio_diverges = "ratio_diverges"
    ratio_vanishes = "ratio_vanishes"


_LN2 = math.log(2.0)
_LN4 = math.log(4.0)


@dataclass(frozen=True)
class CaseSpec:
    case_id: str
    target: RegimeId
    claim: Claim
    drop: Optional[int]  # index of the scaling removed from the target regime
    variable: str  # "j" for direct j, "L" when j is L_j
    depth: int
    j_min: float
    grid_level: int  # tower level the default grid is geometric in
    grid_range: Tuple[float, float]  # range of that atom for the default grid
    monotone_from: float  # atom value (grid level) beyond which monotonicity is asserted
    maps: Callable[[Tuple[LogQuantity, ...]], Tuple]
    formula: str


def _half(tw):
    return LogQuantity.constant(tw, -_LN2)


def _maps_1(a):
    j, lj = a[0], a[1]
    h = _half(j.tower)
    return (lj, lj, h, h)


def _maps_2(a):
    L, lL = a[0], a[1]
    h = _half(L.tower)
    return (h, L, h, lL)


def _maps_3a(a):
    lL, l2 = a[1], a[2]
    th = _half(lL.tower)
    mu = lL - l2
    return (mu, mu + th, th, lL)


def _maps_3b(a):
    lL, l2, l3 = a[1], a[2], a[3]
    th = _half(lL.tower)
    mu = lL - l2
    return (mu, mu + th + 2 * l3, th, lL)


def _maps_4a(a):
    lL, l2 = a[1], a[2]
    return (-lL, l2 - 2 * lL - _LN4, _half(lL.tower), lL)


def _maps_4b(a):
    lL, l2 = a[1], a[2]
    return (-F(1, 2) * lL, l2 - F(3, 2) * lL - _LN4, _half(lL.tower), lL)


def _maps_4c(a):
    lL, l2, l3 = a[1], a[2], a[3]
    th = -F(2, 5) * l2
    mu = l3 - lL - F(1, 5) * l2
    eps = 5 * l3 - 2 * lL - l2
    return (mu, eps, th, lL)


def _maps_5a(a):
    lL, l2, l3 = a[1], a[2], a[3]
    return (-2 * lL - l2, 4 * l3 - 7 * lL - l2, -2 * lL, lL)


def _maps_5b(a):
    lL, l2 = a[1], a[2]
    return (-2 * lL, l2 - 7 * lL, -2 * lL, lL)


def _maps_6a(a):
    lj = a[1]
    h = _half(lj.tower)
    return (h, -lj, h, h)


def _maps_6b(a):
    lj = a[1]
    h = _half(lj.tower)
    return (h, -lj, h, F(2, 3) * lj)


def _maps_7a(a):
    L, lL = a[0], a[1]
    return (2 * lL - L, -L - 2 * lL, -lL, lL)


def _maps_7b(a):
    lL, l2 = a[1], a[2]
    return (-F(3, 2) * lL, -F(5, 2) * lL - F(1, 2) * l2, -F(1, 2) * l2, lL)


def _maps_8a(a):
    lL, l2 = a[1], a[2]
    return (-F(5, 2) * lL, l2 - F(17, 2) * lL, -lL, lL)


def _maps_8b(a):
    lL, l2 = a[1], a[2]
    return (-lL - l2, -2 * lL - F(3, 5) * l2, -F(1, 5) * l2, lL)


_E = math.e
_EE = math.exp(math.e)

CASES: Dict[str, CaseSpec] = {}


def _reg(*args):
    spec = CaseSpec(*args)
    CASES[spec.case_id] = spec


R = RegimeId
D, V = Claim.ratio_diverges, Claim.ratio_vanishes
_reg("1", R.Constant, D, None, "j", 3, _E, 0, (10.0, 1e6), 10.0, _maps_1,
     "theta=L=1/2, mu=eps=j")
_reg("2", R.Affine, D, None, "L", 3, _E, 0, (10.0, 1e5), 10.0, _maps_2,
     "theta=mu=1/2, eps=exp(L)")
_reg("3a", R.LinearInterpolation, V, 0, "L", 4, _EE, 2, (3.0, 1e5), 10.0, _maps_3a,
     "theta=1/2, mu=L/lnL, eps=mu*theta")
_reg("3b", R.LinearInterpolation, V, 1, "L", 4, _EE, 2, (3.0, 1e5), 10.0, _maps_3b,
     "theta=1/2, mu=L/lnL, eps=mu*theta*(lnlnL)^2")
_reg("4a", R.SingleTruncatedBranching, V, 2, "L", 3, _E, 1, (10.0, 1e14), 20.0, _maps_4a,
     "theta=1/2, mu=1/L, eps=lnL/(4L^2)")
_reg("4b", R.SingleTruncatedBranching, V, 0, "L", 4, _EE, 2, (10.0, 1e6), 100.0, _maps_4b,
     "theta=1/2, mu=L^-1/2, eps=lnL/(4L^(3/2))")
_reg("4c", R.SingleTruncatedBranching, V, 1, "L", 4, 286.0, 2, (8.0, 1e8), 10.0, _maps_4c,
     "theta=ln^-2/5 L, mu=lnlnL/(L ln^1/5 L), eps=ln^5lnL/(L^2 lnL)")
_reg("5a", R.CornerLaminate, V, 1, "L", 4, _EE, 2, (3.0, 1e8), 10.0, _maps_5a,
     "theta=L^-2, mu=1/(L^2 lnL), eps=ln^4lnL/(L^7 lnL)")
_reg("5b", R.CornerLaminate, V, 0, "L", 4, _EE, 2, (10.0, 1e5), 10.0, _maps_5b,
     "theta=mu=L^-2, eps=lnL/L^7")
_reg("6a", R.Branching, V, 0, "j", 3, _E, 1, (3.0, 1e4), 10.0, _maps_6a,
     "theta=mu=L=1/2, eps=1/j")
_reg("6b", R.Branching, V, 1, "j", 3, _E, 1, (3.0, 1e4), 10.0, _maps_6b,
     "theta=mu=1/2, L=j^(2/3), eps=1/j")
_reg("7a", R.Laminate, V, 0, "L", 3, _E, 0, (10.0, 1e7), 100.0, _maps_7a,
     "theta=1/L, mu=L^2 exp(-L), eps=exp(-L)/L^2")
_reg("7b", R.Laminate, V, 1, "L", 3, 54.6, 1, (10.0, 1e20), 20.0, _maps_7b,
     "theta=ln^-1/2 L, mu=L^-3/2, eps=1/(L^5/2 ln^1/2 L)")
_reg("8a", R.TwoScaleBranching, V, 0, "L", 3, 2.0, 0, (10.0, 1e7), 100.0, _maps_8a,
     "theta=1/L, mu=L^-5/2, eps=lnL/L^8.5")
_reg("8b", R.TwoScaleBranching, V, 1, "L", 3, math.exp(32.0), 1, (40.0, 1e14), 40.0, _maps_8b,
     "theta=ln^-1/5 L, mu=1/(L lnL), eps=1/(L^2 ln^3/5 L)")

CASE_IDS: Tuple[str, ...] = tuple(CASES)

NecessityCase = str


def _spec(case: str) -> CaseSpec:
    key = str(case).strip().lower()
    if key not in CASES:
        raise DomainError(f"unknown necessity case {case!r}; expected one of {', '.join(CASE_IDS)}")
    return CASES[key]


JLike = Union[float, Tower]


def make_tower(case: str, j: JLike) -> Tower:
    """Tower for case ``case`` at ``j`` (``j`` plays the role of L_j for L-cases)."""
    spec = _spec(case)
    if isinstance(j, Tower):
        if len(j) != spec.depth:
            raise ValueError("tower depth does not match the case")
        return j
    j = float(j)
    if not j >= spec.j_min:
        raise DomainError(f"case {spec.case_id} needs j >= {spec.j_min:g}, got {j:g}")
    return Tower.from_level(0, j, spec.depth)


def tower_at_level(case: str, level: int, value: float) -> Tower:
    spec = _spec(case)
    tw = Tower.from_level(level, value, spec.depth)
    a0 = tw.atoms[0]
    if a0 < spec.j_min and math.isfinite(a0):
        raise DomainError(f"case {spec.case_id} needs j >= {spec.j_min:g}")
    return tw


def necessity_sequence(case: str, j: JLike) -> LogParams:
    spec = _spec(case)
    tw = make_tower(spec.case_id, j)
    atoms = ls.log_atoms(tw)
    lm, le, lt, lL = spec.maps(atoms)
    return LogParams(lm, le, lt, lL)


def necessity_ratio(case: str, j: JLike) -> float:
    """Log ratio in the claimed direction (positive and growing when the claim holds).

    For ``ratio_diverges`` this is ``log(I_R / R)``; for ``ratio_vanishes``
    it is ``log(R_i / I)``, which should head to minus infinity.
    """
    spec = _spec(case)
    lp = necessity_sequence(spec.case_id, j)
    if spec.claim is Claim.ratio_diverges:
        rest, _ = eval_scaling_log_symbolic(lp, excluded=[spec.target])
        own = regime_log_value(lp, spec.target)
        return ls.as_float(ls.sub(rest, own))
    reduced = regime_log_value(lp, spec.target, drop=[spec.drop])
    total, _ = eval_scaling_log_symbolic(lp)
    return ls.as_float(ls.sub(reduced, total))


def default_grid(case: str, count: int = 25, top: Optional[float] = None) -> List[Tower]:
    spec = _spec(case)
    lo, hi = spec.grid_range
    if top is not None:
        hi = top
    if hi <= lo:
        raise ValueError("grid top must exceed its start")
    out = []
    for i in range(count):
        v = lo * (hi / lo) ** (i / (count - 1))
        out.append(tower_at_level(spec.case_id, spec.grid_level, v))
    return out


def grid_to_level(case: str, jmax: float, count: int = 25) -> List[Tower]:
    """Grid ending where atom 0 (the j or L_j value) equals ``jmax``."""
    spec = _spec(case)
    top_tw = Tower.from_level(0, jmax, spec.depth)
    top = top_tw.atoms[spec.grid_level]
    lo = spec.grid_range[0]
    if top <= lo:
        raise DomainError(f"jmax too small for case {spec.case_id}")
    return default_grid(case, count, top)


@dataclass(frozen=True)
class NecessityReport:
    case_id: str
    rows: Tuple[Tuple[Tower, LogParams, float], ...]
    monotone: bool
    final: float
    passed: bool


THRESHOLD = math.log(1e3)


def check_case(case: str, grid: Optional[Sequence[Tower]] = None) -> NecessityReport:
    spec = _spec(case)
    towers = list(grid) if grid is not None else default_grid(case)
    rows = []
    for tw in towers:
        rows.append((tw, necessity_sequence(spec.case_id, tw), necessity_ratio(spec.case_id, tw)))
    sign = 1.0 if spec.claim is Claim.ratio_diverges else -1.0
    signed = [sign * r for _, _, r in rows]
    lvl = spec.grid_level
    mono = True
    prev = None
    for (tw, _, _), s in zip(rows, signed):
        if tw.atoms[lvl] < spec.monotone_from:
            continue
        if prev is not None and s < prev - 1e-9 * max(1.0, abs(prev)):
            mono = False
        prev = s
    final = signed[-1]
    return NecessityReport(spec.case_id, tuple(rows), mono, rows[-1][2], mono and final > THRESHOLD)
