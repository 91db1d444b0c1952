"""Closed-form eight-regime scaling function and regime classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

from . import logspace as ls


class DomainError(ValueError):
    """Raised when parameters fall outside the admissible domain."""


class RegimeId(enum.IntEnum):
    Constant = 0
    Affine = 1
    LinearInterpolation = 2
    SingleTruncatedBranching = 3
    CornerLaminate = 4
    Branching = 5
    Laminate = 6
    TwoScaleBranching = 7

    @property
    def slug(self) -> str:
        return _SLUGS[self]

    @classmethod
    def parse(cls, text: str) -> "RegimeId":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for r in cls:
            if key in (r.name.lower(), r.slug.replace("_", ""), str(int(r))):
                return r
        raise ValueError(f"unknown regime {text!r}")


_SLUGS = {
    RegimeId.Constant: "constant",
    RegimeId.Affine: "affine",
    RegimeId.LinearInterpolation: "linear_interpolation",
    RegimeId.SingleTruncatedBranching: "single_truncated_branching",
    RegimeId.CornerLaminate: "corner_laminate",
    RegimeId.Branching: "branching",
    RegimeId.Laminate: "laminate",
    RegimeId.TwoScaleBranching: "two_scale_branching",
}

ALL_REGIMES: Tuple[RegimeId, ...] = tuple(RegimeId)


def _check_finite(name: str, v: float) -> None:
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise DomainError(f"{name} must be a real number, got {v!r}")
    if not math.isfinite(v):
        raise DomainError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Params:
    mu: float
    eps: float
    theta: float
    L: float

    def __post_init__(self) -> None:
        for name in ("mu", "eps", "theta", "L"):
            _check_finite(name, getattr(self, name))
        if self.mu <= 0:
            raise DomainError(f"mu must be positive, got {self.mu}")
        if self.eps <= 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not 0 < self.theta <= 0.5:
            raise DomainError(f"theta must lie in (0, 1/2], got {self.theta}")
        if self.L < 0.5:
            raise DomainError(f"L must be at least 1/2, got {self.L}")

    def replace(self, **kw) -> "Params":
        d = dict(mu=self.mu, eps=self.eps, theta=self.theta, L=self.L)
        d.update(kw)
        return Params(**d)

    def to_log(self) -> "LogParams":
        return LogParams(math.log(self.mu), math.log(self.eps), math.log(self.theta), math.log(self.L))


_LN_HALF = math.log(0.5)
_LOG_TOL = 1e-12


@dataclass(frozen=True)
class LogParams:
    """Natural logs of (mu, eps, theta, L).

    Entries are floats or symbolic tower quantities from ``logspace``; the
    latter let necessity sequences run far past double range.
    """

    log_mu: object
    log_eps: object
    log_theta: object
    log_L: object

    def __post_init__(self) -> None:
        vals = {k: ls.as_float(getattr(self, k)) for k in ("log_mu", "log_eps", "log_theta", "log_L")}
        for k, v in vals.items():
            if math.isnan(v):
                raise DomainError(f"{k} is NaN")
            if not isinstance(getattr(self, k), ls.LogQuantity) and not math.isfinite(v):
                raise DomainError(f"{k} must be finite, got {v}")
        if vals["log_theta"] > _LN_HALF + _LOG_TOL:
            raise DomainError(f"log_theta must be <= ln(1/2), got {vals['log_theta']}")
        if vals["log_L"] < _LN_HALF - _LOG_TOL:
            raise DomainError(f"log_L must be >= ln(1/2), got {vals['log_L']}")

    def to_params(self) -> Params:
        return Params(*(math.exp(ls.as_float(v)) for v in self.as_tuple()))

    def as_tuple(self) -> tuple:
        return (self.log_mu, self.log_eps, self.log_theta, self.log_L)


@dataclass(frozen=True)
class ScalingResult:
    values: Dict[RegimeId, float]
    total: float
    argmin: RegimeId
    log_space: bool = False


def _ln3(x: float) -> float:
    return math.log(3.0 + x)


def regime_terms(p: Params, r: RegimeId) -> List[float]:
    """Individual scalings of regime ``r``; their sum is the regime value."""
    mu, eps, th, L = p.mu, p.eps, p.theta, p.L
    t2 = th * th
    if r is RegimeId.Constant:
        return [t2 * L]
    if r is RegimeId.Affine:
        return [mu * t2 * _ln3(L)]
    if r is RegimeId.LinearInterpolation:
        return [mu * t2 * _ln3(L / mu), eps * th]
    if r is RegimeId.SingleTruncatedBranching:
        return [
            mu * t2 * _ln3(eps * L / (mu * t2)),
            mu * t2 * _ln3(eps / (mu * mu * t2)),
            math.sqrt(eps) * th ** 1.5,
        ]
    if r is RegimeId.CornerLaminate:
        return [mu * t2 * _ln3(eps * L / (mu * t2)), mu * t2 * _ln3(th / mu)]
    if r is RegimeId.Branching:
        return [(eps * th) ** (2.0 / 3.0) * L ** (1.0 / 3.0), eps * L]
    if r is RegimeId.Laminate:
        return [math.sqrt(mu * eps * L * _ln3(1.0 / t2)) * th, eps * L]
    if r is RegimeId.TwoScaleBranching:
        return [math.sqrt(mu * eps * L * _ln3(eps / (mu ** 3 * t2 * L))) * th, eps * L]
    raise ValueError(r)


def regime_value(p: Params, r: RegimeId) -> float:
    if not isinstance(p, Params):
        raise DomainError("regime_value expects Params")
    return math.fsum(regime_terms(p, RegimeId(r)))


def _pick(values: Dict[RegimeId, float]) -> Tuple[float, RegimeId]:
    best = None
    for r in ALL_REGIMES:
        if r in values and (best is None or values[r] < values[best]):
            best = r
    return values[best], best


def eval_scaling(p: Params) -> ScalingResult:
    values = {r: regime_value(p, r) for r in ALL_REGIMES}
    total, arg = _pick(values)
    return ScalingResult(values, total, arg)


def reduced_scaling(p: Params, excluded: Iterable[RegimeId]) -> float:
    ex = {RegimeId(r) for r in excluded}
    if len(ex) >= len(ALL_REGIMES):
        raise ValueError("cannot exclude every regime")
    return min(regime_value(p, r) for r in ALL_REGIMES if r not in ex)


# log-space evaluation -------------------------------------------------------

def regime_log_terms(lp: LogParams, r: RegimeId) -> list:
    """Logs of the individual scalings, built from ``logspace`` primitives.

    Works for float logs and for symbolic tower quantities alike.
    """
    lm, le, lt, lL = lp.as_tuple()
    lt2 = ls.scale(lt, 2)
    base = ls.add(lm, lt2)  # log(mu theta^2)
    lg = ls.log_of
    l3 = ls.ln3p
    r = RegimeId(r)
    if r is RegimeId.Constant:
        return [ls.add(lt2, lL)]
    if r is RegimeId.Affine:
        return [ls.add(base, lg(l3(lL)))]
    if r is RegimeId.LinearInterpolation:
        return [ls.add(base, lg(l3(ls.sub(lL, lm)))), ls.add(le, lt)]
    if r is RegimeId.SingleTruncatedBranching:
        x1 = ls.sub(ls.add(le, lL), base)
        x2 = ls.sub(le, ls.add(ls.scale(lm, 2), lt2))
        return [
            ls.add(base, lg(l3(x1))),
            ls.add(base, lg(l3(x2))),
            ls.add(ls.scale(le, ls.F(1, 2)), ls.scale(lt, ls.F(3, 2))),
        ]
    if r is RegimeId.CornerLaminate:
        x1 = ls.sub(ls.add(le, lL), base)
        return [ls.add(base, lg(l3(x1))), ls.add(base, lg(l3(ls.sub(lt, lm))))]
    if r is RegimeId.Branching:
        return [
            ls.add(ls.scale(ls.add(le, lt), ls.F(2, 3)), ls.scale(lL, ls.F(1, 3))),
            ls.add(le, lL),
        ]
    half = ls.F(1, 2)
    pref = ls.add(ls.scale(ls.add(ls.add(lm, le), lL), half), lt)
    if r is RegimeId.Laminate:
        arg = ls.scale(lt, -2)
        return [ls.add(pref, ls.scale(lg(l3(arg)), half)), ls.add(le, lL)]
    if r is RegimeId.TwoScaleBranching:
        arg = ls.sub(le, ls.add(ls.add(ls.scale(lm, 3), lt2), lL))
        return [ls.add(pref, ls.scale(lg(l3(arg)), half)), ls.add(le, lL)]
    raise ValueError(r)


def regime_log_value(lp: LogParams, r: RegimeId, drop: Sequence[int] = ()):
    terms = [t for i, t in enumerate(regime_log_terms(lp, r)) if i not in set(drop)]
    if not terms:
        raise ValueError("cannot drop every scaling of a regime")
    return ls.logsumexp(terms)


def log_min(items: Sequence) -> Tuple[object, int]:
    """Exact-comparison minimum over log quantities; ties go to the first."""
    best = 0
    for i in range(1, len(items)):
        if ls.as_float(ls.sub(items[i], items[best])) < 0:
            best = i
    return items[best], best


def eval_scaling_log(lp: LogParams) -> ScalingResult:
    logs = [regime_log_value(lp, r) for r in ALL_REGIMES]
    total, idx = log_min(logs)
    values = {r: ls.as_float(v) for r, v in zip(ALL_REGIMES, logs)}
    return ScalingResult(values, ls.as_float(total), ALL_REGIMES[idx], log_space=True)


def eval_scaling_log_symbolic(lp: LogParams, excluded: Iterable[RegimeId] = ()):
    """Minimum over non-excluded regimes, returned as an unevaluated log quantity."""
    ex = {RegimeId(r) for r in excluded}
    regs = [r for r in ALL_REGIMES if r not in ex]
    if not regs:
        raise ValueError("cannot exclude every regime")
    logs = [regime_log_value(lp, r) for r in regs]
    total, idx = log_min(logs)
    return total, regs[idx]


# reduction inequalities ------------------------------------------------------

def regime_reduction_check(p: Params) -> List[Tuple[str, bool, float]]:
    """Evaluate the rough-overview inequalities whose hypotheses ``p`` meets.

    Each entry is ``(id, holds, slack)`` with ``slack = rhs - lhs``.
    """
    mu, eps, th, L = p.mu, p.eps, p.theta, p.L
    t2 = th * th
    out: List[Tuple[str, bool, float]] = []

    def le(ident: str, lhs: float, rhs: float) -> None:
        slack = rhs - lhs
        tol = 1e-12 * max(abs(lhs), abs(rhs), 1e-300)
        out.append((ident, slack >= -tol, slack))

    vals = eval_scaling(p).values
    if eps >= min(t2, mu * t2):
        if mu < 1:
            le("i.a.log_L_vs_log_L_over_mu", _ln3(L), _ln3(L / mu))
            le("i.a.epsL_over_mut2_ge_L", L, eps * L / (mu * t2))
            le("i.a.epsL_ge_mut2L", mu * t2 * L, eps * L)
            le("i.a.linear_interp_le_7t2L", mu * t2 * _ln3(L / mu), 7 * t2 * L)
        else:
            le("i.b.epsL_ge_t2L", t2 * L, eps * L)
            le("i.b.epsL_over_mut2_ge_L_over_mu", L / mu, eps * L / (mu * t2))
    if eps <= min(t2, mu * t2):
        branching = (eps * th) ** (2.0 / 3.0) * L ** (1.0 / 3.0) + eps * L
        le("ii.4t2L_ge_branching", branching, 4 * t2 * L)
        if mu <= 1:
            le("ii.mu_le_1.log_L_vs_log_L_over_mu", _ln3(L), _ln3(L / mu))
        else:
            le("ii.mu_gt_1.sqrt_term_le_t2", math.sqrt(eps) * th ** 1.5, t2)
            le("ii.mu_gt_1.t2_le_mut2", t2, mu * t2)
            le("ii.mu_gt_1.epsL_over_mut2_le_L_over_mu", eps * L / (mu * t2), L / mu)
            le("ii.mu_gt_1.eps_over_mu2t2_le_1", eps / (mu * mu * t2), 1.0)
            le(
                "ii.mu_gt_1.4_linear_log_ge_min_affine_stb",
                min(vals[RegimeId.Affine], vals[RegimeId.SingleTruncatedBranching]),
                4 * mu * t2 * _ln3(L / mu),
            )
        if eps >= t2 / (L * L):
            le("ii.a.epsL_ge_branching_term", (eps * th) ** (2.0 / 3.0) * L ** (1.0 / 3.0), eps * L)
            le("ii.a.sqrt_ratio_le_epsL_over_mut2", math.sqrt(eps / (mu * mu * t2)), eps * L / (mu * t2))
        else:
            if mu >= 1:
                bterm = (eps * th) ** (2.0 / 3.0) * L ** (1.0 / 3.0)
                le("ii.b.epsL_le_branching_term", eps * L, bterm)
                le("ii.b.branching_term_le_2mut2", bterm, 2 * mu * t2)
            if 1.0 / L <= mu <= 1.0:
                le("ii.b.two_scale_arg_le_inv_t2", eps / (mu ** 3 * t2 * L), 1.0 / t2)
    return out
