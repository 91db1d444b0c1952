"""Energy of piecewise fields: two-well misfit, exterior elasticity and exact surface term."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .fields import (
    Bilinear,
    CornerFan,
    ExteriorFlowExpr,
    LaminateTip,
    Piece,
    PiecewiseField,
    half_jumps,
    jump_set,
    radial_profile,
    total_variation,
)
from .geometry import BIG
from .logspace import fsum_tree
from .scaling import DomainError, Params, eval_scaling

TWO_PI = 2.0 * math.pi


class TailMode(enum.Enum):
    analytic = "analytic"
    fitted = "fitted"


@dataclass(frozen=True)
class WellSet:
    """The two strain wells ``theta e1(.)e2`` and ``-(1-theta) e1(.)e2``."""

    theta: float

    @property
    def wells(self) -> Tuple[np.ndarray, np.ndarray]:
        t = self.theta
        return (np.array([[0.0, t / 2], [t / 2, 0.0]]), np.array([[0.0, -(1 - t) / 2], [-(1 - t) / 2, 0.0]]))

    def dist2(self, strain: np.ndarray) -> float:
        return float(min(np.sum((strain - w) ** 2) for w in self.wells))

    def slopes(self) -> Tuple[float, float]:
        return (self.theta, self.theta - 1.0)


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 8
    max_cells: int = 200000
    truncation_radius: Optional[float] = None
    tail_mode: TailMode = TailMode.analytic

    def __post_init__(self):
        if self.order < 1:
            raise DomainError("quadrature order must be at least 1")

    def radius(self, L: float) -> float:
        if self.truncation_radius is not None:
            return float(self.truncation_radius)
        return 32.0 * max(L, 1.0)


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic_martensite: float
    elastic_austenite: float
    surface: float
    tail_estimate: float
    total: float


class _Budget:
    def __init__(self, q: QuadratureSpec):
        self.left = q.max_cells

    def take(self, n: int = 1) -> None:
        self.left -= n
        if self.left < 0:
            raise DomainError("quadrature cell budget exceeded")


# ---------------------------------------------------------------------------
# integrands


def misfit_density(g1, g2, theta: float, form: str = "sym"):
    """Pointwise two-well misfit of a scalar field's gradient.

    ``sym`` is the symmetrized strain distance used by the functional;
    ``scalar`` is the ``(d1 u)^2 + min (d2 u - a)^2`` variant used in the
    construction lemmas.
    """
    w = 0.5 if form == "sym" else 1.0
    a = (g2 - theta) ** 2
    b = (g2 - theta + 1.0) ** 2
    return g1 * g1 + w * np.minimum(a, b)


def austenite_density(g1, g2, j_form: bool = False):
    if j_form:
        return g1 * g1 + 0.5 * g2 * g2
    return g1 * g1 + g2 * g2


def _piece_polys(pc: Piece, box) -> List[List[Tuple[float, float]]]:
    poly = geo.clip_box(pc.region.vertices, *box)
    return [poly] if poly else []


def _split_watershed(pc: Piece, poly, theta: float):
    """Cut a bilinear piece where ``d2 u`` crosses the watershed between the wells."""
    e = pc.expr
    if isinstance(e, Bilinear) and e.b != 0.0:
        xc = (theta - 0.5 - e.a2) / e.b
        left = geo.clip_box(poly, -BIG, xc, -BIG, BIG)
        right = geo.clip_box(poly, xc, BIG, -BIG, BIG)
        return [p for p in (left, right) if p]
    return [poly]


def _integrate_expr(pc: Piece, poly, density: Callable, order: int, budget: _Budget) -> float:
    e = pc.expr

    def f(x, y):
        g1, g2 = e.grad(x, y)
        return density(g1, g2)

    if isinstance(e, LaminateTip):
        return _adaptive_rational(poly, f, 0.0, 1.0 / e.N, 1e-2 * e.h / e.N, budget)
    if isinstance(e, CornerFan):
        return _adaptive_rational(poly, f, 1.0, 2.0 + e.gamma, 1.0, budget)
    budget.take()
    return geo.integrate_polygon(poly, f, order)


def _adaptive_rational(poly, f, x_sing, width, min_width, budget: _Budget, order: int = 16) -> float:
    """Order-16 Gauss on strips graded toward ``x_sing`` with one bisection check."""

    def run(ratio):
        strips = geo.graded_strips(poly, x_sing, width, ratio, min_width)
        budget.take(len(strips))
        return fsum_tree(geo.integrate_polygon(s, f, order) for s in strips)

    coarse = run(0.5)
    fine = run(0.25 ** 0.5)
    if abs(fine - coarse) > 1e-9 * max(abs(fine), 1e-300):
        return run(0.25)
    return fine


def _exterior_boxes(f: PiecewiseField):
    x0, x1, y0, y1 = f.work_box
    if f.mirror_axis is not None:
        return [(-BIG, x0, -BIG, BIG), (x0, x1, -BIG, y0), (x0, x1, y1, BIG)]
    return [(-BIG, x0, -BIG, BIG), (x1, BIG, -BIG, BIG), (x0, x1, -BIG, y0), (x0, x1, y1, BIG)]


def _mirror_factor(f: PiecewiseField) -> float:
    return 2.0 if f.mirror_axis is not None else 1.0


# ---------------------------------------------------------------------------
# martensite


def elastic_martensite(f: PiecewiseField, theta: float, q: QuadratureSpec = QuadratureSpec(),
                       form: str = "sym") -> float:
    budget = _Budget(q)
    box = f.work_box
    parts = []
    for pc in f.pieces:
        if pc.region.kind != "polygon":
            continue
        for poly in _piece_polys(pc, box):
            for sub in _split_watershed(pc, poly, theta):
                val = _integrate_expr(pc, sub, lambda g1, g2: misfit_density(g1, g2, theta, form), q.order, budget)
                parts.append(pc.copies * val)
    _check_coverage(f, box)
    return _mirror_factor(f) * fsum_tree(parts)


def _check_coverage(f: PiecewiseField, box) -> None:
    area = 0.0
    for pc in f.pieces:
        if pc.region.kind != "polygon":
            continue
        poly = geo.clip_box(pc.region.vertices, *box)
        if poly:
            area += pc.copies * abs(geo.signed_area(poly))
    target = (box[1] - box[0]) * (box[3] - box[2])
    if abs(area - target) > 1e-9 * max(target, 1.0):
        raise AssertionError(f"pieces cover {area!r} of the nucleus, expected {target!r}")


# ---------------------------------------------------------------------------
# austenite


def _angle_mass(a, b):
    """``int_a^b (1 - phi/2pi)^2 dphi``."""
    return (TWO_PI / 3.0) * ((1.0 - a / TWO_PI) ** 3 - (1.0 - b / TWO_PI) ** 3)


def flow_radial_density(e: ExteriorFlowExpr, r: np.ndarray, j_form: bool = False) -> np.ndarray:
    """Angular integral of the exterior-flow energy density at radius ``r`` (without theta^2)."""
    F, dF = radial_profile(r, e.alpha, e.beta, e.Lbar)
    phi0 = np.where(r > e.Lc, np.arccos(np.clip(e.Lc / np.maximum(r, 1e-300), -1.0, 1.0)), 0.0)
    A = _angle_mass(phi0, math.pi) + _angle_mass(math.pi, TWO_PI - phi0)
    B = 2.0 * (math.pi - phi0)
    if not j_form:
        return dF ** 2 * r * A + F ** 2 * B / (4.0 * math.pi ** 2 * r) + 0.25 * dF ** 2
    # symmetrized density (d1)^2 + (d2)^2/2: integrate the angular dependence numerically
    return _flow_radial_density_j(e, r, F, dF, phi0)


def _flow_radial_density_j(e, r, F, dF, phi0):
    x, w = geo.gauss_legendre(24)
    out = np.zeros_like(r)
    for lo_fn, hi_fn in ((lambda p0: p0, lambda p0: math.pi), (lambda p0: math.pi, lambda p0: TWO_PI - p0)):
        for i, rr in enumerate(r):
            lo, hi = lo_fn(phi0[i]), hi_fn(phi0[i])
            if hi <= lo:
                continue
            ph = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
            g = 1.0 - ph / TWO_PI
            fr = dF[i] * g
            fp = -F[i] / (TWO_PI * rr)
            g1 = fr * np.cos(ph) - fp * np.sin(ph)
            g2 = fr * np.sin(ph) + fp * np.cos(ph)
            out[i] += 0.5 * (hi - lo) * np.dot(g1 * g1 + 0.5 * g2 * g2, w) * rr
    return out + 0.25 * dF ** 2


def _radial_integral(e: ExteriorFlowExpr, R: float, j_form: bool, budget: _Budget, n: int = 24) -> float:
    lo = e.alpha
    if R <= lo:
        return 0.0
    cuts = sorted({c for c in (e.alpha, e.beta, e.Lbar, e.Lc, R) if lo <= c <= R})
    parts = []
    x, w = geo.gauss_legendre(n)

    def panel(a, b):
        if b <= a:
            return 0.0
        budget.take()
        if a >= e.Lc - 1e-15 * max(1.0, e.Lc) and a - e.Lc <= 1e-12 * max(1.0, e.Lc) and e.Lc > 0:
            # r = Lc + s^2 resolves the square-root behaviour of the cut angle
            s1 = math.sqrt(b - e.Lc)
            s = 0.5 * s1 * (x + 1.0)
            rr = e.Lc + s * s
            return float(0.5 * s1 * np.dot(flow_radial_density(e, rr, j_form) * 2.0 * s, w))
        rr = 0.5 * (a + b) + 0.5 * (b - a) * x
        return float(0.5 * (b - a) * np.dot(flow_radial_density(e, rr, j_form), w))

    for a, b in zip(cuts[:-1], cuts[1:]):
        # geometric panels (ratio 2) so that 1/r-type decay is resolved
        edges = [a]
        while edges[-1] < b:
            nxt = b if edges[-1] <= 0 else min(b, 2.0 * edges[-1])
            if nxt - edges[-1] < 1e-14 * b:
                nxt = b
            edges.append(nxt)
        for p0, p1 in zip(edges[:-1], edges[1:]):
            parts.append(panel(p0, p1))
    return fsum_tree(parts)


def flow_tail_bound(e: ExteriorFlowExpr, R: float) -> float:
    """Upper bound (without theta^2) of the flow energy beyond radius ``R > Lbar``."""
    return e.Lbar * (math.pi / 6.0 + 1.0 / TWO_PI) / R + e.Lbar / (32.0 * R * R)


def flow_energy(e: ExteriorFlowExpr, R: float, j_form: bool = False, budget: Optional[_Budget] = None) -> Tuple[float, float]:
    """(energy inside radius R, tail bound) of one exterior flow, without the mu factor."""
    budget = budget or _Budget(QuadratureSpec())
    R_eff = max(R, 2.0 * e.Lbar + 2.0, 2.0 * e.Lc + 2.0)
    val = e.theta ** 2 * _radial_integral(e, R_eff, j_form, budget)
    return val, e.theta ** 2 * flow_tail_bound(e, R_eff)


def elastic_austenite(f: PiecewiseField, mu: float, q: QuadratureSpec = QuadratureSpec(),
                      j_form: bool = False) -> Tuple[float, float]:
    """``mu int |grad u|^2`` outside the nucleus (truncated) and the tail bound."""
    budget = _Budget(q)
    parts = []
    tail = 0.0
    L = f.work_box[1] - f.work_box[0]
    R = q.radius(L)
    for pc in f.pieces:
        if isinstance(pc.expr, ExteriorFlowExpr):
            if q.tail_mode is TailMode.fitted:
                val, t = _fitted_flow(pc.expr, R, j_form, budget)
            else:
                val, t = flow_energy(pc.expr, R, j_form, budget)
            parts.append(val)
            tail += t
            continue
        if pc.region.kind != "polygon":
            continue
        for box in _exterior_boxes(f):
            for poly in _piece_polys(pc, box):
                val = _integrate_expr(pc, poly, lambda g1, g2: austenite_density(g1, g2, j_form), q.order, budget)
                parts.append(pc.copies * val)
    m = _mirror_factor(f)
    return m * mu * fsum_tree(parts), m * mu * tail


def _fitted_flow(e: ExteriorFlowExpr, R: float, j_form: bool, budget: _Budget) -> Tuple[float, float]:
    """Fit a power law to shell energies and extrapolate the remainder beyond ``R``."""
    R_eff = max(R, 2.0 * e.Lbar + 2.0, 2.0 * e.Lc + 2.0)
    val = e.theta ** 2 * _radial_integral(e, R_eff, j_form, budget)
    rs = R_eff * np.array([0.25, 0.5, 1.0])
    dens = flow_radial_density(e, rs, j_form)
    slope, icpt = np.polyfit(np.log(rs), np.log(dens), 1)
    if slope >= -1.0:
        raise DomainError(f"fitted radial decay exponent {slope:.3g} is not integrable")
    tail = e.theta ** 2 * math.exp(icpt) * R_eff ** (slope + 1.0) / (-(slope + 1.0))
    return val, tail


# ---------------------------------------------------------------------------
# surface


def bulk_hessian_tv(f: PiecewiseField, q: QuadratureSpec = QuadratureSpec()) -> float:
    """``int |D^2 u|`` over the nucleus from smooth (non-affine) pieces."""
    box = f.work_box
    parts = []
    budget = _Budget(q)
    for pc in f.pieces:
        if pc.region.kind != "polygon" or type(pc.expr).__name__ in ("Zero", "Affine"):
            continue
        e = pc.expr
        for poly in _piece_polys(pc, box):
            if isinstance(e, Bilinear):
                parts.append(pc.copies * math.sqrt(2.0) * abs(e.b) * abs(geo.signed_area(poly)))
                continue

            def dens(x, y, e=e):
                h11, h12, h22 = e.hess(x, y)
                return np.sqrt(h11 ** 2 + 2 * h12 ** 2 + h22 ** 2)

            budget.take()
            parts.append(pc.copies * geo.integrate_polygon(poly, dens, q.order))
    return _mirror_factor(f) * fsum_tree(parts)


def surface_tv(f: PiecewiseField, q: QuadratureSpec = QuadratureSpec()) -> float:
    """Total variation of the gradient inside the nucleus (jumps, seam and smooth part)."""
    jumps = _mirror_factor(f) * total_variation(half_jumps(f))
    seam = total_variation(f.seam) if f.mirror_axis is not None else 0.0
    return jumps + seam + bulk_hessian_tv(f, q)


def surface_exact(f: PiecewiseField, eps: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    return eps * surface_tv(f, q)


# ---------------------------------------------------------------------------
# totals


def total_energy(f: PiecewiseField, p: Params, q: QuadratureSpec = QuadratureSpec(), j_form: bool = False) -> EnergyBreakdown:
    em = elastic_martensite(f, p.theta, q)
    ea, tail = elastic_austenite(f, p.mu, q, j_form)
    sf = surface_exact(f, p.eps, q)
    return EnergyBreakdown(em, ea, sf, tail, fsum_tree([em, ea, sf]))


def energy_ratio(p: Params, q: QuadratureSpec = QuadratureSpec()) -> float:
    from .constructions import build_best

    f, _ = build_best(p)
    return total_energy(f, p, q).total / eval_scaling(p).total


# ---------------------------------------------------------------------------
# lemma-level measurements (energy / stated bound expression)


def lemma_flow_ratio(alpha: float, beta: float, Lbar: float, theta: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    from .constructions import build_exterior_flow

    f = build_exterior_flow(alpha, beta, Lbar, theta)
    val, _ = elastic_austenite(f, 1.0, q)
    return val / (theta ** 2 * (math.log(3.0 + Lbar / alpha) + (beta + alpha) / (beta - alpha)))


def lemma_laminate_ratio(N: int, h: float, theta: float, q: QuadratureSpec = QuadratureSpec()) -> float:
    from .constructions import build_boundary_laminate

    f = build_boundary_laminate(N, h, theta)
    val, _ = elastic_austenite(f, 1.0, q)
    return val / (theta ** 2 / N * math.log(3.0 + 1.0 / h))


def laminate_energy_closed_form(N: int, h: float, theta: float) -> float:
    """Exact ``int |grad v|^2`` of the boundary laminate (all N periods)."""
    a = 1.0 - h
    lg = math.log(1.0 / h)
    per = (theta ** 2 / N ** 2) * ((a / 3.0) * lg + (lg - 2.0 * a + (1.0 - h * h) / 2.0) / a) if a > 0 else 0.0
    lower = theta ** 2 * a / (2.0 * N ** 2)
    return N * (per + lower)


def lemma_branch_ratios(h: float, ell: float, N: int, theta: float, q: QuadratureSpec = QuadratureSpec()) -> Tuple[float, float]:
    """(TV / (ell + h/N), scalar elastic / (theta^2 h / (N^3 ell))) for the branching cell."""
    from .constructions import build_branch_cell

    f = build_branch_cell(h, ell, N, theta)
    tv = surface_tv(f, q)
    el = elastic_martensite(f, theta, q, form="scalar")
    return tv / (ell + h / N), el / (theta ** 2 * h / (N ** 3 * ell))


def lemma_wedge_ratio(beta_tilde: float, theta: float, eps: float = 1.0, q: QuadratureSpec = QuadratureSpec()) -> float:
    from .constructions import build_interp_wedge

    f = build_interp_wedge(beta_tilde, theta)
    val = elastic_martensite(f, theta, q, form="scalar") + eps * surface_tv(f, q)
    return val / (theta ** 3 / beta_tilde + eps * (beta_tilde + theta ** 2 / beta_tilde))
