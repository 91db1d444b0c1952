"""Diagonal slices, the near-affine and matched-endpoint slice sets, and the exterior path bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import geometry as geo
from .fields import PiecewiseField, evaluate, evaluate_gradient
from .scaling import DomainError, Params

XI = (0.25, 1.0)
C_FRACTION = 1.0 / 16.0
P_FRACTION = 2.0 ** -7


@dataclass(frozen=True)
class SliceDirection:
    xi: Tuple[float, float] = XI

    def __post_init__(self):
        if tuple(self.xi) != XI:
            raise DomainError("the slice direction is fixed to (1/4, 1)")


@dataclass(frozen=True)
class SliceProfile:
    x1: float
    s: np.ndarray
    v: np.ndarray

    def derivative(self) -> np.ndarray:
        return np.gradient(self.v, self.s)


@dataclass(frozen=True)
class SliceSets:
    x1: np.ndarray
    C_mask: np.ndarray
    P_mask: np.ndarray
    p_measure: float
    deviation: np.ndarray
    endpoint_gap: np.ndarray


@dataclass(frozen=True)
class PathSample:
    x1: float
    endpoint_gap: float
    path_integral: float
    path_bound: float


@dataclass(frozen=True)
class BulkTerms:
    log_term: float
    p_term: float
    path_energy_samples: List[PathSample]


def _half_length(f: PiecewiseField) -> float:
    x0, x1, _, _ = f.nucleus
    return (x1 - x0) / 2.0 if f.mirror_axis is not None else (x1 - x0)


def slice(f: PiecewiseField, x1: float, n: int = 512) -> SliceProfile:
    """``v(s) = u((x1, 0) + s xi) . xi / (xi1 xi2)`` at ``n`` points of [0, 1]."""
    if n < 16:
        raise DomainError("a slice needs at least 16 samples")
    full = 2.0 * _half_length(f) if f.mirror_axis is not None else _half_length(f)
    if not (0.0 < x1 < full - XI[0]):
        raise DomainError(f"x1 = {x1!r} is outside (0, {full - XI[0]!r})")
    s = np.linspace(0.0, 1.0, n)
    u1 = evaluate(f, x1 + XI[0] * s, XI[1] * s)
    # u2 vanishes for every shipped field
    v = (u1 * XI[0]) / (XI[0] * XI[1])
    return SliceProfile(x1, s, v)


def slice_deviation(v: np.ndarray, s: np.ndarray, theta: float) -> float:
    """Sup distance from the best line of slope theta or theta - 1."""
    best = math.inf
    for a in (theta, theta - 1.0):
        r = v - a * s
        best = min(best, 0.5 * float(r.max() - r.min()))
    return best


def classify_slices(f: PiecewiseField, p: Params, grid_n: int = 2048, n: int = 512) -> SliceSets:
    L = p.L
    if L <= XI[0]:
        raise DomainError("L must exceed 1/4")
    width = L - XI[0]
    x1 = (np.arange(grid_n) + 0.5) * width / grid_n
    s = np.linspace(0.0, 1.0, n)
    X = x1[:, None] + XI[0] * s[None, :]
    Y = np.broadcast_to(XI[1] * s[None, :], X.shape)
    V = evaluate(f, X.ravel(), Y.ravel()).reshape(X.shape)
    dev = np.empty(grid_n)
    for a_i, a in enumerate((p.theta, p.theta - 1.0)):
        R = V - a * s[None, :]
        d = 0.5 * (R.max(axis=1) - R.min(axis=1))
        dev = d if a_i == 0 else np.minimum(dev, d)
    gap = np.abs(V[:, -1] - V[:, 0])
    C = dev < C_FRACTION * p.theta
    P = gap <= P_FRACTION * p.theta
    if np.any(C & P):
        raise AssertionError("near-affine and matched-endpoint slices must be disjoint")
    return SliceSets(x1, C, P, float(P.mean()) * width, dev, gap)


def _segments(x1: float):
    a, b = XI
    pts = [(x1 + a, 1.0), (x1 + a, 1.0 + x1), (-x1, 1.0 + x1), (-x1, -x1), (x1, -x1), (x1, 0.0)]
    return list(zip(pts[:-1], pts[1:]))


def _segment_energy(f: PiecewiseField, a, b, panels: int, order: int = 16) -> float:
    ln = math.hypot(b[0] - a[0], b[1] - a[1])
    if ln == 0:
        return 0.0
    x, w = geo.gauss_legendre(order)
    t = ((np.arange(panels)[:, None] + 0.5 * (x[None, :] + 1.0)) / panels).ravel()
    ww = np.tile(w, panels) * 0.5 / panels
    px = a[0] + t * (b[0] - a[0])
    py = a[1] + t * (b[1] - a[1])
    g1, g2 = evaluate_gradient(f, px, py)
    return ln * float(np.dot(g1 * g1 + g2 * g2, ww))


def path_integral(f: PiecewiseField, x1: float, mu: float, rtol: float = 1e-6) -> float:
    """``mu int_S |grad u1|^2`` along the six-vertex exterior arc, refined until two levels agree."""
    total = 0.0
    for a, b in _segments(x1):
        panels = 8
        prev = _segment_energy(f, a, b, panels)
        while True:
            panels *= 2
            cur = _segment_energy(f, a, b, panels)
            if abs(cur - prev) <= rtol * max(abs(cur), 1e-300) or panels >= 4096:
                break
            prev = cur
        total += cur
    return mu * total


def bulk_bound_terms(f: PiecewiseField, p: Params, grid_n: int = 2048, path_samples: int = 32) -> BulkTerms:
    sets = classify_slices(f, p, grid_n)
    log_term = p.mu * p.theta ** 2 * math.log((p.L + 1.0 - XI[0]) / (sets.p_measure + 1.0))
    p_term = min(p.eps, p.theta ** 2) * sets.p_measure
    outside = np.flatnonzero(~sets.P_mask)
    picks = outside[np.linspace(0, outside.size - 1, min(path_samples, outside.size)).astype(int)] if outside.size else []
    samples = [path_sample(f, p, float(sets.x1[i])) for i in picks]
    return BulkTerms(log_term, p_term, samples)


def path_sample(f: PiecewiseField, p: Params, x1: float) -> PathSample:
    u_top = float(evaluate(f, [x1 + XI[0]], [1.0])[0])
    u_bot = float(evaluate(f, [x1], [0.0])[0])
    gap = abs(u_top - u_bot)
    val = path_integral(f, x1, p.mu)
    bound = 0.125 * p.mu * gap * gap / (1.0 + x1)
    return PathSample(x1, gap, val, bound)


def slope_misfit_excess(f: PiecewiseField, p: Params, x1: float, n: int = 512) -> float:
    """Max over the slice of ``min |v' - a| - 5 * pointwise misfit`` (nonpositive when the estimate holds)."""
    s = (np.arange(n) + 0.5) / n
    g1, g2 = evaluate_gradient(f, x1 + XI[0] * s, XI[1] * s)
    dv = (XI[0] / XI[1]) * g1 + g2
    worst = -math.inf
    th = p.theta
    slope_gap = np.minimum(np.abs(dv - th), np.abs(dv - th + 1.0))
    misfit = np.minimum(np.sqrt(g1 ** 2 + 0.5 * (g2 - th) ** 2), np.sqrt(g1 ** 2 + 0.5 * (g2 - th + 1.0) ** 2))
    worst = max(worst, float(np.max(slope_gap - 5.0 * misfit)))
    return worst
