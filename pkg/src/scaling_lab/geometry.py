"""Polygon clipping and Gauss quadrature on convex polygons."""

from __future__ import annotations

import functools
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

Point2 = Tuple[float, float]
BIG = 1e300


def signed_area(poly: Sequence[Point2]) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def ccw(poly: Sequence[Point2]) -> Tuple[Point2, ...]:
    pts = dedupe(poly)
    if len(pts) >= 3 and signed_area(pts) < 0:
        pts = pts[::-1]
    return tuple((float(x), float(y)) for x, y in pts)


def dedupe(poly: Sequence[Point2], tol: float = 0.0) -> List[Point2]:
    out: List[Point2] = []
    for p in poly:
        if not out or abs(out[-1][0] - p[0]) > tol or abs(out[-1][1] - p[1]) > tol:
            out.append((p[0], p[1]))
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= tol and abs(out[0][1] - out[-1][1]) <= tol:
        out.pop()
    return out


def clip_halfplane(poly: Sequence[Point2], a: float, b: float, c: float) -> List[Point2]:
    """Keep the part of ``poly`` where ``a*x + b*y <= c`` (Sutherland-Hodgman step)."""
    out: List[Point2] = []
    n = len(poly)
    if n == 0:
        return out
    for i in range(n):
        p = poly[i]
        q = poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return dedupe(out)


def clip_box(poly: Sequence[Point2], x0: float, x1: float, y0: float, y1: float) -> List[Point2]:
    out = list(poly)
    if x0 > -BIG:
        out = clip_halfplane(out, -1.0, 0.0, -x0)
    if x1 < BIG:
        out = clip_halfplane(out, 1.0, 0.0, x1)
    if y0 > -BIG:
        out = clip_halfplane(out, 0.0, -1.0, -y0)
    if y1 < BIG:
        out = clip_halfplane(out, 0.0, 1.0, y1)
    if len(out) < 3 or abs(signed_area(out)) <= 0.0:
        return []
    return out


def clip_segment_box(a: Point2, b: Point2, box) -> Optional[Tuple[float, float]]:
    """Liang-Barsky: parameter range of segment ``a->b`` inside the closed box."""
    x0, x1, y0, y1 = box
    dx, dy = b[0] - a[0], b[1] - a[1]
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, a[0] - x0), (dx, x1 - a[0]), (-dy, a[1] - y0), (dy, y1 - a[1])):
        if p == 0:
            if q < 0:
                return None
            continue
        r = q / p
        if p < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return None
    if t1 - t0 <= 0:
        return None
    return t0, t1


def point_in_convex(poly: Sequence[Point2], x: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray:
    """Membership in a closed convex ccw polygon, with absolute slack ``tol``."""
    inside = np.ones(np.shape(x), dtype=bool)
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        ln = math.hypot(ex, ey)
        if ln == 0:
            continue
        cross = (ex * (y - y0) - ey * (x - x0)) / ln
        inside &= cross >= -tol
    return inside


def bbox(poly: Sequence[Point2]) -> Tuple[float, float, float, float]:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return min(xs), max(xs), min(ys), max(ys)


@functools.lru_cache(maxsize=64)
def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@functools.lru_cache(maxsize=64)
def triangle_rule(order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapsed tensor Gauss rule on the unit triangle (exact to degree 2*order-1)."""
    x, w = gauss_legendre(order)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    # Gauss-Jacobi would be marginally cheaper; one extra point absorbs the (1-u) weight
    xv, wv = gauss_legendre(order + 1)
    v = 0.5 * (xv + 1.0)
    wv = 0.5 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    s = U.ravel()
    t = (V * (1.0 - U)).ravel()
    wt = (WU * WV * (1.0 - U)).ravel()
    return s, t, wt


def triangles(poly: Sequence[Point2]) -> List[Tuple[Point2, Point2, Point2]]:
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


def quad_points(poly: Sequence[Point2], order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    s, t, wt = triangle_rule(order)
    xs, ys, ws = [], [], []
    for a, b, c in triangles(poly):
        jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        if jac == 0:
            continue
        xs.append(a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]))
        ys.append(a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]))
        ws.append(wt * jac)
    if not xs:
        z = np.zeros(0)
        return z, z, z
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)


def integrate_polygon(poly: Sequence[Point2], func: Callable[[np.ndarray, np.ndarray], np.ndarray], order: int) -> float:
    x, y, w = quad_points(poly, order)
    if w.size == 0:
        return 0.0
    return float(np.dot(func(x, y), w))


def graded_strips(poly: Sequence[Point2], x_sing: float, width: float, ratio: float = 0.5,
                  min_width: float = 0.0) -> List[List[Point2]]:
    """Split ``poly`` into vertical strips refined geometrically toward ``x = x_sing``."""
    xmin, xmax, _, _ = bbox(poly)
    cuts = []
    side = 1.0 if abs(xmax - x_sing) < abs(xmin - x_sing) else -1.0
    d = width
    while d > min_width and d > 1e-300:
        cuts.append(x_sing - side * d)
        d *= ratio
    cuts = sorted(c for c in cuts if xmin < c < xmax)
    edges = [xmin] + cuts + [xmax]
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece = clip_box(poly, lo, hi, -BIG, BIG)
        if piece:
            out.append(piece)
    return out


def integrate_1d(func: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int = 24) -> float:
    if b <= a:
        return 0.0
    x, w = gauss_legendre(n)
    xm = 0.5 * (a + b) + 0.5 * (b - a) * x
    return float(0.5 * (b - a) * np.dot(func(xm), w))


def integrate_sqrt_quadratic(a: float, b: float, c: float) -> float:
    """Exact ``int_0^1 sqrt(a t^2 + b t + c) dt`` for a nonnegative quadratic."""
    if a <= 1e-300 * max(abs(b), abs(c), 1.0):
        if abs(b) <= 1e-300:
            return math.sqrt(max(c, 0.0))
        # sqrt of a linear function
        f0, f1 = max(c, 0.0), max(b + c, 0.0)
        return (2.0 / (3.0 * b)) * (f1 ** 1.5 - f0 ** 1.5)

    def prim(t: float) -> float:
        q = max(a * t * t + b * t + c, 0.0)
        sq = math.sqrt(q)
        disc = 4 * a * c - b * b
        u = 2 * a * t + b
        term1 = u * sq / (4 * a)
        if disc <= 1e-14 * max(b * b, 4 * a * c, 1e-300):
            # perfect square: sqrt(a)|t + b/2a|
            return math.sqrt(a) * 0.5 * (t + b / (2 * a)) * abs(t + b / (2 * a))
        arg = u + 2 * math.sqrt(a) * sq
        term2 = disc / (8 * a ** 1.5) * math.log(arg) if arg > 0 else 0.0
        return term1 + term2

    disc = 4 * a * c - b * b
    if disc <= 1e-14 * max(b * b, 4 * a * c, 1e-300):
        r = -b / (2 * a)
        sa = math.sqrt(a)

        def g(t):
            return 0.5 * (t - r) * abs(t - r)

        return sa * (g(1.0) - g(0.0))
    return prim(1.0) - prim(0.0)
