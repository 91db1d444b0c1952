"""Piecewise closed-form scalar displacement fields with explicit gradient jumps.

Every shipped construction is scalar (``u2 == 0``), so an expression only
describes ``u1``; gradients are returned as 2x2 matrices whose second row is
zero.  Pieces are convex polygons (optionally repeated along a vertical
lattice), the polar exterior flow, or the zero tail.  The first piece that
contains a point answers for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .geometry import BIG, Point2

TWO_PI = 2.0 * math.pi
Matrix = Tuple[Tuple[float, float], Tuple[float, float]]


# ---------------------------------------------------------------------------
# expressions


class Expr:
    name = "expr"
    # True when the gradient is affine in position (jumps are then affine along segments)
    affine_grad = True

    def params(self) -> Tuple[float, ...]:
        raise NotImplementedError

    def val(self, x, y):
        raise NotImplementedError

    def grad(self, x, y):
        raise NotImplementedError

    def hess(self, x, y):
        z = np.zeros(np.shape(x))
        return z, z, z

    def __repr__(self) -> str:
        return f"{self.name}{self.params()}"


class Zero(Expr):
    name = "zero"

    def params(self):
        return ()

    def val(self, x, y):
        return np.zeros(np.shape(x))

    def grad(self, x, y):
        z = np.zeros(np.shape(x))
        return z, z


class Affine(Expr):
    """``c + a1*(x1 - x0) + a2*(x2 - y0)``; a nearby origin avoids cancellation."""

    name = "affine"

    def __init__(self, c: float, a1: float, a2: float, x0: float = 0.0, y0: float = 0.0):
        self.c, self.a1, self.a2 = float(c), float(a1), float(a2)
        self.x0, self.y0 = float(x0), float(y0)

    def params(self):
        if self.x0 == 0.0 and self.y0 == 0.0:
            return (self.c, self.a1, self.a2)
        return (self.c, self.a1, self.a2, self.x0, self.y0)

    def val(self, x, y):
        return self.c + self.a1 * (x - self.x0) + self.a2 * (y - self.y0)

    def grad(self, x, y):
        s = np.shape(x)
        return np.full(s, self.a1), np.full(s, self.a2)


class Bilinear(Expr):
    """``c + a1*x1 + a2*x2 + b*x1*x2``."""

    name = "bilinear"

    def __init__(self, c: float, a1: float, a2: float, b: float):
        self.c, self.a1, self.a2, self.b = float(c), float(a1), float(a2), float(b)

    def params(self):
        return (self.c, self.a1, self.a2, self.b)

    def val(self, x, y):
        return self.c + self.a1 * x + self.a2 * y + self.b * x * y

    def grad(self, x, y):
        return self.a1 + self.b * y, self.a2 + self.b * x

    def hess(self, x, y):
        z = np.zeros(np.shape(x))
        return z, z + self.b, z


class LaminateTip(Expr):
    """Rational interpolation filling the tip region of the boundary laminate.

    ``v = (1 - N x2) theta (1-h) (N x1 + 1) / (N (h - (1-h) N x1))`` on the
    quadrilateral with corners ``(-1/N, 0), (0, (1-h)/N), (0, 1/N), (-1/N, 1/N)``.
    """

    name = "laminate_tip"
    affine_grad = False

    def __init__(self, N: int, h: float, theta: float):
        self.N, self.h, self.theta = int(N), float(h), float(theta)

    def params(self):
        return (float(self.N), self.h, self.theta)

    def _parts(self, x):
        N, h = self.N, self.h
        P = N * x + 1.0
        D = h - (1.0 - h) * N * x
        return P, D

    def val(self, x, y):
        N, h, th = self.N, self.h, self.theta
        P, D = self._parts(x)
        return (1.0 - N * y) * th * (1.0 - h) * P / (N * D)

    def grad(self, x, y):
        N, h, th = self.N, self.h, self.theta
        P, D = self._parts(x)
        g1 = th * (1.0 - h) * (1.0 - N * y) / D ** 2
        g2 = -th * (1.0 - h) * P / D
        return g1, g2

    def hess(self, x, y):
        N, h, th = self.N, self.h, self.theta
        P, D = self._parts(x)
        h11 = 2.0 * th * (1.0 - h) ** 2 * N * (1.0 - N * y) / D ** 3
        h12 = -th * (1.0 - h) * N / D ** 2
        return h11, h12, np.zeros(np.shape(x))


class CornerFan(Expr):
    """``theta (1 + x1/gamma) x2 / (1 - x1)`` used left of the nucleus corner."""

    name = "corner_fan"
    affine_grad = False

    def __init__(self, theta: float, gamma: float):
        self.theta, self.gamma = float(theta), float(gamma)

    def params(self):
        return (self.theta, self.gamma)

    def val(self, x, y):
        return self.theta * (1.0 + x / self.gamma) * y / (1.0 - x)

    def grad(self, x, y):
        th, g = self.theta, self.gamma
        a = 1.0 + x / g
        d = 1.0 - x
        g1 = th * y * (1.0 / (g * d) + a / d ** 2)
        g2 = th * a / d
        return g1, g2

    def hess(self, x, y):
        th, g = self.theta, self.gamma
        a = 1.0 + x / g
        d = 1.0 - x
        h11 = th * y * (2.0 / (g * d ** 2) + 2.0 * a / d ** 3)
        h12 = th * (1.0 / (g * d) + a / d ** 2)
        return h11, h12, np.zeros(np.shape(x))


def radial_profile(r, alpha: float, beta: float, Lbar: float):
    """Radial factor of the exterior flow and its derivative."""
    r = np.asarray(r, dtype=float)
    F = np.zeros_like(r)
    dF = np.zeros_like(r)
    ramp = (r > alpha) & (r <= beta)
    F[ramp] = (r[ramp] - alpha) / (beta - alpha)
    dF[ramp] = 1.0 / (beta - alpha)
    flat = (r > beta) & (r <= Lbar)
    F[flat] = 1.0
    far = r > Lbar
    F[far] = np.sqrt(Lbar / r[far])
    dF[far] = -0.5 * math.sqrt(Lbar) * r[far] ** -1.5
    return F, dF


class ExteriorFlowExpr(Expr):
    """Polar flow ``F(r)(1 - phi/2pi) theta`` composed with the collapse map.

    Local coordinates are ``(x1 - o1, x2)``.  Above the strip the polar
    centre is ``(0, 1)``, below it is the origin, and inside the strip
    ``0 < x2 < 1`` left of the centre the field is ``F(|y1|) theta / 2``.
    ``Lc`` is the local abscissa of the right cut line.
    """

    name = "exterior_flow"
    affine_grad = False

    def __init__(self, alpha: float, beta: float, Lbar: float, theta: float, o1: float = 0.0,
                 Lc: Optional[float] = None):
        self.alpha, self.beta, self.Lbar, self.theta = float(alpha), float(beta), float(Lbar), float(theta)
        self.o1 = float(o1)
        self.Lc = float(Lbar if Lc is None else Lc)

    def params(self):
        return (self.alpha, self.beta, self.Lbar, self.theta, self.o1, self.Lc)

    def _polar(self, x, y):
        y1 = np.asarray(x, dtype=float) - self.o1
        y2 = np.asarray(y, dtype=float)
        # right of the centre the strip is nucleus; snap to the nearer edge trace
        inside = (y1 > 0.0) & (y2 > 0.0) & (y2 < 1.0)
        y2 = np.where(inside, np.where(y2 >= 0.5, 1.0, 0.0), y2)
        upper = y2 >= 1.0
        strip = (y2 > 0.0) & (y2 < 1.0)
        z2 = np.where(upper, y2 - 1.0, y2)
        r = np.hypot(y1, z2)
        phi_up = np.arctan2(np.maximum(z2, 0.0), y1)
        phi_lo = TWO_PI - np.arctan2(np.maximum(-z2, 0.0), y1)
        phi = np.where(upper, phi_up, phi_lo)
        return y1, z2, r, phi, strip

    def val(self, x, y):
        y1, z2, r, phi, strip = self._polar(x, y)
        F, _ = radial_profile(r, self.alpha, self.beta, self.Lbar)
        Fs, _ = radial_profile(np.abs(y1), self.alpha, self.beta, self.Lbar)
        out = F * (1.0 - phi / TWO_PI) * self.theta
        return np.where(strip, 0.5 * self.theta * Fs, out)

    def grad(self, x, y):
        y1, z2, r, phi, strip = self._polar(x, y)
        F, dF = radial_profile(r, self.alpha, self.beta, self.Lbar)
        g = 1.0 - phi / TWO_PI
        rs = np.where(r > 0, r, 1.0)
        c, s = y1 / rs, z2 / rs
        fr = self.theta * dF * g
        fphi = -self.theta * F / (TWO_PI * rs)
        g1 = fr * c - fphi * s
        g2 = fr * s + fphi * c
        _, dFs = radial_profile(np.abs(y1), self.alpha, self.beta, self.Lbar)
        g1s = 0.5 * self.theta * dFs * np.sign(y1)
        g1 = np.where(strip, g1s, g1)
        g2 = np.where(strip, 0.0, g2)
        return g1, g2


EXPRESSIONS = {cls.name: cls for cls in (Zero, Affine, Bilinear, LaminateTip, CornerFan, ExteriorFlowExpr)}


# ---------------------------------------------------------------------------
# regions and pieces


@dataclass(frozen=True)
class Region:
    """``polygon`` (ccw vertices), ``annular_sector`` (polar flow domain) or ``half_plane_tail``."""

    kind: str
    vertices: Tuple[Point2, ...] = ()
    geometry: Tuple[Tuple[str, float], ...] = ()

    @classmethod
    def polygon(cls, pts: Sequence[Point2]) -> "Region":
        v = geo.ccw(pts)
        if len(v) < 3:
            raise ValueError("degenerate polygon")
        return cls("polygon", v)

    @classmethod
    def box(cls, x0: float, x1: float, y0: float, y1: float) -> "Region":
        return cls.polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    @classmethod
    def flow_domain(cls, o1: float, Lc: float, alpha: float, beta: float) -> "Region":
        # centre, inner/outer radius of the ramp and the right cut, as named numbers
        return cls("annular_sector", (), (("o1", o1), ("Lc", Lc), ("alpha", alpha), ("beta", beta)))

    @classmethod
    def tail(cls, decay_exponent: float = math.inf) -> "Region":
        return cls("half_plane_tail", (), (("decay_exponent", decay_exponent),))

    def geom(self) -> Dict[str, float]:
        return dict(self.geometry)

    def contains(self, x, y, tol: float = 0.0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "polygon":
            return geo.point_in_convex(self.vertices, x, y, tol)
        if self.kind == "annular_sector":
            g = self.geom()
            xr = g["o1"] + g["Lc"]
            inside_rect = (x > g["o1"] + tol) & (x < xr - tol) & (y > tol) & (y < 1.0 - tol)
            return (x <= xr + tol) & ~inside_rect
        return np.ones(x.shape, dtype=bool)

    def bbox(self):
        if self.kind == "polygon":
            return geo.bbox(self.vertices)
        return (-BIG, BIG, -BIG, BIG)


@dataclass(frozen=True)
class LatticeLevel:
    """``count`` copies spaced ``shift`` upward from ``anchor``, value raised by ``dv`` per copy."""

    count: int
    shift: float
    dv: float
    anchor: float


@dataclass(frozen=True)
class Piece:
    region: Region
    expr: Expr
    lattice: Tuple[LatticeLevel, ...] = ()
    detect: bool = True  # take part in generic jump detection
    tag: str = ""

    @property
    def copies(self) -> int:
        n = 1
        for lv in self.lattice:
            n *= lv.count
        return n

    def copy_offsets(self, limit: Optional[int] = None) -> List[Tuple[float, float]]:
        """(vertical shift, value offset) of each copy, optionally subsampled."""
        offs = [(0.0, 0.0)]
        for lv in self.lattice:
            idx = range(lv.count)
            if limit is not None and lv.count > limit:
                idx = sorted(set(np.linspace(0, lv.count - 1, limit).round().astype(int)))
            offs = [(s + n * lv.shift, v + n * lv.dv) for s, v in offs for n in idx]
        return offs


@dataclass(frozen=True)
class JumpSegment:
    """Gradient jump along ``a -> b``; the jump varies affinely from ``jump_a`` to ``jump_b``."""

    a: Point2
    b: Point2
    jump_a: Matrix
    jump_b: Matrix
    count: int = 1

    @property
    def jump(self) -> Matrix:
        return self.jump_a

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])

    def jump_at(self, t: float) -> np.ndarray:
        A = np.asarray(self.jump_a, dtype=float)
        B = np.asarray(self.jump_b, dtype=float)
        return A + t * (B - A)

    def total_variation(self) -> float:
        """``count * int |jump| ds`` in closed form."""
        A = np.asarray(self.jump_a, dtype=float).ravel()
        D = np.asarray(self.jump_b, dtype=float).ravel() - A
        val = geo.integrate_sqrt_quadratic(float(D @ D), 2.0 * float(A @ D), float(A @ A))
        return self.count * self.length * val

    def sub(self, t0: float, t1: float) -> "JumpSegment":
        pa = (self.a[0] + t0 * (self.b[0] - self.a[0]), self.a[1] + t0 * (self.b[1] - self.a[1]))
        pb = (self.a[0] + t1 * (self.b[0] - self.a[0]), self.a[1] + t1 * (self.b[1] - self.a[1]))
        return JumpSegment(pa, pb, _mat(self.jump_at(t0)), _mat(self.jump_at(t1)), self.count)


def _mat(m) -> Matrix:
    m = np.asarray(m, dtype=float)
    return ((float(m[0, 0]), float(m[0, 1])), (float(m[1, 0]), float(m[1, 1])))


def grad_jump(g1: float, g2: float) -> Matrix:
    """Jump matrix of a scalar field whose gradient jumps by ``(g1, g2)``."""
    return ((float(g1), float(g2)), (0.0, 0.0))


@dataclass(frozen=True)
class PiecewiseField:
    pieces: Tuple[Piece, ...]
    jump_segments: Tuple[JumpSegment, ...] = ()
    mirror_axis: Optional[float] = None
    params_used: Dict[str, float] = field(default_factory=dict)
    nucleus: Tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    kind: str = ""
    seam: Tuple[JumpSegment, ...] = ()

    @property
    def work_box(self) -> Tuple[float, float, float, float]:
        """Nucleus part carried explicitly (the left half when mirrored)."""
        x0, x1, y0, y1 = self.nucleus
        if self.mirror_axis is not None:
            x1 = self.mirror_axis
        return (x0, x1, y0, y1)

    @property
    def flows(self) -> List[Piece]:
        return [p for p in self.pieces if isinstance(p.expr, ExteriorFlowExpr)]

    @property
    def scale(self) -> float:
        x0, x1, y0, y1 = self.nucleus
        return max(abs(x0), abs(x1), abs(y0), abs(y1), 1.0)


# ---------------------------------------------------------------------------
# evaluation


def _fold(f: PiecewiseField, x: np.ndarray):
    if f.mirror_axis is None:
        return x, np.ones_like(x)
    L = f.mirror_axis
    right = x > L
    return np.where(right, 2.0 * L - x, x), np.where(right, -1.0, 1.0)


def locate(f: PiecewiseField, x, y, tol: Optional[float] = None):
    """Piece index, local ordinate and value offset for each (already folded) point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if tol is None:
        tol = 1e-12 * f.scale
    idx = np.full(x.shape, -1, dtype=int)
    yloc = y.copy()
    voff = np.zeros_like(x)
    for k, pc in enumerate(f.pieces):
        todo = idx < 0
        if not todo.any():
            break
        xs, ys = x[todo], y[todo]
        if pc.region.kind == "polygon":
            bx0, bx1, _, _ = pc.region.bbox()
            near = (xs >= bx0 - tol) & (xs <= bx1 + tol)
        else:
            near = np.ones(xs.shape, dtype=bool)
        if not near.any():
            continue
        yl = ys.copy()
        vo = np.zeros_like(ys)
        for lv in pc.lattice:
            n = np.floor((yl - lv.anchor) / lv.shift)
            n = np.clip(n, 0, lv.count - 1)
            yl = yl - n * lv.shift
            vo = vo + n * lv.dv
        hit = near & pc.region.contains(xs, yl, tol)
        if not hit.any():
            continue
        pos = np.flatnonzero(todo)[hit]
        idx[pos] = k
        yloc[pos] = yl[hit]
        voff[pos] = vo[hit]
    return idx, yloc, voff


def evaluate(f: PiecewiseField, x, y) -> np.ndarray:
    """Vectorized ``u1`` (``u2`` is identically zero)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    xf, _ = _fold(f, x)
    idx, yl, vo = locate(f, xf, y)
    if (idx < 0).any():
        bad = np.flatnonzero(idx < 0)[0]
        raise ValueError(f"point ({x[bad]}, {y[bad]}) lies in no region of the field")
    out = np.empty_like(x)
    for k in np.unique(idx):
        m = idx == k
        out[m] = f.pieces[k].expr.val(xf[m], yl[m]) + vo[m]
    return out


def evaluate_gradient(f: PiecewiseField, x, y) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(d1 u1, d2 u1)``, resolved by a small interior perturbation."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = 1e-9 * f.scale
    xp = x + d * 0.6
    yp = y + d * 0.8
    xf, sgn = _fold(f, xp)
    idx, yl, vo = locate(f, xf, yp, tol=1e-3 * d)
    miss = idx < 0
    if miss.any():
        idx2, yl2, _ = locate(f, _fold(f, x)[0][miss], y[miss])
        idx[miss] = idx2
        yl[miss] = yl2
        if (idx < 0).any():
            raise ValueError("point lies in no region of the field")
    xf0, sgn = _fold(f, x)
    # use the unperturbed point with the located piece (closed forms extend to the closure)
    ylo = yl - (yp - y)
    g1 = np.empty_like(x)
    g2 = np.empty_like(x)
    for k in np.unique(idx):
        m = idx == k
        a, b = f.pieces[k].expr.grad(xf0[m], ylo[m])
        g1[m] = a
        g2[m] = b
    return g1 * sgn, g2


def eval_field(f: PiecewiseField, p: Point2) -> Tuple[float, float]:
    return float(evaluate(f, [p[0]], [p[1]])[0]), 0.0


def eval_gradient(f: PiecewiseField, p: Point2) -> Matrix:
    g1, g2 = evaluate_gradient(f, [p[0]], [p[1]])
    return grad_jump(g1[0], g2[0])


# ---------------------------------------------------------------------------
# jumps


def _clip_polys(pc: Piece, box) -> List[Point2]:
    if pc.region.kind != "polygon":
        return []
    return geo.clip_box(pc.region.vertices, *box)


def _edges(poly):
    n = len(poly)
    for i in range(n):
        yield poly[i], poly[(i + 1) % n]


def _line_key(a: Point2, b: Point2):
    dx, dy = b[0] - a[0], b[1] - a[1]
    ln = math.hypot(dx, dy)
    if ln == 0:
        return None
    dx, dy = dx / ln, dy / ln
    if dx < -1e-14 or (abs(dx) <= 1e-14 and dy < 0):
        dx, dy = -dx, -dy
    ang = math.atan2(dy, dx)
    off = -dy * a[0] + dx * a[1]
    ta, tb = dx * a[0] + dy * a[1], dx * b[0] + dy * b[1]
    return ang, off, (dx, dy), min(ta, tb), max(ta, tb)


def _cluster(items, keyfun, tol):
    items = sorted(items, key=keyfun)
    groups, cur, last = [], [], None
    for it in items:
        k = keyfun(it)
        if last is not None and (abs(k[0] - last[0]) > tol or abs(k[1] - last[1]) > tol * (1 + abs(k[1]))):
            groups.append(cur)
            cur = []
        cur.append(it)
        last = k
    if cur:
        groups.append(cur)
    return groups


def _jump_between(ea: Expr, va: float, eb: Expr, vb: float, pa: Point2, pb: Point2, count: int,
                  tol: float) -> List[JumpSegment]:
    """Jump ``grad(eb) - grad(ea)`` along the common segment ``pa -> pb``."""

    def J(t):
        x = np.array([pa[0] + t * (pb[0] - pa[0])])
        y = np.array([pa[1] + t * (pb[1] - pa[1])])
        ga = ea.grad(x, y)
        gb = eb.grad(x, y)
        return np.array([float(gb[0][0] - ga[0][0]), float(gb[1][0] - ga[1][0])])

    j0, j1, jm = J(0.0), J(1.0), J(0.5)
    scale = max(np.abs(j0).max(), np.abs(j1).max(), np.abs(jm).max())
    if scale <= tol:
        return []
    if np.abs(jm - 0.5 * (j0 + j1)).max() <= 1e-10 * scale:
        return [JumpSegment(pa, pb, grad_jump(*j0), grad_jump(*j1), count)]
    # curved jump: piecewise-affine approximation on a fine partition
    out = []
    ts = np.linspace(0.0, 1.0, 65)
    for t0, t1 in zip(ts[:-1], ts[1:]):
        q0 = (pa[0] + t0 * (pb[0] - pa[0]), pa[1] + t0 * (pb[1] - pa[1]))
        q1 = (pa[0] + t1 * (pb[0] - pa[0]), pa[1] + t1 * (pb[1] - pa[1]))
        out.append(JumpSegment(q0, q1, grad_jump(*J(t0)), grad_jump(*J(t1)), count))
    return out


def detect_jumps(pieces: Sequence[Piece], box, tol: float = 1e-13) -> List[JumpSegment]:
    """Generic jump detection between explicit polygon pieces clipped to ``box``.

    Only single-copy pieces with ``detect`` set take part; collinear edges
    of different pieces are grouped by line and their overlaps compared.
    """
    edges = []
    for k, pc in enumerate(pieces):
        if not pc.detect or pc.copies != 1 or pc.region.kind != "polygon":
            continue
        poly = _clip_polys(pc, box)
        for a, b in _edges(poly):
            key = _line_key(a, b)
            if key is None:
                continue
            edges.append((key[0], key[1], key[2], key[3], key[4], k))
    scale = max(abs(v) for v in box) if box else 1.0
    out: List[JumpSegment] = []
    for grp in _cluster(edges, lambda e: (e[0], e[1]), 1e-10):
        if len(grp) < 2:
            continue
        for i in range(len(grp)):
            for j in range(i + 1, len(grp)):
                ei, ej = grp[i], grp[j]
                if ei[5] == ej[5]:
                    continue
                lo, hi = max(ei[3], ej[3]), min(ei[4], ej[4])
                if hi - lo <= 1e-12 * max(1.0, scale):
                    continue
                d = ei[2]
                off = ei[1]
                # point on line: off * normal + t * d, normal = (-dy, dx)
                nx, ny = -d[1], d[0]
                pa = (off * nx + lo * d[0], off * ny + lo * d[1])
                pb = (off * nx + hi * d[0], off * ny + hi * d[1])
                out.extend(_jump_between(pieces[ei[5]].expr, 0.0, pieces[ej[5]].expr, 0.0, pa, pb, 1, tol))
    return out


def seam_jumps(pieces: Sequence[Piece], L: float, box, tol: float = 1e-13) -> List[JumpSegment]:
    """Jumps on ``x1 = L`` between the field and its mirror image."""
    out: List[JumpSegment] = []
    x0, _, y0, y1 = box
    eps_x = 1e-12 * max(1.0, abs(L))
    for pc in pieces:
        if pc.region.kind != "polygon":
            continue
        poly = geo.clip_box(pc.region.vertices, x0, L, -BIG, BIG)
        for a, b in _edges(poly):
            if abs(a[0] - L) > eps_x or abs(b[0] - L) > eps_x:
                continue
            lo, hi = sorted((a[1], b[1]))
            mirror = _MirrorExpr(pc.expr, L)
            top = sum((lv.count - 1) * lv.shift for lv in pc.lattice)
            if lo >= y0 - 1e-14 and hi + top <= y1 + 1e-14:
                # every copy lies inside the nucleus: one segment with a multiplicity
                segs = _jump_between(pc.expr, 0.0, mirror, 0.0, (L, lo), (L, hi), pc.copies, tol)
                out.extend(segs)
                continue
            for s, _ in pc.copy_offsets():
                ya, yb = max(lo + s, y0), min(hi + s, y1)
                if yb - ya <= 1e-14:
                    continue
                segs = _jump_between(pc.expr, 0.0, mirror, 0.0, (L, ya - s), (L, yb - s), 1, tol)
                for sg in segs:
                    out.append(JumpSegment((sg.a[0], sg.a[1] + s), (sg.b[0], sg.b[1] + s), sg.jump_a, sg.jump_b))
    return out


class _MirrorExpr(Expr):
    def __init__(self, e: Expr, L: float):
        self.e, self.L = e, L
        self.affine_grad = e.affine_grad

    def params(self):
        return ()

    def val(self, x, y):
        return self.e.val(2 * self.L - x, y)

    def grad(self, x, y):
        g1, g2 = self.e.grad(2 * self.L - x, y)
        return -g1, g2


def clip_jumps(segs: Iterable[JumpSegment], box, drop_lines: Sequence[Tuple[str, float]],
               tol: float = 1e-12) -> List[JumpSegment]:
    """Clip segments to the closed box and drop the ones lying on the listed lines."""
    out = []
    for sg in segs:
        r = geo.clip_segment_box(sg.a, sg.b, box)
        if r is None:
            continue
        s = sg.sub(*r) if r != (0.0, 1.0) else sg
        on_line = False
        for axis, v in drop_lines:
            k = 0 if axis == "x" else 1
            if abs(s.a[k] - v) <= tol * max(1.0, abs(v)) and abs(s.b[k] - v) <= tol * max(1.0, abs(v)):
                on_line = True
                break
        if not on_line and s.length > 0:
            out.append(s)
    return out


def reflect_segment(sg: JumpSegment, L: float) -> JumpSegment:
    def refl(m):
        return ((-m[0][0], m[0][1]), (-m[1][0], m[1][1]))

    return JumpSegment((2 * L - sg.a[0], sg.a[1]), (2 * L - sg.b[0], sg.b[1]),
                       refl(sg.jump_a), refl(sg.jump_b), sg.count)


def half_jumps(f: PiecewiseField) -> List[JumpSegment]:
    """Jumps inside the explicitly carried part of the open nucleus (no seam, no mirror copies)."""
    box = f.work_box
    x0, x1, y0, y1 = box
    drops = [("y", y0), ("y", y1), ("x", x0), ("x", x1)]
    return clip_jumps(f.jump_segments, box, drops)


def jump_set(f: PiecewiseField) -> List[JumpSegment]:
    """All gradient jumps inside the nucleus, including mirror copies and the seam."""
    inner = half_jumps(f)
    if f.mirror_axis is None:
        return inner
    L = f.mirror_axis
    return inner + [reflect_segment(s, L) for s in inner] + list(f.seam)


def total_variation(segs: Iterable[JumpSegment]) -> float:
    from .logspace import fsum_tree

    return fsum_tree(s.total_variation() for s in segs)


# ---------------------------------------------------------------------------
# checks and transforms


def check_continuity(f: PiecewiseField, samples_per_edge: int = 100, max_copies: int = 16,
                     within=None) -> float:
    """Max ``|u_piece - u_neighbour|`` over sample points on every polygon edge.

    ``within`` restricts the comparison to neighbours inside a closed box, for
    standalone building blocks that are not continuous across their outer edge.
    """
    return continuity_report(f, samples_per_edge, max_copies, within)[0]


def continuity_report(f: PiecewiseField, samples_per_edge: int = 100, max_copies: int = 16,
                      within=None) -> Tuple[float, Optional[Tuple[float, float]], Tuple[int, int]]:
    """``(worst mismatch, location, (piece index, neighbour index))``."""
    if samples_per_edge < 2:
        raise ValueError("need at least two samples per edge")
    scale = f.scale
    worst = 0.0
    where = None
    pair = (-1, -1)
    t = (np.arange(samples_per_edge) + 0.5) / samples_per_edge
    for i, pc in enumerate(f.pieces):
        if pc.region.kind != "polygon":
            continue
        verts = pc.region.vertices
        bx0, bx1, by0, by1 = geo.bbox(verts)
        size = min(bx1 - bx0, by1 - by0)
        if size <= 0:
            continue
        # probe offset just above float resolution: thin slivers are never skipped over, and
        # landing in the wrong piece costs at most d * |grad u| since all expressions are smooth
        big = max(abs(bx0), abs(bx1), abs(by0), abs(by1), 1.0)
        d = 64.0 * np.finfo(float).eps * big
        for s, voff in pc.copy_offsets(max_copies):
            for a, b in _edges(verts):
                ex, ey = b[0] - a[0], b[1] - a[1]
                ln = math.hypot(ex, ey)
                if ln == 0:
                    continue
                px = a[0] + t * ex
                py = a[1] + t * ey
                own = pc.expr.val(px, py) + voff
                # outward normal of a ccw polygon
                nx, ny = ey / ln, -ex / ln
                qx, qy = px + d * nx, py + s + d * ny
                if f.mirror_axis is not None:
                    keep = qx <= f.mirror_axis
                    qx, qy, px2, py2, own = qx[keep], qy[keep], px[keep], py[keep], own[keep]
                else:
                    px2, py2 = px, py
                if qx.size == 0:
                    continue
                idx, yl, vo = locate(f, qx, qy, tol=0.0)
                ok = idx >= 0
                if within is not None:
                    ok &= (qx >= within[0]) & (qx <= within[1]) & (qy >= within[2]) & (qy <= within[3])
                for k in np.unique(idx[ok]):
                    m = ok & (idx == k)
                    other = f.pieces[k].expr.val(px2[m], yl[m] - d * ny) + vo[m]
                    err = np.abs(other - own[m])
                    j = int(np.argmax(err))
                    if err[j] > worst:
                        worst = float(err[j])
                        where = (float(px2[m][j]), float(py2[m][j] + s))
                        pair = (i, int(k))
    return worst, where, pair


def mirror_extend(f: PiecewiseField, L: float) -> PiecewiseField:
    """Mirror a field given on ``x1 <= L`` about ``x1 = L`` and record the seam."""
    if f.mirror_axis is not None:
        raise ValueError("field is already mirrored")
    box = (f.nucleus[0], L, f.nucleus[2], f.nucleus[3])
    seam = seam_jumps(f.pieces, L, box)
    seam = [s for s in seam if s.total_variation() > 0]
    nucleus = (f.nucleus[0], 2 * L, f.nucleus[2], f.nucleus[3])
    return PiecewiseField(f.pieces, f.jump_segments, L, dict(f.params_used), nucleus, f.kind, tuple(seam))


def expand_lattices(f: PiecewiseField, max_copies: int = 100000) -> PiecewiseField:
    """Replace lattice pieces by explicit copies (for brute-force cross-checks)."""
    pieces = []
    for pc in f.pieces:
        if not pc.lattice:
            pieces.append(Piece(pc.region, pc.expr, (), True, pc.tag))
            continue
        if pc.copies > max_copies:
            raise ValueError("too many copies to expand")
        for s, v in pc.copy_offsets():
            verts = [(x, y + s) for x, y in pc.region.vertices]
            pieces.append(Piece(Region.polygon(verts), _Translated(pc.expr, s, v), (), True, pc.tag))
    return PiecewiseField(tuple(pieces), (), f.mirror_axis, dict(f.params_used), f.nucleus, f.kind, f.seam)


class _Translated(Expr):
    def __init__(self, e: Expr, s: float, v: float):
        self.e, self.s, self.v = e, s, v
        self.affine_grad = e.affine_grad
        self.name = e.name

    def params(self):
        return self.e.params()

    def val(self, x, y):
        return self.e.val(x, y - self.s) + self.v

    def grad(self, x, y):
        return self.e.grad(x, y - self.s)

    def hess(self, x, y):
        return self.e.hess(x, y - self.s)


def dump_field(f: PiecewiseField) -> str:
    """Line-oriented text form: one piece per line, then jumps and seam segments."""
    lines = [f"# field kind={f.kind} mirror_axis={f.mirror_axis} nucleus={','.join(repr(v) for v in f.nucleus)}"]
    for k, v in sorted(f.params_used.items()):
        lines.append(f"param {k} {v!r}")
    for pc in f.pieces:
        if pc.region.kind == "polygon":
            geom = " ".join(f"{x!r},{y!r}" for x, y in pc.region.vertices)
        else:
            geom = " ".join(f"{k}={v!r}" for k, v in pc.region.geometry)
        lat = " ".join(f"{lv.count}x{lv.shift!r}+{lv.dv!r}@{lv.anchor!r}" for lv in pc.lattice) or "-"
        par = ",".join(repr(float(v)) for v in pc.expr.params()) or "-"
        lines.append(f"piece {pc.region.kind} [{geom}] {pc.expr.name} ({par}) lattice {lat} tag {pc.tag or '-'}")
    for sg in f.jump_segments:
        lines.append(f"jump {sg.a!r} {sg.b!r} {sg.jump_a!r} {sg.jump_b!r} x{sg.count}")
    for sg in f.seam:
        lines.append(f"seam {sg.a!r} {sg.b!r} {sg.jump_a!r} {sg.jump_b!r}")
    return "\n".join(lines) + "\n"
