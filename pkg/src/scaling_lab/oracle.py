"""Direct minimization of a finite-difference discretization of the energy."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize as _lbfgs

from .scaling import DomainError, Params

try:
    from ._kernels import energy_grad as _energy_grad
    KERNEL = "cython"
except ImportError:  # pragma: no cover - exercised when the extension is not built
    from ._kernels_py import energy_grad as _energy_grad
    KERNEL = "numpy"

GRID_CAP = 256


class Boundary(enum.Enum):
    free_outer = "free_outer"
    zero_outer = "zero_outer"


class Init(enum.Enum):
    zero = "zero"
    best_construction = "best_construction"
    random = "random"


@dataclass(frozen=True)
class Grid:
    n1: int
    n2: int
    collar: float = 1.0

    def __post_init__(self):
        if self.n1 < 8 or self.n2 < 8:
            raise DomainError("grid needs n1, n2 >= 8")
        if not self.collar >= 1.0:
            raise DomainError("collar must be at least 1")
        if max(self.n1, self.n2) > GRID_CAP:
            raise DomainError(f"grid sizes are capped at {GRID_CAP}")

    def spacing(self, L: float) -> Tuple[float, float]:
        return 2.0 * L / self.n1, 1.0 / self.n2

    def collar_cells(self, L: float) -> Tuple[int, int]:
        dx, dy = self.spacing(L)
        return int(math.ceil(self.collar / dx - 1e-9)), int(math.ceil(self.collar / dy - 1e-9))

    def shape(self, L: float) -> Tuple[int, int]:
        """Node counts ``(nx + 1, ny + 1)``."""
        mx, my = self.collar_cells(L)
        return self.n1 + 2 * mx + 1, self.n2 + 2 * my + 1

    def nodes(self, L: float) -> Tuple[np.ndarray, np.ndarray]:
        dx, dy = self.spacing(L)
        mx, my = self.collar_cells(L)
        nxn, nyn = self.shape(L)
        x = (np.arange(nxn) - mx) * dx
        y = (np.arange(nyn) - my) * dy
        return x, y

    def nucleus_mask(self, L: float) -> np.ndarray:
        mx, my = self.collar_cells(L)
        nxn, nyn = self.shape(L)
        m = np.zeros((nxn - 1, nyn - 1), dtype=np.int8)
        m[mx:mx + self.n1, my:my + self.n2] = 1
        return m


@dataclass
class DiscreteField:
    u1: np.ndarray
    u2: np.ndarray
    bc: Boundary = Boundary.zero_outer

    def check(self, g: Grid, L: float) -> None:
        if self.u1.shape != g.shape(L) or self.u2.shape != g.shape(L):
            raise DomainError(f"field shape {self.u1.shape} does not match grid {g.shape(L)}")


@dataclass
class SolveReport:
    energy: float
    smoothing: float
    iterations: int
    residual: float
    trace: List[float] = field(default_factory=list)
    budget_exhausted: bool = False
    init: str = ""


def _parts(u: np.ndarray, p: Params, g: Grid, smoothing: float, want_grad: bool):
    dx, dy = g.spacing(p.L)
    return _energy_grad(np.ascontiguousarray(u, dtype=float), g.nucleus_mask(p.L), dx, dy,
                        p.theta, p.mu, p.eps, float(smoothing), want_grad)


def discrete_energy(df: DiscreteField, p: Params, g: Grid, smoothing: float = 0.0) -> float:
    """Misfit in nucleus cells, austenite in collar cells, plus the discrete Hessian TV."""
    df.check(g, p.L)
    if smoothing < 0:
        raise DomainError("smoothing must be nonnegative")
    return float(_parts(df.u1, p, g, smoothing, False)[0])


def energy_parts(df: DiscreteField, p: Params, g: Grid) -> Tuple[float, float, float, float]:
    """(total, misfit, austenite, surface) with no smoothing."""
    df.check(g, p.L)
    t, a, b, c, _ = _parts(df.u1, p, g, 0.0, False)
    return float(t), float(a), float(b), float(c)


def interpolate(f, p: Params, g: Grid, bc: Boundary = Boundary.zero_outer) -> DiscreteField:
    """Nodal interpolant of a piecewise field."""
    from .fields import evaluate

    x, y = g.nodes(p.L)
    X, Y = np.meshgrid(x, y, indexing="ij")
    u = evaluate(f, X.ravel(), Y.ravel()).reshape(X.shape)
    if bc is Boundary.zero_outer:
        _pin(u)
    return DiscreteField(u, np.zeros_like(u), bc)


def _pin(u: np.ndarray) -> None:
    u[0, :] = 0.0
    u[-1, :] = 0.0
    u[:, 0] = 0.0
    u[:, -1] = 0.0


def _free_mask(shape, bc: Boundary) -> np.ndarray:
    m = np.ones(shape, dtype=bool)
    if bc is Boundary.zero_outer:
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = False
    return m


def _initial(p: Params, g: Grid, init, seed: int, bc: Boundary) -> np.ndarray:
    shape = g.shape(p.L)
    if init is Init.zero:
        return np.zeros(shape)
    if init is Init.best_construction:
        from .constructions import build_best

        f, _ = build_best(p)
        return interpolate(f, p, g, bc).u1
    if init is Init.random:
        rng = np.random.default_rng(seed)
        u = p.theta * rng.uniform(-0.5, 0.5, size=shape)
        if bc is Boundary.zero_outer:
            _pin(u)
        return u
    raise DomainError(f"unknown init {init!r}")


def descend(u0: np.ndarray, p: Params, g: Grid, bc: Boundary, budget: int = 2000, tol: float = 1e-8,
            start_smoothing: float = 1.0) -> Tuple[np.ndarray, SolveReport]:
    """L-BFGS on the Huber-smoothed energy, halving the smoothing after each converged stage."""
    free = _free_mask(u0.shape, bc)
    u = u0.copy()
    if bc is Boundary.zero_outer:
        _pin(u)
    best_u = u.copy()
    best_e = float(_parts(u, p, g, 0.0, False)[0])
    trace = [best_e]
    delta = start_smoothing
    stop = 1e-3 * p.eps
    iters = 0
    residual = float("nan")
    exhausted = False

    def fg(z, delta):
        w = u.copy()
        w[free] = z
        e, _, _, _, gr = _parts(w, p, g, delta, True)
        return e, gr[free]

    # a stationary start (within tolerance) needs no descent
    _, g0 = fg(u[free], 0.0)
    residual = float(np.max(np.abs(g0))) if g0.size else 0.0
    if residual <= tol:
        return best_u, SolveReport(best_e, 0.0, 0, residual, trace, False)

    while True:
        left = budget - iters
        if left <= 0:
            exhausted = True
            break
        res = _lbfgs(fg, u[free], args=(delta,), jac=True, method="L-BFGS-B",
                     options={"maxiter": left, "gtol": tol, "ftol": 1e-15, "maxcor": 20})
        iters += int(res.nit)
        u[free] = res.x
        residual = float(np.max(np.abs(res.jac))) if res.jac.size else 0.0
        e = float(_parts(u, p, g, 0.0, False)[0])
        if e < best_e:
            best_e = e
            best_u = u.copy()
            trace.append(e)
        if delta <= stop:
            break
        delta = max(0.5 * delta, stop) if delta * 0.5 > stop else stop * 0.999
    return best_u, SolveReport(best_e, delta, iters, residual, trace, exhausted)


def minimize(p: Params, g: Grid, init="zero", budget: int = 2000, tol: float = 1e-8, seed: int = 0,
             bc=Boundary.zero_outer, u0: Optional[np.ndarray] = None,
             start_smoothing: float = 1.0) -> Tuple[DiscreteField, SolveReport]:
    init = Init(init) if isinstance(init, str) else init
    bc = Boundary(bc) if isinstance(bc, str) else bc
    start = _initial(p, g, init, seed, bc) if u0 is None else np.array(u0, dtype=float)
    u, rep = descend(start, p, g, bc, budget, tol, start_smoothing)
    rep.init = init.value
    return DiscreteField(u, np.zeros_like(u), bc), rep


def prolong(u: np.ndarray, p: Params, coarse: Grid, fine: Grid) -> np.ndarray:
    """Bilinear transfer of nodal values to another grid (zero outside the coarse collar)."""
    from scipy.interpolate import RegularGridInterpolator

    x, y = coarse.nodes(p.L)
    X, Y = fine.nodes(p.L)
    pts = np.stack(np.meshgrid(X, Y, indexing="ij"), axis=-1)
    return RegularGridInterpolator((x, y), u, bounds_error=False, fill_value=0.0)(pts)


@dataclass(frozen=True)
class Bracket:
    lower_probe: float
    upper_probe: float
    construction_energy: float
    upper_init: str
    upper_field: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


def bracket(p: Params, g: Grid, budget: int = 2000, tol: float = 1e-8,
            warm: Optional[np.ndarray] = None) -> Bracket:
    """Upper probe: best zero_outer minimum over zero, construction and optional warm starts.

    The lower probe is a free_outer run started from the upper minimizer.
    """
    runs = []
    for init in (Init.zero, Init.best_construction):
        df, rep = minimize(p, g, init, budget, tol, bc=Boundary.zero_outer)
        runs.append((rep.energy, init.value, df))
    if warm is not None:
        # already near a minimizer of the unsmoothed energy; skip the continuation
        df, rep = minimize(p, g, Init.zero, budget, tol, bc=Boundary.zero_outer, u0=warm,
                           start_smoothing=2e-3 * p.eps)
        runs.append((rep.energy, "coarse", df))
    cons = discrete_energy(DiscreteField(_initial(p, g, Init.best_construction, 0, Boundary.zero_outer),
                                         np.zeros(g.shape(p.L))), p, g)
    upper, which, dfu = min(runs, key=lambda r: r[0])
    _, rep_l = minimize(p, g, Init.zero, budget, tol, bc=Boundary.free_outer, u0=dfu.u1)
    return Bracket(min(rep_l.energy, upper), upper, cons, which, dfu.u1)


def refinement_study(p: Params, grids: Sequence[Grid], budget: int = 2000, tol: float = 1e-8):
    """Brackets on successive grids, each warm-started from the previous upper minimizer."""
    out = []
    prev = None
    for gr in grids:
        warm = None if prev is None else prolong(prev[1].upper_field, p, prev[0], gr)
        b = bracket(p, gr, budget, tol, warm)
        out.append((gr, b))
        prev = (gr, b)
    return out
