import numpy as np
import pytest

from scaling_lab import DomainError, Params
from scaling_lab import _kernels_py
from scaling_lab.constructions import ConstructionKind, build_composite
from scaling_lab.oracle import (
    KERNEL,
    Boundary,
    DiscreteField,
    Grid,
    Init,
    bracket,
    discrete_energy,
    energy_parts,
    interpolate,
    minimize,
    prolong,
    refinement_study,
)

CONSTANT = Params(1e3, 1e3, 0.5, 0.5)
BRANCH = Params(0.5, 1e-3, 0.5, 0.5)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid(4, 16)
    with pytest.raises(DomainError):
        Grid(16, 16, collar=0.5)
    with pytest.raises(DomainError):
        Grid(512, 16)


def test_grid_shape():
    g = Grid(16, 16)
    nx, ny = g.shape(0.5)
    mx, my = g.collar_cells(0.5)
    assert (nx, ny) == (16 + 2 * mx + 1, 16 + 2 * my + 1)
    assert g.nucleus_mask(0.5).sum() == 256


def test_zero_field_energy():
    g = Grid(16, 16)
    u = np.zeros(g.shape(CONSTANT.L))
    e = discrete_energy(DiscreteField(u, u.copy()), CONSTANT, g)
    assert e == pytest.approx(0.125, rel=1e-14)


def test_affine_field_zero_misfit():
    p = Params(0.5, 0.5, 0.5, 0.5)
    g = Grid(16, 16)
    df = interpolate(build_composite(ConstructionKind.U2Affine, p), p, g, Boundary.free_outer)
    _, misfit, _, _ = energy_parts(df, p, g)
    assert misfit < 1e-14


def test_shape_mismatch():
    g = Grid(16, 16)
    with pytest.raises(DomainError):
        discrete_energy(DiscreteField(np.zeros((3, 3)), np.zeros((3, 3))), CONSTANT, g)


def test_constant_point_minimizer():
    g = Grid(16, 16)
    df, rep = minimize(CONSTANT, g, Init.zero)
    assert rep.energy == pytest.approx(0.125, abs=1e-6)


def test_kernels_agree():
    g = Grid(16, 16)
    rng = np.random.default_rng(0)
    u = 0.3 * rng.standard_normal(g.shape(BRANCH.L))
    dx, dy = g.spacing(BRANCH.L)
    mask = g.nucleus_mask(BRANCH.L)
    from scaling_lab.oracle import _energy_grad

    for delta in (0.0, 0.1):
        a = _kernels_py.energy_grad(u, mask, dx, dy, 0.5, 0.5, 1e-3, delta, True)
        b = _energy_grad(u, mask, dx, dy, 0.5, 0.5, 1e-3, delta, True)
        assert a[0] == pytest.approx(b[0], rel=1e-12)
        assert np.allclose(a[4], b[4], rtol=1e-10, atol=1e-14)


def test_gradient_finite_difference():
    g = Grid(8, 8)
    rng = np.random.default_rng(1)
    u = 0.2 * rng.standard_normal(g.shape(BRANCH.L))
    dx, dy = g.spacing(BRANCH.L)
    mask = g.nucleus_mask(BRANCH.L)
    e0, _, _, _, gr = _kernels_py.energy_grad(u, mask, dx, dy, 0.5, 0.5, 1e-2, 0.2, True)
    h = 1e-6
    for i, j in [(3, 3), (5, 6), (1, 2)]:
        w = u.copy()
        w[i, j] += h
        ep = _kernels_py.energy_grad(w, mask, dx, dy, 0.5, 0.5, 1e-2, 0.2, False)[0]
        w[i, j] -= 2 * h
        em = _kernels_py.energy_grad(w, mask, dx, dy, 0.5, 0.5, 1e-2, 0.2, False)[0]
        assert gr[i, j] == pytest.approx((ep - em) / (2 * h), rel=1e-5, abs=1e-9)


def test_zero_is_critical_at_half():
    # at theta = 1/2 the wells tie symmetrically at zero slope
    _, rep = minimize(BRANCH, Grid(16, 16), Init.zero)
    assert rep.iterations == 0 and rep.energy == pytest.approx(0.125)


def test_descent_decreases_energy():
    g = Grid(16, 16)
    rng = np.random.default_rng(4)
    u0 = 0.25 * rng.uniform(-0.5, 0.5, g.shape(BRANCH.L))
    e0 = discrete_energy(DiscreteField(u0, np.zeros_like(u0)), BRANCH, g)
    df, rep = minimize(BRANCH, g, Init.zero, budget=300, u0=u0)
    assert rep.energy < e0
    assert rep.energy == pytest.approx(discrete_energy(df, BRANCH, g), rel=1e-12)


def test_determinism():
    g = Grid(16, 16)
    _, a = minimize(BRANCH, g, Init.random, budget=100, seed=3)
    _, b = minimize(BRANCH, g, Init.random, budget=100, seed=3)
    assert a.energy == b.energy


def test_zero_outer_pins_boundary():
    g = Grid(16, 16)
    df, _ = minimize(BRANCH, g, Init.random, budget=50, seed=1)
    u = df.u1
    assert np.all(u[0, :] == 0) and np.all(u[-1, :] == 0) and np.all(u[:, 0] == 0) and np.all(u[:, -1] == 0)


def test_bracket_ordering():
    g = Grid(16, 16)
    b = bracket(BRANCH, g, budget=300)
    assert b.lower_probe <= b.upper_probe
    assert b.upper_probe <= b.construction_energy + 1e-10


def test_bracket_constant_point():
    b = bracket(CONSTANT, Grid(16, 16))
    assert b.upper_probe == pytest.approx(0.125, abs=1e-6)
    assert b.lower_probe == pytest.approx(0.125, abs=1e-6)


def test_kernel_name():
    assert KERNEL in ("cython", "numpy")


def test_prolong_exact_on_bilinear():
    p = Params(0.5, 1e-3, 0.5, 0.5)
    a, b = Grid(16, 16), Grid(32, 32)
    x, y = a.nodes(p.L)
    X, Y = b.nodes(p.L)
    u = 0.3 + 0.2 * x[:, None] - 0.7 * y[None, :] + 0.1 * x[:, None] * y[None, :]
    v = prolong(u, p, a, b)
    ref = 0.3 + 0.2 * X[:, None] - 0.7 * Y[None, :] + 0.1 * X[:, None] * Y[None, :]
    assert np.allclose(v, ref, atol=1e-14)


def test_refinement_warm_start_not_worse():
    p = Params(1e-2, 1e-3, 0.25, 0.5)
    (_, coarse), (_, fine) = refinement_study(p, [Grid(8, 8), Grid(16, 16)], budget=300)
    assert fine.upper_field.shape == Grid(16, 16).shape(p.L)
    assert fine.upper_probe <= coarse.upper_probe * 1.2
    assert fine.lower_probe <= fine.upper_probe
