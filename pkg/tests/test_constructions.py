import math

import numpy as np
import pytest

from scaling_lab import DomainError, Params, RegimeId, eval_scaling
from scaling_lab.constructions import (
    COMPOSITES,
    ConstructionKind,
    branching_N,
    build_best,
    build_boundary_laminate,
    build_branch_cell,
    build_composite,
    build_exterior_flow,
    build_interp_wedge,
    corner_gamma,
    iota,
    truncation_index,
)
from scaling_lab.fields import (
    check_continuity,
    detect_jumps,
    evaluate,
    expand_lattices,
    half_jumps,
    total_variation,
)

REFERENCE = [
    Params(1e3, 1e3, 0.5, 0.5),
    Params(0.5, 1e-3, 0.5, 0.5),
    Params(0.25, 1.0, 0.5, 2.0),
    Params(1e-4, 4.6e-14, 1e-4, 100.0),
    Params(1e-5, 1e-13, 1e-3, 0.5),
]


def test_iota():
    assert iota(0, 1, 0.25) == 0.25
    assert iota(1, 2, 1) == 0.0
    assert iota(1, 3, 2) == 0.5
    with pytest.raises(DomainError):
        iota(1, 1, 1)


def test_flow_traces():
    f = build_exterior_flow(1.0, 2.0, 4.0, 0.5)
    x = np.linspace(0, 4, 41)
    assert np.allclose(evaluate(f, x, np.zeros_like(x)), 0.0, atol=1e-12)
    assert np.allclose(evaluate(f, np.zeros(9), np.linspace(0, 1, 9)), 0.0, atol=1e-12)
    top = np.linspace(2.05, 4.0, 20)
    assert np.allclose(evaluate(f, top, np.ones_like(top)), 0.5)
    ramp = np.array([1.25, 1.5, 1.75])
    assert np.allclose(evaluate(f, ramp, np.ones(3)), 0.5 * (ramp - 1.0))


def test_flow_domain():
    with pytest.raises(DomainError):
        build_exterior_flow(0.5, 2.0, 2.0, 0.5)
    with pytest.raises(DomainError):
        build_exterior_flow(2.0, 1.5, 3.0, 0.5)


def test_laminate_traces():
    N, h, th = 2, 0.25, 0.25
    f = build_boundary_laminate(N, h, th)
    y = (1 - h) / (2 * N)
    assert evaluate(f, [0.0], [y])[0] == pytest.approx(th * y)
    assert evaluate(f, [-1 / N - 0.1], [0.3])[0] == 0.0
    with pytest.raises(DomainError):
        build_boundary_laminate(2, 0.6, 0.25)


def test_branch_cell_traces():
    h, ell, N, th = 0.5, 4.0, 1, 0.125
    f = build_branch_cell(h, ell, N, th)
    x = np.linspace(0.01, ell - 0.01, 50)
    assert np.allclose(evaluate(f, x, np.ones_like(x)), 0.0, atol=1e-10)
    bottom = np.full_like(x, 1 - h / N)
    assert np.allclose(evaluate(f, x, bottom), th * (1 - h) / N, atol=1e-10)


def test_branch_cell_domain():
    with pytest.raises(DomainError):
        build_branch_cell(0.1, 1.0, 1, 0.25)
    with pytest.raises(DomainError):
        build_branch_cell(0.5, 0.1, 1, 0.25)


@pytest.mark.parametrize("args", [(0.75, 1.0, 2, 0.5), (1.0, 3.0, 1, 0.25), (0.3, 0.5, 1, 0.25)])
def test_branch_cell_symbolic_jumps_match_brute_force(args):
    f = build_branch_cell(*args)
    g = expand_lattices(f)
    brute = total_variation(detect_jumps([p for p in g.pieces if p.region.kind == "polygon"], f.nucleus))
    assert total_variation(half_jumps(f)) == pytest.approx(brute, rel=1e-12)


def test_branch_cell_continuous():
    f = build_branch_cell(0.75, 1.0, 2, 0.5)
    assert check_continuity(f, 50, within=f.nucleus) < 1e-12


def test_truncation_index():
    h, ell, N, th = 0.5, 4.0, 1, 0.125
    k = truncation_index(h, ell, N, th)
    assert 2.0**-k * th / N <= 3.0**-k * ell
    assert 2.0 ** -(k + 1) * th / N > 3.0 ** -(k + 1) * ell


def test_wedge_boundary():
    f = build_interp_wedge(1.0, 0.5)
    y = np.linspace(0, 0.5, 11)
    assert np.allclose(evaluate(f, np.zeros_like(y), y), -0.5 * y)


def test_branching_N_example():
    p = Params(0.5, 1e-3, 0.5, 0.5)
    assert branching_N(p) == 10
    assert build_composite(ConstructionKind.P26aBranching, p).params_used["N"] == 10


def test_corner_gamma_example():
    assert corner_gamma(1e-4, 1e-4) == pytest.approx(1 / math.log(4.0))
    f = build_composite(ConstructionKind.U6CornerLaminate, Params(1e-4, 4.6e-14, 1e-4, 100.0))
    assert f.params_used["gamma"] == pytest.approx(0.7213, abs=1e-4)
    assert f.params_used["beta_tilde"] == pytest.approx(3e-12 / 4.6e-14)


def test_zero_construction():
    f = build_composite(ConstructionKind.U1Constant, Params(1.0, 1.0, 0.5, 1.0))
    x = np.random.default_rng(0).uniform(-3, 3, 100)
    assert np.all(evaluate(f, x, x) == 0.0)


@pytest.mark.parametrize("kind", COMPOSITES, ids=lambda k: k.value)
@pytest.mark.parametrize("p", REFERENCE[:3], ids=["constant", "branching", "affine"])
def test_composites_continuous(kind, p):
    f = build_composite(kind, p)
    assert check_continuity(f, 64) < 1e-9 * max(p.theta, 1.0)


@pytest.mark.parametrize("kind", COMPOSITES, ids=lambda k: k.value)
def test_composites_scalar_and_symmetric(kind):
    p = Params(1e-5, 1e-13, 1e-3, 0.5)
    f = build_composite(kind, p)
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 2 * p.L, 500)
    y = rng.uniform(-0.5, 1.5, 500)
    a = evaluate(f, x, y)
    b = evaluate(f, 2 * p.L - x, y)
    assert np.all(np.isfinite(a))
    assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


def test_best_dispatch():
    f, r = build_best(Params(1e3, 1e3, 0.5, 0.5))
    assert r is RegimeId.Constant and f.kind == ConstructionKind.U1Constant.value
    f, r = build_best(Params(0.5, 1e-3, 0.5, 0.5))
    assert r is RegimeId.Branching and f.kind == ConstructionKind.P26aBranching.value
    f, r = build_best(Params(0.25, 1.0, 0.5, 2.0))
    assert r is RegimeId.Affine and f.kind == ConstructionKind.U2Affine.value


def test_best_totality():
    rng = np.random.default_rng(2)
    for _ in range(300):
        p = Params(10 ** rng.uniform(-6, 3), 10 ** rng.uniform(-12, 3), 10 ** rng.uniform(-4, math.log10(0.5)),
                   0.5 * 10 ** rng.uniform(0, 3))
        f, r = build_best(p)
        assert r is eval_scaling(p).argmin
        assert f.pieces


def test_building_block_rejected():
    with pytest.raises(DomainError):
        build_composite(ConstructionKind.BranchCell, Params(1, 1, 0.5, 1))
