import math

import numpy as np
import pytest

from scaling_lab import DomainError, Params, eval_scaling
from scaling_lab.constructions import (
    ConstructionKind,
    build_best,
    build_boundary_laminate,
    build_composite,
    build_exterior_flow,
    build_interp_wedge,
)
from scaling_lab.energy import (
    QuadratureSpec,
    TailMode,
    WellSet,
    elastic_austenite,
    elastic_martensite,
    energy_ratio,
    flow_energy,
    flow_tail_bound,
    laminate_energy_closed_form,
    lemma_laminate_ratio,
    misfit_density,
    surface_exact,
    total_energy,
)


def test_wellset():
    w = WellSet(0.3)
    assert w.dist2(np.zeros((2, 2))) == pytest.approx(0.3**2 / 2)
    assert w.slopes() == (0.3, 0.3 - 1.0)


def test_misfit_density_wells():
    assert misfit_density(0.0, 0.5, 0.5) == 0.0
    assert misfit_density(0.0, -0.5, 0.5) == 0.0
    assert misfit_density(0.0, 0.0, 0.5) == pytest.approx(0.125)
    assert misfit_density(0.0, 0.0, 0.5, form="scalar") == pytest.approx(0.25)


def test_zero_field_anchor():
    p = Params(1e3, 1e3, 0.5, 0.5)
    f = build_composite(ConstructionKind.U1Constant, p)
    e = total_energy(f, p)
    assert e.elastic_martensite == pytest.approx(0.125, rel=1e-12)
    assert e.elastic_austenite == 0.0 and e.tail_estimate == 0.0
    assert e.surface == 0.0
    assert e.total == pytest.approx(0.125, rel=1e-12)


def test_constant_ratio_is_one():
    assert energy_ratio(Params(1e3, 1e3, 0.5, 0.5)) == pytest.approx(1.0, rel=1e-12)


def test_affine_interior_anchor():
    p = Params(0.5, 0.5, 0.5, 0.5)
    f = build_composite(ConstructionKind.U2Affine, p)
    assert elastic_martensite(f, p.theta) < 1e-14


def test_wedge_anchors():
    f = build_interp_wedge(1.0, 0.5)
    assert surface_exact(f, 1.0) == pytest.approx(1.25, rel=1e-12)
    # constant misfit (theta/beta)^2 over the upper triangle of area beta*theta/2,
    # plus the d2 mismatch of the sym form which vanishes on both branches
    assert elastic_martensite(f, 0.5) == pytest.approx(0.25 * 0.25, rel=1e-12)


@pytest.mark.parametrize("bt,th", [(0.3, 0.5), (2.0, 0.1), (10.0, 0.25)])
def test_wedge_tv_formula(bt, th):
    f = build_interp_wedge(bt, th)
    assert surface_exact(f, 1.0) == pytest.approx(bt + th**2 / bt, rel=1e-12)


def test_laminate_matches_closed_form():
    for N, h, th in [(1, 0.5, 0.5), (3, 0.1, 0.25), (2, 1e-3, 0.1)]:
        f = build_boundary_laminate(N, h, th)
        val, tail = elastic_austenite(f, 1.0)
        assert tail == 0.0
        assert val == pytest.approx(laminate_energy_closed_form(N, h, th), rel=1e-9)


def test_laminate_lemma_ratio_finite():
    r = lemma_laminate_ratio(2, 0.25, 0.25)
    assert 0 < r < 10


def test_flow_truncation_consistency():
    f = build_exterior_flow(1.0, 2.0, 2.0, 0.5)
    e = f.flows[0].expr
    v64, t64 = flow_energy(e, 64.0)
    v128, _ = flow_energy(e, 128.0)
    assert 0 < v128 - v64 <= t64
    assert 0.25 * flow_tail_bound(e, 128.0) < t64


def test_flow_tail_decreases_with_radius():
    f = build_exterior_flow(1.0, 2.0, 2.0, 0.5)
    _, t1 = elastic_austenite(f, 1.0, QuadratureSpec(truncation_radius=64.0))
    _, t2 = elastic_austenite(f, 1.0, QuadratureSpec(truncation_radius=256.0))
    assert t2 < t1


def test_fitted_tail_mode_close():
    f = build_exterior_flow(1.0, 2.0, 2.0, 0.5)
    a, _ = elastic_austenite(f, 1.0, QuadratureSpec(tail_mode=TailMode.analytic))
    b, _ = elastic_austenite(f, 1.0, QuadratureSpec(tail_mode=TailMode.fitted))
    assert b == pytest.approx(a, rel=1e-6)


def test_budget_exceeded():
    p = Params(0.5, 1e-3, 0.5, 0.5)
    f = build_composite(ConstructionKind.P26aBranching, p)
    with pytest.raises(DomainError):
        total_energy(f, p, QuadratureSpec(max_cells=3))


def test_order_convergence():
    for p in [Params(0.5, 1e-3, 0.5, 0.5), Params(0.25, 1.0, 0.5, 2.0), Params(1e-4, 4.6e-14, 1e-4, 100.0)]:
        f, _ = build_best(p)
        a = total_energy(f, p, QuadratureSpec(order=8))
        b = total_energy(f, p, QuadratureSpec(order=16))
        assert b.elastic_martensite == pytest.approx(a.elastic_martensite, rel=1e-6, abs=1e-300)
        assert b.elastic_austenite == pytest.approx(a.elastic_austenite, rel=1e-6, abs=1e-300)


def test_branching_sandwich_example():
    p = Params(0.5, 1e-3, 0.5, 0.5)
    f, _ = build_best(p)
    e = total_energy(f, p)
    I = eval_scaling(p).total
    assert I <= e.total <= 100 * I
    parts = (e.elastic_martensite, e.elastic_austenite, e.surface, e.tail_estimate)
    assert all(v >= 0 for v in parts)
    assert e.total == pytest.approx(math.fsum(parts[:3]), rel=1e-15)


def test_branching_ratio_bounded_in_eps():
    ratios = [energy_ratio(Params(0.5, 10.0**-k, 0.5, 0.5)) for k in range(3, 7)]
    assert max(ratios) / min(ratios) < 5
