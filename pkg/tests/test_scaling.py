import math

import numpy as np
import pytest

from scaling_lab import (
    ALL_REGIMES,
    DomainError,
    LogParams,
    Params,
    RegimeId,
    eval_scaling,
    eval_scaling_log,
    reduced_scaling,
    regime_reduction_check,
    regime_value,
)


def reference_values(mu, eps, th, L):
    """Independent transcription of the eight regime expressions."""
    ln = math.log
    return [
        th**2 * L,
        mu * th**2 * ln(3 + L),
        mu * th**2 * ln(3 + L / mu) + eps * th,
        mu * th**2 * ln(3 + eps * L / (mu * th**2)) + mu * th**2 * ln(3 + eps / (mu**2 * th**2)) + eps**0.5 * th**1.5,
        mu * th**2 * ln(3 + eps * L / (mu * th**2)) + mu * th**2 * ln(3 + th / mu),
        eps ** (2 / 3) * th ** (2 / 3) * L ** (1 / 3) + eps * L,
        (mu * eps * L * ln(3 + th**-2)) ** 0.5 * th + eps * L,
        (mu * eps * L * ln(3 + eps / (mu**3 * th**2 * L))) ** 0.5 * th + eps * L,
    ]


def random_params(rng, n):
    mu = 10 ** rng.uniform(-6, 6, n)
    eps = 10 ** rng.uniform(-12, 6, n)
    th = 10 ** rng.uniform(-6, math.log10(0.5), n)
    L = 0.5 * 10 ** rng.uniform(0, 6, n)
    return zip(mu, eps, th, L)


def test_constant_example():
    p = Params(1e3, 1e3, 0.5, 0.5)
    assert regime_value(p, RegimeId.Constant) == pytest.approx(0.125, rel=1e-15)
    r = eval_scaling(p)
    assert r.argmin is RegimeId.Constant
    assert r.total == pytest.approx(0.125, rel=1e-15)


def test_affine_example():
    p = Params(0.5, 0.5, 0.5, 0.5)
    assert regime_value(p, RegimeId.Affine) == pytest.approx(0.125 * math.log(3.5), rel=1e-14)


def test_branching_vanishes_with_eps():
    p = Params(1.0, 1e-300, 0.5, 1.0)
    assert regime_value(p, RegimeId.Branching) < 1e-190


def test_corner_laminate_example():
    p = Params(1e-4, math.log(100) / 100**7, 1e-4, 100.0)
    r = eval_scaling(p)
    assert r.argmin is RegimeId.CornerLaminate
    assert r.total == pytest.approx(3.4e-12, rel=0.05)


def test_branching_example():
    r = eval_scaling(Params(0.5, 1e-3, 0.5, 0.5))
    assert r.argmin is RegimeId.Branching
    assert r.total == pytest.approx(5.5e-3, rel=0.02)


def test_random_agreement():
    rng = np.random.default_rng(7)
    for mu, eps, th, L in random_params(rng, 2000):
        p = Params(float(mu), float(eps), float(th), float(L))
        ref = reference_values(p.mu, p.eps, p.theta, p.L)
        r = eval_scaling(p)
        for reg, v in zip(ALL_REGIMES, ref):
            assert r.values[reg] == pytest.approx(v, rel=1e-12)
        assert r.total == pytest.approx(min(ref), rel=1e-12)


def test_reduced_scaling():
    p = Params(1e3, 1e3, 0.5, 0.5)
    assert reduced_scaling(p, []) == eval_scaling(p).total
    ref = reference_values(p.mu, p.eps, p.theta, p.L)
    assert reduced_scaling(p, [RegimeId.Constant]) == pytest.approx(min(ref[1:]), rel=1e-12)
    assert reduced_scaling(p, [RegimeId.Constant]) == pytest.approx(1e3 * 0.25 * math.log(3.5), rel=1e-12)
    others = [r for r in ALL_REGIMES if r is not RegimeId.Constant]
    assert reduced_scaling(p, others) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        reduced_scaling(p, ALL_REGIMES)


@pytest.mark.parametrize("kw", [
    dict(mu=0.0), dict(mu=-1.0), dict(eps=0.0), dict(theta=0.6), dict(theta=0.0),
    dict(L=0.4), dict(mu=float("nan")), dict(eps=float("inf")),
])
def test_domain_errors(kw):
    base = dict(mu=1.0, eps=1.0, theta=0.5, L=1.0)
    base.update(kw)
    with pytest.raises(DomainError):
        Params(**base)


def test_log_evaluation_matches():
    p = Params(1e3, 1e3, 0.5, 0.5)
    r = eval_scaling_log(p.to_log())
    assert r.argmin is RegimeId.Constant
    assert r.total == pytest.approx(math.log(0.125), abs=1e-12)
    rng = np.random.default_rng(3)
    for mu, eps, th, L in random_params(rng, 200):
        p = Params(float(mu), float(eps), float(th), float(L))
        a, b = eval_scaling(p), eval_scaling_log(p.to_log())
        assert b.total == pytest.approx(math.log(a.total), abs=1e-10)


def test_log_affine_overflow():
    # eps = e^(1e4) overflows doubles but is fine in log space
    lp = LogParams(math.log(0.5), 1e4, math.log(0.5), math.log(1e4))
    assert eval_scaling_log(lp).argmin is RegimeId.Affine


def test_log_domain():
    with pytest.raises(DomainError):
        LogParams(0.0, 0.0, 0.0, 0.0)


def test_monotone_in_mu_eps_L():
    rng = np.random.default_rng(11)
    for mu, eps, th, L in random_params(rng, 500):
        p = Params(float(mu), float(eps), float(th), float(L))
        base = eval_scaling(p).total
        for k in ("mu", "eps", "L"):
            q = p.replace(**{k: getattr(p, k) * 1.7})
            assert eval_scaling(q).total >= base * (1 - 1e-12)


def test_reduction_checks():
    ids = {i for i, _, _ in regime_reduction_check(Params(2.0, 10.0, 0.5, 1.0))}
    assert not any(i.startswith("i.a") for i in ids)
    assert any(i.startswith("i.b") for i in ids)
    assert all(ok for _, ok, _ in regime_reduction_check(Params(2.0, 10.0, 0.5, 1.0)))
    assert eval_scaling(Params(0.25, 1.0, 0.5, 2.0)).argmin is RegimeId.Affine
    assert eval_scaling(Params(2.0, 0.25 / (8 * 16), 0.5, 4.0)).argmin is RegimeId.Branching


def test_regime_parse():
    assert RegimeId.parse("corner-laminate") is RegimeId.CornerLaminate
    assert RegimeId.parse("Branching") is RegimeId.Branching
    with pytest.raises(ValueError):
        RegimeId.parse("nope")
