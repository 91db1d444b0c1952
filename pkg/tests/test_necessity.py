import math

import pytest

from scaling_lab import DomainError, RegimeId, eval_scaling_log
from scaling_lab.logspace import as_float
from scaling_lab.necessity import (
    CASE_IDS,
    THRESHOLD,
    check_case,
    grid_to_level,
    necessity_ratio,
    necessity_sequence,
)


def test_fifteen_cases():
    assert len(CASE_IDS) == 15


def logs(lp):
    return [as_float(v) for v in lp.as_tuple()]


def test_case1_maps():
    mu, eps, th, L = logs(necessity_sequence("1", 5.0))
    assert mu == pytest.approx(math.log(5.0))
    assert eps == pytest.approx(math.log(5.0))
    assert th == pytest.approx(math.log(0.5))
    assert L == pytest.approx(math.log(0.5))


def test_case5b_maps():
    mu, eps, th, L = logs(necessity_sequence("5b", 100.0))
    assert th == pytest.approx(math.log(1e-4))
    assert mu == pytest.approx(math.log(1e-4))
    assert eps == pytest.approx(math.log(math.log(100) * 1e-14))


def test_case8b_maps():
    mu, eps, th, L = logs(necessity_sequence("8b", math.exp(40.0)))
    assert th == pytest.approx(-0.2 * math.log(40.0))
    assert mu == pytest.approx(-(40.0 + math.log(40.0)))
    assert eps == pytest.approx(-(80.0 + 0.6 * math.log(40.0)))


def test_case1_ratio_grows():
    a, b = necessity_ratio("1", 1e3), necessity_ratio("1", 1e4)
    assert 0 < a < b


def test_case2_is_affine_in_log_space():
    lp = necessity_sequence("2", 1e4)
    assert eval_scaling_log(lp).argmin is RegimeId.Affine


def test_case6b_eps_L_dominates():
    assert necessity_ratio("6b", 1e6) < 0


@pytest.mark.parametrize("case", CASE_IDS)
def test_case_passes(case):
    rep = check_case(case)
    assert rep.monotone
    assert abs(rep.final) > THRESHOLD
    assert rep.passed


def test_grid_to_level_case1():
    rep = check_case("1", grid_to_level("1", 1e6))
    assert rep.passed


def test_unknown_case():
    with pytest.raises(DomainError):
        necessity_sequence("9z", 10.0)


def test_small_j_rejected():
    with pytest.raises(DomainError):
        necessity_sequence("1", 1.0)
