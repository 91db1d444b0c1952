import math

import numpy as np
import pytest

from scaling_lab import Params
from scaling_lab.constructions import ConstructionKind, build_composite, build_interp_wedge, build_boundary_laminate
from scaling_lab.fields import (
    Affine,
    Piece,
    PiecewiseField,
    Region,
    Zero,
    check_continuity,
    dump_field,
    eval_field,
    eval_gradient,
    evaluate,
    jump_set,
    mirror_extend,
    total_variation,
)


P = Params(0.5, 0.5, 0.5, 0.5)


def test_affine_value():
    f = build_composite(ConstructionKind.U2Affine, P)
    assert eval_field(f, (0.3, 0.5)) == pytest.approx((0.25, 0.0), abs=1e-15)
    g = eval_gradient(f, (0.3, 0.5))
    assert np.allclose(g, [[0.0, 0.5], [0.0, 0.0]])


def test_zero_field():
    f = build_composite(ConstructionKind.U1Constant, P)
    assert eval_field(f, (0.1, 0.9)) == (0.0, 0.0)
    assert np.allclose(eval_gradient(f, (0.1, 0.9)), 0.0)
    assert jump_set(f) == []


def test_wedge_values():
    f = build_interp_wedge(1.0, 0.5)
    assert eval_field(f, (0.5, 0.2))[0] == pytest.approx(0.1, abs=1e-15)
    g = eval_gradient(f, (0.2, 0.4))
    assert g[0][0] == pytest.approx(0.5) and g[0][1] == pytest.approx(-0.5)
    ys = np.linspace(0, 0.5, 7)
    assert np.allclose(evaluate(f, np.zeros_like(ys), ys), -0.5 * ys)


def test_wedge_jump():
    f = build_interp_wedge(1.0, 0.5)
    segs = jump_set(f)
    assert len(segs) == 1
    s = segs[0]
    ends = sorted([s.a, s.b])
    assert np.allclose(ends, [(0.0, 0.0), (1.0, 0.5)])
    assert np.linalg.norm(np.asarray(s.jump)) == pytest.approx(math.sqrt(1 + 0.25), rel=1e-14)
    assert total_variation(segs) == pytest.approx(1.25, rel=1e-14)


def test_wedge_jump_matches_gradients():
    f = build_interp_wedge(1.0, 0.5)
    s = jump_set(f)[0]
    rng = np.random.default_rng(0)
    for t in rng.uniform(0.05, 0.95, 10):
        x = s.a[0] + t * (s.b[0] - s.a[0])
        y = s.a[1] + t * (s.b[1] - s.a[1])
        up = np.asarray(eval_gradient(f, (x - 1e-7, y + 1e-7)))
        lo = np.asarray(eval_gradient(f, (x + 1e-7, y - 1e-7)))
        d = up - lo
        assert np.allclose(np.abs(d), np.abs(np.asarray(s.jump_at(t))), rtol=1e-12, atol=1e-12)


def test_single_piece_continuity():
    f = PiecewiseField((Piece(Region.box(0, 1, 0, 1), Affine(0.0, 1.0, 2.0)),))
    assert check_continuity(f) == 0.0


def test_corrupted_field():
    good = (
        Piece(Region.box(0, 0.5, 0, 1), Affine(0.0, 0.0, 0.5)),
        Piece(Region.box(0.5, 1, 0, 1), Affine(0.0, 0.0, 0.5)),
        Piece(Region.tail(), Zero()),
    )
    f = PiecewiseField(good)
    assert check_continuity(f, within=(0, 1, 0, 1)) < 1e-12
    bad = (good[0], Piece(Region.box(0.5, 1, 0, 1), Affine(1.0, 0.0, 0.5)), good[2])
    assert check_continuity(PiecewiseField(bad), within=(0, 1, 0, 1)) >= 1.0


def test_corner_laminate_continuity():
    p = Params(1e-4, 4.6e-14, 1e-4, 100.0)
    f = build_composite(ConstructionKind.U6CornerLaminate, p)
    assert check_continuity(f, 100) < 1e-12 * p.theta


def test_mirror_zero_and_affine():
    z = PiecewiseField((Piece(Region.tail(), Zero()),), nucleus=(0, 1, 0, 1))
    m = mirror_extend(z, 0.5)
    assert m.seam == ()
    a = PiecewiseField((Piece(Region.box(0, 0.5, 0, 1), Affine(0, 0, 0.5)), Piece(Region.tail(), Zero())),
                       nucleus=(0, 0.5, 0, 1))
    m = mirror_extend(a, 0.5)
    assert total_variation(m.seam) == 0.0
    assert eval_field(m, (0.8, 0.4))[0] == pytest.approx(0.2)
    with pytest.raises(ValueError):
        mirror_extend(m, 0.5)


def test_mirror_symmetry_random():
    p = Params(0.5, 1e-3, 0.5, 0.5)
    f = build_composite(ConstructionKind.P26aBranching, p)
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 2 * p.L, 200)
    y = rng.uniform(0, 1, 200)
    assert np.allclose(evaluate(f, x, y), evaluate(f, 2 * p.L - x, y), rtol=1e-12, atol=1e-14)


def test_laminate_jump_count():
    f = build_composite(ConstructionKind.P26bLaminate, Params(1e-5, 1e-13, 1e-3, 0.5))
    N = int(f.params_used["N"])
    horiz = [s for s in jump_set(f) if abs(s.a[1] - s.b[1]) < 1e-15 and 0 < s.a[1] < 1]
    assert sum(s.count for s in horiz) >= 2 * N - 1


def test_dump_field_lines():
    f = build_boundary_laminate(2, 0.25, 0.25)
    text = dump_field(f)
    lines = text.strip().splitlines()
    assert lines[0].startswith("# field")
    assert sum(1 for ln in lines if ln.startswith("piece ")) == len(f.pieces)
