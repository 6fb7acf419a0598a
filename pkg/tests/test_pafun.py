import numpy as np
import pytest

from balpoly import fixtures as fx
from balpoly.complex import Point
from balpoly.concavity import is_concave, is_strictly_concave
from balpoly.errors import DirectionOutsideCell, FiberInconsistent, FunctionNotDefinedOnComplex, InputError
from balpoly.pafun import (MinSum, PAFunc, affinity_subdivision, check_fibers, concave_envelope, dc_decompose,
                           evaluate, min_of_linear, pointwise_min, regularize, slope)

from properties import random_function


def test_evaluate_and_slope_on_kink():
    F = fx.four_rays()
    f = fx.four_rays_kink(F)
    assert evaluate(f, Point("s1", [0.0, 1.0, 1.0])) == pytest.approx(-1)
    assert evaluate(f, Point("s3", [2.0, 2.0, 1.0])) == pytest.approx(0)
    assert slope(f, "s1", [0, 1, 0]) == pytest.approx(-1)
    assert slope(f, "s1", [0, 0, 0]) == 0
    with pytest.raises(DirectionOutsideCell):
        slope(f, "s1", [1, 0, 0])


def test_constant_function():
    X = fx.nine_cones()
    f = PAFunc.from_affine(X, np.zeros(4), 3.5)
    assert all(evaluate(f, Point(c, X.cells[c].poly.relint_point())) == pytest.approx(3.5) for c in X.cells)


def test_min_of_linear_on_segment():
    cx = fx.segment_complex([0, 2])
    f, S = min_of_linear([[-1.0, 1.0]], cx)
    verts = sorted(S.cells[v].vertices[0][0] for v in S.cells_of_dim(0))
    assert verts == pytest.approx([0, 1, 2])
    slopes = sorted(f.slope(e, [1, 0]) for e in S.cells_of_dim(1))
    assert slopes == pytest.approx([-1, 0])
    z, same = min_of_linear([], cx)
    assert same is cx and z.max_abs_coefficient() == 0


def test_affinity_subdivision_of_affine_function_is_identity():
    X = fx.nine_cones()
    assert affinity_subdivision(X, fx.nine_cones_function(X)) is X
    F = MinSum(X, [[(np.array([1.0, 0, 0, 0]), 0.0)]])
    S = affinity_subdivision(X, F)
    assert len(S) == len(X)


def test_pointwise_min_is_concave_on_a_fan():
    Q = fx.quadrant_fan()
    a = PAFunc.from_affine(Q, [1.0, 0, 0])
    b = PAFunc.from_affine(Q, [-1.0, 0.5, 0])
    m = pointwise_min([a, b])
    assert is_concave(m)
    x = np.array([0.3, 0.7, 1.0])
    assert m(m.complex.locate(x)) == pytest.approx(min(0.3, -0.3 + 0.35))


def test_bad_function_data():
    F = fx.four_rays()
    with pytest.raises(FunctionNotDefinedOnComplex):
        PAFunc(F, {"tau": ([0, 0, 0], 0.0)})
    data = {c: ([0.0, 0.0, 0.0], 0.0) for c in F.cells}
    data["s1"] = ([0.0, 0.0, 0.0], 1.0)
    with pytest.raises(InputError):
        PAFunc(F, data)


def test_regularize_single_polytope_and_fixtures():
    for cx in (fx.segment_complex([0, 2]), fx.triangle(), fx.four_rays(), fx.nine_cones()):
        S, f = regularize(cx)
        assert is_strictly_concave(f, S)


def test_regularize_is_cached():
    F = fx.four_rays()
    assert regularize(F) is regularize(F)


def test_dc_concave_input_needs_no_correction():
    Q = fx.quadrant_fan()
    g = pointwise_min([PAFunc.from_affine(Q, [1.0, 0, 0]), PAFunc.from_affine(Q, [-1.0, 0, 0])])
    f1, f2 = dc_decompose(g.pullback(g.complex))
    assert is_concave(f1) and is_concave(f2)


def test_dc_of_negated_regularizer():
    cx = fx.segment_complex([0, 1, 3])
    S, freg = regularize(cx)
    g = -freg
    f1, f2 = dc_decompose(g)
    assert is_concave(f1) and is_concave(f2)
    T = f1.complex
    m = T.carrier_map(S)
    for cid, cell in T.cells.items():
        x = cell.poly.relint_point()
        assert g.value_on(m[cid], x) == pytest.approx(f1.value_on(cid, x) - f2.value_on(cid, x), abs=1e-9)


def test_dc_random():
    rng = np.random.default_rng(11)
    for cx in (fx.line_in_three_rays(), fx.quadrant_fan(), fx.square_two_triangles()):
        for _ in range(5):
            g = random_function(cx, rng)
            f1, f2 = dc_decompose(g)
            S = f1.complex
            m = S.carrier_map(cx)
            for cid, cell in S.cells.items():
                x = cell.poly.relint_point()
                assert g.value_on(m[cid], x) == pytest.approx(f1.value_on(cid, x) - f2.value_on(cid, x), abs=1e-9)
            assert is_concave(f1) and is_concave(f2)


def test_envelope_reports_smoothed_kink():
    F = fx.four_rays()
    for n in (2, 4):
        f = fx.four_rays_smoothed(F, n)
        rep = concave_envelope(f)
        assert not rep.equal
        x = np.array([0.0, 1.0, 1.0])
        assert rep.envelope(x) == pytest.approx(0, abs=1e-9)
        p = f.complex.transfer(Point("s1", x), F)
        assert f(p) == pytest.approx(1 / n - 1)


def test_envelope_of_min_of_linear_is_tight():
    Q = fx.quadrant_fan()
    f, _ = min_of_linear([[1.0, 0.5, 0.0], [-1.0, 0.2, 0.0]], Q)
    assert concave_envelope(f).equal


def test_fibers_must_agree():
    with pytest.raises(FiberInconsistent):
        check_fibers(fx.three_rays_function(-1, 1, 0))
    check_fibers(fx.three_rays_function(-1, 1, 1))
