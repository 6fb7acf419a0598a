import numpy as np
import pytest

from balpoly import fixtures as fx
from balpoly.complex import (Cell, Complex, Point, as_open, canonicalize, common_refinement, is_subdivision,
                             is_upward_closed, star_open, transport_open, upward_closure, validate)
from balpoly.errors import (InputError, PointOutsideCarrier, PointOutsideComplex, UnknownCell)
from balpoly.geom import AmbientSpace
from balpoly.pafun import min_of_linear


def test_face_poset_is_transitive():
    T = fx.triangle()
    assert T.faces_of("T") == {"a", "b", "c", "ab", "bc", "ac"}
    assert T.cofaces_of("a") == {"ab", "ac", "T"}
    assert sorted(T.facets_of("T")) == ["ab", "ac", "bc"]
    assert T.leq("a", "T") and not T.leq("T", "a")
    assert T.dim == 2 and T.is_pure()


def test_three_rays_is_valid_despite_overlap():
    L = fx.line_in_three_rays()
    assert validate(L).ok
    assert L.cells["s2"].poly.equals(L.cells["s3"].poly)


def test_validate_reports_missing_face():
    amb = AmbientSpace(2)
    cells = [Cell("v0", [[0, 1]]), Cell("e", [[0, 1], [1, 1]])]
    rep = validate(Complex(amb, cells, [("v0", "e")]))
    assert not rep.ok
    assert any("face closure" in v for v in rep.violations)


def test_validate_reports_off_hyperplane_vertex():
    amb = AmbientSpace(2)
    rep = validate(Complex(amb, [Cell("v", [[0, 2]])]))
    assert not rep.ok and "hyperplane" in str(rep)


def test_bad_inputs():
    amb = AmbientSpace(2)
    with pytest.raises(InputError):
        Complex(amb, [Cell("v", [[0, 1]]), Cell("v", [[1, 1]])])
    with pytest.raises(UnknownCell):
        Complex(amb, [Cell("v", [[0, 1]])], [("v", "w")])
    with pytest.raises(InputError):
        Complex(amb, [Cell("a", [[0, 1]]), Cell("b", [[0, 1], [1, 1]])], [("a", "b"), ("b", "a")])


def test_opens():
    F = fx.four_rays()
    assert star_open(F, "tau") == set(F.cells)
    assert star_open(F, "s1") == {"s1"}
    assert is_upward_closed(F, {"s1", "s2"}) and not is_upward_closed(F, {"tau"})
    assert upward_closure(F, ["tau"]) == set(F.cells)
    with pytest.raises(InputError):
        as_open(F, ["tau"])
    with pytest.raises(UnknownCell):
        as_open(F, ["nope"])


def test_canonicalize_and_locate():
    S = fx.segment_complex([0, 1, 2])
    p = canonicalize(S, Point("e0", [1.0, 1.0]))
    assert p.carrier == "v1"
    with pytest.raises(PointOutsideCarrier):
        canonicalize(S, Point("e0", [1.5, 1.0]))
    assert S.locate([1.5, 1.0]).carrier == "e1"
    with pytest.raises(PointOutsideComplex):
        S.locate([5.0, 1.0])


def test_subdivision_lineage_and_transfer():
    X = fx.nine_cones()
    _, S = min_of_linear([[1.0, -1.0, 0.0, 0.0]], X)
    assert is_subdivision(S, X) and not is_subdivision(X, S)
    assert S.root() is X
    m = S.carrier_map(X)
    assert all(X.cells[m[c]].poly.contains_poly(S.cells[c].poly) for c in S.cells)
    x = X.cells["s7"].poly.relint_point()
    q = S.transfer(Point("s7", x), X)
    assert S.root_carrier(q.carrier) == "s7"
    assert transport_open(S, X, star_open(X, "t3")) >= {c for c in S.cells if m[c] == "t3"}


def test_transfer_keeps_sheets_apart():
    L = fx.line_in_three_rays()
    _, S = min_of_linear([[-1.0, 1.0]], L)
    p = S.transfer(Point("s3", np.array([2.0, 1.0])), L)
    assert S.root_carrier(p.carrier) == "s3"


def test_common_refinement_of_segments():
    A = fx.segment_complex([0, 1, 3])
    B = fx.segment_complex([0, 2, 3])
    R = common_refinement(A, B)
    assert len(R.cells_of_dim(1)) == 3
    assert is_subdivision(R, A) and is_subdivision(R, B)


def test_subcomplex_and_metric_copy():
    T = fx.square_two_triangles()
    sub = T.subcomplex(["T1"])
    assert len(sub) == 7 and validate(sub).ok
    G = np.diag([2.0, 3.0, 1.0])
    T2 = T.with_metric(G)
    assert T2.same_structure(T) and not T.same_structure(fx.square_two_triangles())
    n = T2.normal("ab", "T1")
    assert n @ G @ n == pytest.approx(1)
