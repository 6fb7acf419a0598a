import numpy as np
import pytest

from balpoly.errors import DegenerateInput, DimensionMismatch
from balpoly.geom import (AffineFlat, AmbientSpace, Polyhedron, cone_extreme_rays, double_description,
                          gram_volume_ratio, point_flat_distance, unit_normal)
from oracles import brute_extreme_rays, normal_oracle, volume_ratio_oracle


def test_normal_axis_aligned():
    tau = AffineFlat([0, 0, 1])
    sigma = AffineFlat([0, 0, 1], [[0, 1, 0]])
    assert np.allclose(unit_normal(tau, sigma, [0, 2, 0]), [0, 1, 0])


def test_normal_diagonal_ray():
    tau = AffineFlat([0, 0, 1])
    sigma = AffineFlat([0, 0, 1], [[1, 1, 0]])
    v = unit_normal(tau, sigma, [1, 1, 0])
    assert np.allclose(v, [2 ** -0.5, 2 ** -0.5, 0])


def test_normal_anisotropic_metric_matches_gram_schmidt():
    G = np.diag([4.0, 1.0])
    tau = AffineFlat([0, 0])
    sigma = AffineFlat([0, 0], [[1, 0]])
    v = unit_normal(tau, sigma, [1, 0], G)
    assert np.allclose(v, normal_oracle([], [[1, 0]], [1, 0], G))
    assert np.allclose(v, [0.5, 0])


def test_normal_random_metrics():
    rng = np.random.default_rng(0)
    for _ in range(50):
        A = rng.normal(size=(4, 4))
        G = A @ A.T + 4 * np.eye(4)
        T = rng.normal(size=(2, 4))
        extra = rng.normal(size=4)
        pointing = extra + T.T @ rng.normal(size=2)
        v = unit_normal(AffineFlat(np.zeros(4), T), AffineFlat(np.zeros(4), np.vstack([T, extra])), pointing, G)
        assert np.allclose(v, normal_oracle(T, None, pointing, G), atol=1e-9)
        assert abs(v @ G @ v - 1) < 1e-9
        assert v @ G @ pointing > 0


def test_normal_errors():
    tau = AffineFlat([0, 0, 0])
    sigma = AffineFlat([0, 0, 0], [[1, 0, 0], [0, 1, 0]])
    with pytest.raises(DimensionMismatch):
        unit_normal(tau, sigma, [1, 0, 0])
    line = AffineFlat([0, 0, 0], [[1, 0, 0]])
    with pytest.raises(DegenerateInput):
        unit_normal(line, sigma, [3, 0, 0])


def test_point_flat_distance():
    assert point_flat_distance([3, 4], AffineFlat([0, 0], [[1, 0]])) == pytest.approx(4)
    assert point_flat_distance([5, 0], AffineFlat([0, 0], [[1, 0]])) == 0
    # point -2 p on the line, flat {0}
    assert point_flat_distance([-2.0, 1.0], AffineFlat([0.0, 1.0])) == pytest.approx(2)


def test_gram_volume_ratio():
    assert gram_volume_ratio([[1, 0]], np.diag([4.0, 1.0]), np.eye(2)) == pytest.approx(2)
    assert gram_volume_ratio([[1, 2, 3]], np.eye(3), np.eye(3)) == pytest.approx(1)
    B = np.array([[1.0, 0, 2], [0, 1, 1]])
    assert gram_volume_ratio(B, 9 * np.eye(3), np.eye(3)) == pytest.approx(9)
    rng = np.random.default_rng(1)
    for _ in range(20):
        mats = []
        for _ in range(3):
            A = rng.normal(size=(3, 3))
            mats.append(A @ A.T + np.eye(3))
        B = rng.normal(size=(2, 3))
        G0, G1, G2 = mats
        assert gram_volume_ratio(B, G1, G0) == pytest.approx(volume_ratio_oracle(B, G1, G0))
        assert gram_volume_ratio(B, G2, G0) == pytest.approx(
            gram_volume_ratio(B, G2, G1) * gram_volume_ratio(B, G1, G0))


def test_cone_rays_examples():
    rays = cone_extreme_rays(2)
    assert np.allclose(rays, [[1, 0], [0, 1]])
    rays = cone_extreme_rays(3, [[1, -1, -1]])
    assert np.allclose(rays, brute_extreme_rays(3, [[1, -1, -1]]))
    assert np.allclose(rays, [[1, 1, 0], [1, 0, 1]])


def test_cone_rays_four_rays_balancing():
    s = 2 ** -0.5
    # columns: normals (0,1), (0,-1), (s,s), (-s,s)
    A = np.array([[0, 0, s, -s], [1, -1, s, s]])
    rays = cone_extreme_rays(4, A)
    assert len(rays) == 2
    assert np.allclose(rays[0], [1, 1, 0, 0])
    assert np.allclose(rays[1], np.array([0, np.sqrt(2), 1, 1]) / np.sqrt(2))


def test_cone_rays_match_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(60):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(0, n))
        A = rng.integers(-2, 3, size=(m, n)).astype(float)
        got = cone_extreme_rays(n, A)
        want = brute_extreme_rays(n, A)
        assert len(got) == len(want)
        for r in got:
            assert any(np.allclose(r, w, atol=1e-8) for w in want)
        for r in got:
            assert np.all(r >= -1e-9)
            if m:
                assert np.abs(A @ r).max() < 1e-8


def test_cone_trivial():
    assert cone_extreme_rays(2, [[1, 1]]) == []


def test_double_description_lineality():
    # half plane y >= 0 in R^2: lineality along x
    rays, lin = double_description(2, [[0, 1]])
    assert lin.shape[0] == 1
    assert len(rays) == 1 and np.allclose(np.abs(rays[0]), [0, 1])


def test_ambient_space_checks():
    with pytest.raises(Exception):
        AmbientSpace(2, metric=[[1, 2], [2, 1]])
    amb = AmbientSpace(3)
    assert np.allclose(amb.hyperplane, [0, 0, 1])
    assert amb.norm([3, 4, 0]) == pytest.approx(5)


def test_polyhedron_faces_of_square():
    P = Polyhedron([[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]])
    dims = sorted(F.dim for F in P.faces())
    assert dims == [0] * 4 + [1] * 4 + [2]
    assert P.contains([0.5, 0.5, 1]) and not P.contains([1.5, 0.5, 1])
    assert P.in_relint([0.5, 0.5, 1]) and not P.in_relint([1, 0.5, 1])


def test_polyhedron_with_rays():
    P = Polyhedron([[0, 0, 1]], [[1, 0, 0], [0, 1, 0]])
    assert P.dim == 2 and not P.bounded
    assert P.contains([5, 7, 1]) and not P.contains([-1, 0, 1])
    assert len([F for F in P.faces() if F.dim == 1]) == 2
    Q = P.intersect([[-1, 0, 0, 1]])
    assert Q is not None and Q.contains([1, 3, 1]) and not Q.contains([1.5, 0, 1])
