"""Metric linear algebra on the ambient space and a small polyhedral kernel.

Everything here works in floating point with the global tolerance from
:mod:`balpoly.config`. Polyhedra are stored by generators (points and rays);
facet descriptions are derived lazily with a double description pass.
"""
from __future__ import annotations

import numpy as np

from .config import get_tol
from .errors import DegenerateInput, DimensionMismatch


def _as_matrix(rows, dim: int) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise DimensionMismatch(f"expected vectors of length {dim}, got {arr.shape[1]}")
    return arr


def _check_metric(metric, dim: int) -> np.ndarray:
    G = np.eye(dim) if metric is None else np.asarray(metric, dtype=float)
    if G.shape != (dim, dim):
        raise DimensionMismatch(f"metric must be {dim}x{dim}, got {G.shape}")
    if not np.allclose(G, G.T, atol=get_tol(), rtol=0):
        raise DegenerateInput("metric is not symmetric")
    if np.linalg.eigvalsh(G).min() <= get_tol():
        raise DegenerateInput("metric is not positive definite")
    return G


class AmbientSpace:
    """The vector space N with a metric and the slicing hyperplane H = {a(x) = 1}."""

    def __init__(self, dim: int, metric=None, hyperplane=None):
        if int(dim) != dim or dim < 1:
            raise DimensionMismatch("ambient dimension must be a positive integer")
        self.dim = int(dim)
        self.metric = _check_metric(metric, self.dim)
        if hyperplane is None:
            hyperplane = np.eye(self.dim)[-1]
        a = np.asarray(hyperplane, dtype=float)
        if a.shape != (self.dim,):
            raise DimensionMismatch(f"hyperplane covector must have length {self.dim}")
        if np.linalg.norm(a) <= get_tol():
            raise DegenerateInput("hyperplane covector is zero")
        self.hyperplane = a
        self.metric.setflags(write=False)
        self.hyperplane.setflags(write=False)

    def inner(self, u, v) -> float:
        return float(np.asarray(u) @ self.metric @ np.asarray(v))

    def norm(self, v) -> float:
        return float(np.sqrt(max(self.inner(v, v), 0.0)))

    def level(self, x) -> float:
        return float(self.hyperplane @ np.asarray(x, dtype=float))

    def with_metric(self, metric) -> "AmbientSpace":
        return AmbientSpace(self.dim, metric, self.hyperplane)

    def same_space(self, other: "AmbientSpace") -> bool:
        """True when dimension and hyperplane agree (metrics may differ)."""
        return self.dim == other.dim and np.allclose(self.hyperplane, other.hyperplane)

    def __eq__(self, other):
        if not isinstance(other, AmbientSpace):
            return NotImplemented
        return self.same_space(other) and np.allclose(self.metric, other.metric)

    def __hash__(self):
        return hash(self.dim)

    def __repr__(self):
        return f"AmbientSpace(dim={self.dim}, hyperplane={self.hyperplane.tolist()})"


class AffineFlat:
    """basepoint + span(direction_basis)."""

    def __init__(self, basepoint, direction_basis=()):
        self.basepoint = np.asarray(basepoint, dtype=float).ravel()
        d = self.basepoint.shape[0]
        self.direction_basis = _as_matrix(direction_basis, d)
        if self.direction_basis.shape[0]:
            s = np.linalg.svd(self.direction_basis, compute_uv=False)
            if s[-1] <= get_tol() * max(1.0, s[0]):
                raise DegenerateInput("direction basis is linearly dependent")

    @property
    def ambient_dim(self) -> int:
        return self.basepoint.shape[0]

    @property
    def dim(self) -> int:
        return self.direction_basis.shape[0]

    @classmethod
    def through(cls, points, directions=()) -> "AffineFlat":
        """Affine hull of points plus the span of directions."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        D = _as_matrix(directions, P.shape[1])
        return cls(P[0], row_basis(np.vstack([P[1:] - P[0], D])))


def row_basis(vectors, rel: float | None = None) -> np.ndarray:
    """Euclidean orthonormal basis (as rows) of the span of the given rows."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.size == 0:
        return np.zeros((0, V.shape[1] if V.ndim == 2 else 0))
    _, s, Wt = np.linalg.svd(V, full_matrices=False)
    rel = get_tol() if rel is None else rel
    rank = int(np.sum(s > rel * max(1.0, s[0] if s.size else 0.0)))
    return Wt[:rank]


def null_basis(rows, dim: int, rel: float | None = None) -> np.ndarray:
    """Orthonormal basis (as rows) of {x : rows @ x = 0}."""
    M = _as_matrix(rows, dim)
    if M.shape[0] == 0:
        return np.eye(dim)
    _, s, Wt = np.linalg.svd(M, full_matrices=True)
    rel = get_tol() if rel is None else rel
    rank = int(np.sum(s > rel * max(1.0, s[0])))
    return Wt[rank:]


def metric_orthonormal(vectors, metric) -> np.ndarray:
    """Rows q_i spanning the same space with q_i^T G q_j = delta_ij."""
    G = np.asarray(metric, dtype=float)
    V = _as_matrix(vectors, G.shape[0])
    if V.shape[0] == 0:
        return V
    L = np.linalg.cholesky(G)
    # rows of V @ L are coordinates in a frame where G becomes the identity
    W = row_basis(V @ L)
    return np.linalg.solve(L.T, W.T).T


def metric_project(v, basis, metric) -> np.ndarray:
    """Metric-orthogonal projection of v onto span(basis)."""
    Q = metric_orthonormal(basis, metric)
    v = np.asarray(v, dtype=float)
    if Q.shape[0] == 0:
        return np.zeros_like(v)
    return (Q @ np.asarray(metric) @ v) @ Q


def _metric_norm(v, G) -> float:
    return float(np.sqrt(max(v @ G @ v, 0.0)))


def unit_normal(tau: AffineFlat, sigma: AffineFlat, pointing, metric=None) -> np.ndarray:
    """Unit vector in sigma's directions, orthogonal to tau's, on the side of ``pointing``."""
    d = sigma.ambient_dim
    G = _check_metric(metric, d)
    tol = get_tol()
    T, S = tau.direction_basis, sigma.direction_basis
    if T.shape[0] and row_basis(np.vstack([S, T])).shape[0] != S.shape[0]:
        raise DimensionMismatch("tau's directions are not contained in sigma's")
    if S.shape[0] - T.shape[0] != 1:
        raise DimensionMismatch(
            f"codimension must be 1, got {S.shape[0] - T.shape[0]}")
    p = np.asarray(pointing, dtype=float)
    scale = max(1.0, _metric_norm(p, G))
    if _metric_norm(p - metric_project(p, S, G), G) > tol * scale * 1e3:
        raise DegenerateInput("pointing vector is not in sigma's direction space")
    w = p - metric_project(p, T, G)
    n = _metric_norm(w, G)
    if n <= tol * scale:
        raise DegenerateInput("pointing vector lies in tau's direction space")
    return w / n


def point_flat_distance(p, flat: AffineFlat, metric=None) -> float:
    G = _check_metric(metric, flat.ambient_dim)
    w = np.asarray(p, dtype=float) - flat.basepoint
    r = w - metric_project(w, flat.direction_basis, G)
    dist = _metric_norm(r, G)
    return 0.0 if dist <= get_tol() * max(1.0, _metric_norm(w, G)) else dist


def gram_volume_ratio(basis, metric_new, metric_old) -> float:
    """Ratio of the volume forms induced on span(basis) by two metrics."""
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    if B.size == 0:
        return 1.0
    Gn = np.asarray(metric_new, dtype=float)
    Go = np.asarray(metric_old, dtype=float)
    dn = np.linalg.det(B @ Gn @ B.T)
    do = np.linalg.det(B @ Go @ B.T)
    if dn <= get_tol() or do <= get_tol():
        raise DegenerateInput("Gram determinant vanishes; basis is dependent")
    return float(np.sqrt(dn / do))


# ---------------------------------------------------------------------------
# double description

def normalize_ray(r) -> np.ndarray:
    """Scale so the largest absolute entry is 1 (first index wins ties)."""
    r = np.asarray(r, dtype=float)
    i = int(np.argmax(np.abs(r)))
    return r / abs(r[i])


def _unit_rows(M: np.ndarray) -> np.ndarray:
    if M.shape[0] == 0:
        return M
    n = np.linalg.norm(M, axis=1)
    keep = n > get_tol()
    M, n = M[keep], n[keep]
    # rows already unit up to rounding stay put, so files round-trip
    n = np.where(np.abs(n - 1.0) <= 8 * np.finfo(float).eps, 1.0, n)
    return M / n[:, None]


def double_description(dim: int, inequalities=(), equalities=()):
    """Generators of the cone {y : A y >= 0, E y = 0}.

    Returns ``(rays, lineality)``: the cone is cone(rays) + span(lineality).
    Rays are unit vectors orthogonal to the lineality space, and extreme
    modulo it. The lineality rows are orthonormal.
    """
    tol = get_tol()
    A = _unit_rows(_as_matrix(inequalities, dim))
    E = _as_matrix(equalities, dim)
    L = null_basis(row_basis(E), dim) if E.shape[0] else np.eye(dim)
    rays: list[np.ndarray] = []
    zsets: list[frozenset] = []

    for i, a in enumerate(A):
        if L.shape[0]:
            lv = L @ a
            j = int(np.argmax(np.abs(lv)))
            if abs(lv[j]) > tol:
                l0 = L[j] * np.sign(lv[j])
                a0 = float(a @ l0)
                rest = np.delete(L, j, axis=0)
                rest = rest - np.outer(rest @ a / a0, l0)
                L = row_basis(rest) if rest.shape[0] else rest
                rays = [r - (a @ r) / a0 * l0 for r in rays]
                zsets = [z | {i} for z in zsets]
                rays.append(l0)
                zsets.append(frozenset(range(i)))
                rays, zsets = _canonical(rays, zsets, L)
                continue
        if not rays:
            continue
        R = np.array(rays)
        vals = R @ a
        pos = [k for k in range(len(rays)) if vals[k] > tol]
        neg = [k for k in range(len(rays)) if vals[k] < -tol]
        zero = [k for k in range(len(rays)) if abs(vals[k]) <= tol]
        new_r = [rays[k] for k in pos] + [rays[k] for k in zero]
        new_z = [zsets[k] for k in pos] + [zsets[k] | {i} for k in zero]
        for p in pos:
            for n in neg:
                common = zsets[p] & zsets[n]
                if any(common <= zsets[q] for q in range(len(rays)) if q != p and q != n):
                    continue
                r = vals[p] * rays[n] - vals[n] * rays[p]
                nr = np.linalg.norm(r)
                if nr <= tol:
                    continue
                new_r.append(r / nr)
                new_z.append(common | {i})
        rays, zsets = _canonical(new_r, new_z, L)
    return (np.array(rays) if rays else np.zeros((0, dim))), L


def _canonical(rays, zsets, L):
    """Project rays off the lineality space, renormalize, drop zeros and duplicates."""
    tol = get_tol()
    out_r, out_z = [], []
    for r, z in zip(rays, zsets):
        if L.shape[0]:
            r = r - (L @ r) @ L
        n = np.linalg.norm(r)
        if n <= tol * 1e2:
            continue
        r = r / n
        dup = False
        for k, s in enumerate(out_r):
            if np.linalg.norm(s - r) <= 1e3 * tol:
                out_z[k] = out_z[k] | z
                dup = True
                break
        if not dup:
            out_r.append(r)
            out_z.append(z)
    return out_r, out_z


def _sort_rays(rays) -> list[np.ndarray]:
    return sorted(rays, key=lambda r: tuple(-np.round(r, 9)))


def cone_extreme_rays(nonneg_vars: int, equalities=()) -> list[np.ndarray]:
    """Extreme rays of {x >= 0 : E x = 0}, each scaled to max entry 1."""
    n = int(nonneg_vars)
    if n == 0:
        return []
    rays, lin = double_description(n, np.eye(n), equalities)
    assert lin.shape[0] == 0, "nonnegative orthant cone cannot contain a line"
    out = []
    for r in rays:
        r = normalize_ray(r)
        r[np.abs(r) <= get_tol()] = 0.0
        out.append(r)
    return _sort_rays(out)


# ---------------------------------------------------------------------------
# polyhedra

def _dedupe(rows: np.ndarray, tol: float) -> np.ndarray:
    out = []
    for r in rows:
        if not any(np.linalg.norm(r - s) <= tol for s in out):
            out.append(r)
    return np.array(out) if out else np.zeros((0, rows.shape[1]))


class Polyhedron:
    """conv(points) + cone(rays) in R^d, with lazily derived facets.

    Lineality is represented by listing both r and -r among the rays.
    """

    def __init__(self, points, rays=()):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.size == 0:
            raise DegenerateInput("a polyhedron needs at least one point")
        d = P.shape[1]
        self.ambient_dim = d
        R = _unit_rows(_as_matrix(rays, d))
        self.scale = max(1.0, float(np.abs(P).max()))
        self.points = _dedupe(P, get_tol() * self.scale)
        self.rays = _dedupe(R, get_tol() * 1e3)
        p0 = self.points[0]
        B = row_basis(np.vstack([self.points[1:] - p0, self.rays]), rel=get_tol() * 1e2)
        self.basepoint = p0
        self.basis = B
        self.dim = B.shape[0]
        self._facets = None
        self._faces = None

    # -- coordinates
    def to_local(self, X) -> np.ndarray:
        return (np.atleast_2d(X) - self.basepoint) @ self.basis.T

    def from_local(self, U) -> np.ndarray:
        return self.basepoint + np.atleast_2d(U) @ self.basis

    @property
    def flat(self) -> AffineFlat:
        return AffineFlat(self.basepoint, self.basis)

    @property
    def bounded(self) -> bool:
        return self.rays.shape[0] == 0

    def _ptol(self) -> float:
        return get_tol() * self.scale * 1e2

    # -- facet description
    @property
    def local_facets(self):
        """(W, w0) with W u + w0 >= 0 describing the polyhedron in local coordinates."""
        if self._facets is None:
            k = self.dim
            if k == 0:
                self._facets = (np.zeros((0, 0)), np.zeros(0))
            else:
                gens = np.vstack([
                    np.hstack([self.to_local(self.points), np.ones((len(self.points), 1))]),
                    np.hstack([self.rays @ self.basis.T, np.zeros((len(self.rays), 1))]),
                ])
                ys, lin = double_description(k + 1, gens)
                keep = []
                for y in ys:
                    w = y[:k]
                    nw = np.linalg.norm(w)
                    if nw > get_tol() * 1e2:
                        keep.append(y / nw)
                F = np.array(keep) if keep else np.zeros((0, k + 1))
                self._facets = (F[:, :k], F[:, k])
        return self._facets

    @property
    def facets(self):
        """Ambient inequalities (A, b): A x + b >= 0 on the affine hull."""
        W, w0 = self.local_facets
        A = W @ self.basis if W.shape[0] else np.zeros((0, self.ambient_dim))
        return A, w0 - A @ self.basepoint

    @property
    def hull_equations(self):
        """Ambient equalities (E, e): E x + e = 0 cut out the affine hull."""
        E = null_basis(self.basis, self.ambient_dim) if self.dim else np.eye(self.ambient_dim)
        return E, -E @ self.basepoint

    # -- predicates
    def hull_distance(self, x) -> float:
        w = np.asarray(x, dtype=float) - self.basepoint
        return float(np.linalg.norm(w - (self.basis @ w) @ self.basis))

    def contains(self, x, tol: float | None = None) -> bool:
        tol = self._ptol() if tol is None else tol
        x = np.asarray(x, dtype=float)
        if self.hull_distance(x) > tol:
            return False
        A, b = self.facets
        return bool(np.all(A @ x + b >= -tol))

    def contains_direction(self, r, tol: float | None = None) -> bool:
        tol = get_tol() * 1e3 if tol is None else tol
        r = np.asarray(r, dtype=float)
        n = np.linalg.norm(r)
        if n == 0:
            return True
        r = r / n
        if np.linalg.norm(r - (self.basis @ r) @ self.basis) > tol:
            return False
        A, _ = self.facets
        return bool(np.all(A @ r >= -tol))

    def contains_poly(self, other: "Polyhedron") -> bool:
        return (all(self.contains(p) for p in other.points)
                and all(self.contains_direction(r) for r in other.rays))

    def equals(self, other: "Polyhedron") -> bool:
        return (self.dim == other.dim and self.contains_poly(other)
                and other.contains_poly(self))

    def in_relint(self, x) -> bool:
        """Point lies in the relative interior (strictly inside every facet)."""
        if not self.contains(x):
            return False
        A, b = self.facets
        return bool(np.all(A @ np.asarray(x) + b > self._ptol()))

    def relint_point(self) -> np.ndarray:
        x = self.points.mean(axis=0)
        if self.rays.shape[0]:
            x = x + self.rays.sum(axis=0)
        return x

    # -- faces
    def _incidence(self):
        A, b = self.facets
        pt = np.abs(self.points @ A.T + b) <= self._ptol() if A.shape[0] else np.zeros((len(self.points), 0), bool)
        rt = np.abs(self.rays @ A.T) <= get_tol() * 1e3 if A.shape[0] else np.zeros((len(self.rays), 0), bool)
        return pt, rt

    def faces(self) -> list["Polyhedron"]:
        """All nonempty faces, including the polyhedron itself, by decreasing dimension."""
        if self._faces is None:
            pt, rt = self._incidence()
            nf = pt.shape[1]
            full = (frozenset(range(len(self.points))), frozenset(range(len(self.rays))))
            seen = {full}
            frontier = [full]
            facet_sets = [(frozenset(np.nonzero(pt[:, j])[0]), frozenset(np.nonzero(rt[:, j])[0]))
                          for j in range(nf)]
            while frontier:
                nxt = []
                for ps, rs in frontier:
                    for fp, fr in facet_sets:
                        cand = (ps & fp, rs & fr)
                        if cand[0] and cand not in seen:
                            seen.add(cand)
                            nxt.append(cand)
                frontier = nxt
            out = []
            for ps, rs in seen:
                if (ps, rs) == full:
                    out.append(self)
                else:
                    out.append(Polyhedron(self.points[sorted(ps)], self.rays[sorted(rs)]))
            out.sort(key=lambda f: -f.dim)
            self._faces = out
        return self._faces

    def is_face(self, other: "Polyhedron") -> bool:
        """True when ``other`` is a nonempty face of this polyhedron."""
        if not self.contains_poly(other):
            return False
        A, b = self.facets
        if A.shape[0] == 0:
            return other.dim == self.dim
        tight = np.ones(A.shape[0], bool)
        for p in other.points:
            tight &= np.abs(A @ p + b) <= self._ptol()
        for r in other.rays:
            tight &= np.abs(A @ r) <= get_tol() * 1e3
        pt, rt = self._incidence()
        sel_p = np.all(pt[:, tight], axis=1)
        sel_r = np.all(rt[:, tight], axis=1) if len(self.rays) else np.zeros(0, bool)
        return (all(other.contains(p) for p in self.points[sel_p])
                and all(other.contains_direction(r) for r in self.rays[sel_r]))

    def on_boundary(self, other: "Polyhedron") -> bool:
        """True when ``other`` (a subset) lies inside some proper face."""
        A, b = self.facets
        for j in range(A.shape[0]):
            if (all(abs(A[j] @ p + b[j]) <= self._ptol() for p in other.points)
                    and all(abs(A[j] @ r) <= get_tol() * 1e3 for r in other.rays)):
                return True
        return False

    # -- operations
    def intersect(self, inequalities=(), equalities=()) -> "Polyhedron | None":
        """Intersection with {W x + w0 >= 0} and {E x + e = 0} (ambient rows [W | w0])."""
        d, k = self.ambient_dim, self.dim
        tol = get_tol()
        Wl, w0l = self.local_facets
        rows = [np.hstack([Wl, w0l[:, None]])] if Wl.shape[0] else []
        eq_rows = []
        for target, src in ((rows, inequalities), (eq_rows, equalities)):
            M = _as_matrix(src, d + 1)
            for row in M:
                w, c = row[:d], row[d]
                wl = self.basis @ w
                cl = float(w @ self.basepoint + c)
                if np.linalg.norm(wl) <= tol * 1e2:
                    if target is rows and cl < -self._ptol():
                        return None
                    if target is eq_rows and abs(cl) > self._ptol():
                        return None
                    continue
                target.append(np.concatenate([wl, [cl]])[None, :])
        if k == 0:
            return self
        rows.append(np.eye(k + 1)[k][None, :])
        ys, lin = double_description(k + 1, np.vstack(rows),
                                     np.vstack(eq_rows) if eq_rows else ())
        pts, dirs = [], []
        for y in ys:
            if y[k] > tol * 1e2:
                pts.append(y[:k] / y[k])
            else:
                dirs.append(y[:k])
        for l in lin:
            dirs.append(l[:k])
            dirs.append(-l[:k])
        if not pts:
            return None
        P = self.from_local(np.array(pts))
        # snap to existing generators to keep coordinates clean
        for i, p in enumerate(P):
            dist = np.linalg.norm(self.points - p, axis=1)
            j = int(np.argmin(dist))
            if dist[j] <= self._ptol():
                P[i] = self.points[j]
        R = np.array(dirs) @ self.basis if dirs else ()
        return Polyhedron(P, R)

    def intersect_poly(self, other: "Polyhedron") -> "Polyhedron | None":
        A, b = other.facets
        E, e = other.hull_equations
        return self.intersect(np.hstack([A, b[:, None]]) if A.shape[0] else (),
                              np.hstack([E, e[:, None]]) if E.shape[0] else ())

    def vertices(self) -> np.ndarray:
        """Extreme points; empty when the polyhedron contains a line."""
        return np.array([f.points[0] for f in self.faces() if f.dim == 0]).reshape(-1, self.ambient_dim)

    def __repr__(self):
        return f"Polyhedron(dim={self.dim}, points={len(self.points)}, rays={len(self.rays)})"

