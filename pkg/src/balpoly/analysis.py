"""Empirical checks of the analytic properties of concave functions.

Everything here samples on deterministic barycentric grids. Unbounded cells
are first cut down with :func:`truncate`; distances come from a polyhedral
metric built on a pulling triangulation of the resulting polytopes.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.spatial.distance import pdist

from .complex import Cell, Complex, Point, as_open, canonicalize
from .concavity import is_weakly_concave
from .errors import NotConcaveOnCell, NotWeaklyConcaveMember, UnboundedCell
from .geom import Polyhedron
from .pafun import PAFunc
from .weights import Infeasible, Weight, pullback

DEFAULT_DENSITY = 8
FD_STEPS = (1e-3, 1e-4)
INFINITE_SLOPE = 1e6


# ---------------------------------------------------------------------------
# sampled functions

class SampledFunc:
    """A function on points of ``complex``; PA functions on related complexes are transferred."""

    def __init__(self, fn, complex: Complex | None = None, pa: PAFunc | None = None):
        self.fn = fn
        self.complex = complex
        self.pa = pa
        self._cache: dict = {}

    @classmethod
    def from_pafunc(cls, f: PAFunc) -> "SampledFunc":
        return cls(f.evaluate, f.complex, pa=f)

    def __call__(self, p: Point, source: Complex | None = None) -> float:
        if self.complex is not None and source is not None and source is not self.complex:
            key = (id(source), p.carrier, p.coords.tobytes())
            q = self._cache.get(key)
            if q is None:
                q = self._cache[key] = self.complex.transfer(p, source)
            p = q
        return float(self.fn(p))


def as_sampled(f) -> SampledFunc:
    if isinstance(f, SampledFunc):
        return f
    if isinstance(f, PAFunc):
        return SampledFunc.from_pafunc(f)
    return SampledFunc(f)


# ---------------------------------------------------------------------------
# truncation and triangulation

def truncate(cx: Complex, radius: float = 1.0) -> Complex:
    """Cut every unbounded cell at distance ``radius`` along its rays from its vertices.

    The result has ``base = cx``; cells created on the cut are listed in ``.far``.
    """
    made = []   # (id, poly, carrier, far)
    for sid, cell in cx.cells.items():
        P = cell.poly
        if P.bounded:
            made.append((sid, P, sid, False))
            continue
        new = np.array([v + radius * r for v in P.points for r in P.rays])
        T = Polyhedron(np.vstack([P.points, new]))
        kept = [F for F in T.faces() if not P.on_boundary(F)]
        for i, F in enumerate(kept):
            far = not any(np.allclose(p, q, atol=1e-9) for p in F.points for q in P.points)
            made.append((sid if F is T else f"{sid}~{i}", F, sid, far))
    cells = [Cell.from_poly(i, P) for i, P, _, _ in made]
    pairs = [(i, j) for i, P, s, _ in made for j, Q, t, _ in made
             if P.dim < Q.dim and cx.leq(s, t) and Q.contains_poly(P)]
    K = Complex(cx.ambient, cells, pairs, base=cx, carriers={i: s for i, _, s, _ in made})
    K.far = frozenset(i for i, _, _, far in made if far)
    return K


def _cell_vertices(cx: Complex, cid) -> list:
    ids = [v for v in cx.faces_of(cid) | {cid} if cx.dim_of(v) == 0]
    return [(v, cx.cells[v].poly.points[0]) for v in ids]


def _vid(verts, x) -> str:
    d = [np.linalg.norm(x - c) for _, c in verts]
    return verts[int(np.argmin(d))][0]


def _pulling(poly: Polyhedron, verts, rank) -> list[tuple]:
    """Pulling triangulation: cone from the lowest-ranked vertex over the facets avoiding it."""
    if poly.dim == 0:
        return [(_vid(verts, poly.points[0]),)]
    ids = [_vid(verts, p) for p in poly.points]
    v = min(ids, key=rank)
    out = []
    for F in poly.faces():
        if F.dim != poly.dim - 1:
            continue
        if v in {_vid(verts, p) for p in F.points}:
            continue
        out.extend((v,) + s for s in _pulling(F, verts, rank))
    return out


def _compositions(m: int, parts: int):
    if parts == 1:
        yield (m,)
        return
    for first in range(m, -1, -1):
        for rest in _compositions(m - first, parts - 1):
            yield (first,) + rest


@dataclass
class GridPoint:
    key: tuple
    point: Point
    embedded: np.ndarray = field(repr=False)


class PolyMetric:
    """Distance induced by sending each vertex to a scaled standard basis vector.

    The map is affine on every simplex of a pulling triangulation of the cells.
    """

    def __init__(self, complex: Complex, cells, order=None, scales=None):
        self.complex = complex
        self.cells = set(cells)
        verts = sorted((v for v in self.cells if complex.dim_of(v) == 0),
                       key=list(complex.cells).index)
        if order is not None:
            verts = sorted(verts, key=list(order).index)
        self.vertices = verts
        self.index = {v: i for i, v in enumerate(verts)}
        self.scales = np.ones(len(verts)) if scales is None else np.array([scales[v] for v in verts], float)
        rank = self.index.__getitem__
        tops = [c for c in self.cells if not (complex.cofaces_of(c) & self.cells)]
        self.simplices = []   # (cell, vertex ids, coordinates)
        for c in sorted(tops, key=list(complex.cells).index):
            verts_c = _cell_vertices(complex, c)
            coords = dict(verts_c)
            for s in _pulling(complex.cells[c].poly, verts_c, rank):
                self.simplices.append((c, s, np.array([coords[v] for v in s])))

    def _image(self, weights: dict) -> np.ndarray:
        y = np.zeros(len(self.vertices))
        for v, lam in weights.items():
            y[self.index[v]] += lam * self.scales[self.index[v]]
        return y

    def embed(self, p: Point) -> np.ndarray:
        q = canonicalize(self.complex, p)
        for c, s, V in self.simplices:
            if not self.complex.leq(q.carrier, c):
                continue
            M = np.vstack([V.T, np.ones(len(s))])
            lam, *_ = np.linalg.lstsq(M, np.append(q.coords, 1.0), rcond=None)
            if lam.min() >= -1e-9 and np.linalg.norm(M @ lam - np.append(q.coords, 1.0)) <= 1e-9 * max(1.0, np.abs(V).max()):
                return self._image(dict(zip(s, np.clip(lam, 0.0, None))))
        raise UnboundedCell(f"point {q.coords.tolist()} is outside the metric's compact")

    def distance(self, p: Point, q: Point) -> float:
        return float(np.linalg.norm(self.embed(p) - self.embed(q)))

    __call__ = distance

    def grid(self, density: int = DEFAULT_DENSITY, cells=None) -> list[GridPoint]:
        """Rational barycentric points with denominator ``density`` on every simplex, deduplicated."""
        keep = None if cells is None else self.complex.closure(cells)
        seen = {}
        for c, s, V in self.simplices:
            if keep is not None and c not in keep:
                continue
            for alpha in _compositions(density, len(s)):
                key = tuple(sorted((v, a) for v, a in zip(s, alpha) if a))
                if key in seen:
                    continue
                lam = np.array(alpha, float) / density
                x = lam @ V
                support = [v for v, a in zip(s, alpha) if a]
                carrier = _smallest_holding(self.complex, c, support)
                seen[key] = GridPoint(key, Point(carrier, x), self._image(dict(zip(s, lam))))
        return list(seen.values())


def _smallest_holding(cx: Complex, top, vertex_ids) -> str:
    best = top
    for f in cx.faces_of(top):
        if cx.dim_of(f) < cx.dim_of(best) and set(vertex_ids) <= (cx.faces_of(f) | {f}):
            best = f
    return best


def polyhedral_metric(complex: Complex, compact=None, order=None, scales=None) -> PolyMetric:
    cells = complex.closure(list(complex.cells) if compact is None else compact)
    bad = [c for c in cells if not complex.cells[c].poly.bounded]
    if bad:
        raise UnboundedCell(f"cells {sorted(bad)} are unbounded; truncate first")
    return PolyMetric(complex, cells, order, scales)


def bilipschitz_constant(d1: PolyMetric, d2: PolyMetric, density: int = DEFAULT_DENSITY) -> float:
    """Smallest C with d2/C <= d1 <= C d2 over pairs of grid points."""
    pts = [g.point for g in d1.grid(density)]
    E1 = np.array([d1.embed(p) for p in pts])
    E2 = np.array([d2.embed(p) for p in pts])
    a, b = pdist(E1), pdist(E2)
    ok = (a > 1e-12) & (b > 1e-12)
    r = a[ok] / b[ok]
    return float(max(r.max(), 1.0 / r.min())) if r.size else 1.0


# ---------------------------------------------------------------------------
# estimates

def sample_values(f, metric: PolyMetric, density: int = DEFAULT_DENSITY, cells=None):
    f = as_sampled(f)
    G = metric.grid(density, cells)
    vals = np.array([f(g.point, metric.complex) for g in G])
    return G, vals


def lipschitz_estimate(f, compact, metric: PolyMetric, density: int = DEFAULT_DENSITY) -> float:
    """Largest |f(x) - f(y)| / d(x, y) over pairs of grid points."""
    G, vals = sample_values(f, metric, density, compact)
    if len(G) < 2:
        return 0.0
    E = np.array([g.embedded for g in G])
    d = pdist(E)
    df = pdist(vals[:, None], "cityblock")
    ok = d > 1e-12
    return float((df[ok] / d[ok]).max()) if ok.any() else 0.0


def sup_norm(f, metric: PolyMetric, density: int = DEFAULT_DENSITY, cells=None) -> float:
    _, vals = sample_values(f, metric, density, cells)
    return float(np.abs(vals).max())


def _midpoint_violation(f, cx, cell, pts) -> float:
    worst = 0.0
    for x, y in combinations(pts, 2):
        m = Point(cell, (x.coords + y.coords) / 2)
        gap = (f(x, cx) + f(y, cx)) / 2 - f(m, cx)
        worst = max(worst, gap)
    return worst


def _one_sided(f, cx, cell, e, v) -> float:
    f0 = f(Point(cell, e), cx)
    t1, t2 = FD_STEPS
    d1 = (f(Point(cell, e + t1 * v), cx) - f0) / t1
    d2 = (f(Point(cell, e + t2 * v), cx) - f0) / t2
    D = (t1 * d2 - t2 * d1) / (t1 - t2)
    return np.inf if D > INFINITE_SLOPE else D


def c01_norm(f, complex: Complex, cell, density: int = DEFAULT_DENSITY, tol: float = 1e-9):
    """Sup norm, grid Lipschitz constant and one-sided vertex derivatives of f on a polytope cell.

    ``directional`` maps (vertex, other vertex) to the derivative at the first
    vertex toward the second. Values above 1e6 are reported as +inf.
    """
    P = complex.cells[cell].poly
    if not P.bounded:
        raise UnboundedCell(f"cell {cell!r} is unbounded")
    f = as_sampled(f)
    metric = PolyMetric(complex, complex.closure([cell]))
    G = metric.grid(density)
    pts = [g.point for g in G]
    vals = np.array([f(p, complex) for p in pts])
    scale = max(1.0, float(np.abs(vals).max()))
    if _midpoint_violation(f, complex, cell, pts) > tol * scale * 1e3:
        raise NotConcaveOnCell(f"function is not concave on cell {cell!r}")
    X = np.array([p.coords for p in pts])
    d = pdist(X)
    df = pdist(vals[:, None], "cityblock")
    lip = float((df / d).max()) if len(pts) > 1 else 0.0
    directional = {}
    verts = _cell_vertices(complex, cell)
    for (a, xa), (b, xb) in ((u, w) for u in verts for w in verts if u[0] != w[0]):
        directional[(a, b)] = _one_sided(f, complex, cell, xa, xb - xa)
    return float(np.abs(vals).max()), lip, directional


# ---------------------------------------------------------------------------
# theorem harnesses

def _connected(cx: Complex, open_) -> bool:
    ids = list(open_)
    if not ids:
        return True
    seen, stack = {ids[0]}, [ids[0]]
    while stack:
        c = stack.pop()
        for n in (cx.faces_of(c) | cx.cofaces_of(c)) & open_:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(open_)


def _pa_of(f):
    if isinstance(f, PAFunc):
        return f
    if isinstance(f, SampledFunc):
        return f.pa
    return None


def _certify(f, b) -> bool:
    pa = _pa_of(f)
    if pa is None or isinstance(b, Infeasible) or b is None:
        return False
    return is_weakly_concave(pa, b)


def minimum_principle_check(f, complex: Complex, b, radius: float = 1.0,
                            density: int = DEFAULT_DENSITY, tol: float = 1e-9) -> dict:
    """Look for grid points away from the cut where a nonconstant weakly concave f is minimal."""
    report = {"check": "minimum_principle", "status": "refused", "consistent": False}
    if b is None or isinstance(b, Infeasible):
        report["reason"] = "no balancing condition on this space"
        return report
    open_ = as_open(complex, b.open if b.complex is complex else None)
    if not _connected(complex, open_):
        report["reason"] = "the open is not connected"
        return report
    if not _certify(f, b):
        report["reason"] = "function is not certified weakly concave"
        return report
    K = truncate(complex, radius)
    metric = polyhedral_metric(K)
    f = as_sampled(f)
    G = [g for g in metric.grid(density) if complex.root_carrier(K.carriers[g.point.carrier]) in
         {complex.root_carrier(c) for c in open_}]
    vals = np.array([f(g.point, K) for g in G])
    lo, hi = float(vals.min()), float(vals.max())
    scale = max(1.0, abs(lo), abs(hi))
    flagged = []
    if hi - lo > tol * scale:
        for g, v in zip(G, vals):
            if v <= lo + tol * scale and g.point.carrier not in K.far:
                flagged.append(g.point.coords.tolist())
    report.update(status="ran", min=lo, max=hi, samples=len(G), interior_minima=flagged,
                  consistent=not flagged)
    return report


def convergence_harness(fs, b: Weight, compact=None, limit=None, family=None, radius: float = 1.0,
                        density: int = DEFAULT_DENSITY, eps: float | None = None, jobs: int = 1) -> dict:
    """Uniform bounds, uniform convergence and joint continuity for weakly concave families.

    ``compact`` lists cells of the truncated complex (default: all of it).
    ``limit`` is the pointwise limit; the last member stands in when omitted.
    ``family`` is an optional map t -> function on [0, 1] for the joint-continuity probe.
    """
    fs = list(fs)
    for i, f in enumerate(fs):
        if not _certify(f, b):
            raise NotWeaklyConcaveMember(f"member {i} is not certified weakly concave")
    K = truncate(b.complex, radius)
    metric = polyhedral_metric(K, compact)

    def values(f):
        return sample_values(f, metric, density)[1]

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        lips = list(pool.map(lambda f: lipschitz_estimate(f, None, metric, density), fs))
        table = np.array(list(pool.map(values, fs)))
    ref = values(limit) if limit is not None else table[-1]
    gaps = [float(np.abs(row - ref).max()) for row in table]
    monotone = all(b2 <= a + 1e-9 for a, b2 in zip(gaps, gaps[1:]))
    report = {
        "check": "convergence",
        "members": len(fs),
        "max_lipschitz": float(max(lips)) if lips else 0.0,
        "sup_bound": float(np.abs(table).max()) if len(fs) else 0.0,
        "gaps": gaps,
        "bounded_pass": bool(np.isfinite(max(lips))) if lips else True,
        "uniform_pass": monotone and (eps is None or gaps[-1] < eps),
    }
    if family is not None:
        report["modulus"] = [_joint_modulus(family, metric, T, density) for T in (4, 8)]
        report["joint_pass"] = report["modulus"][1] <= report["modulus"][0] + 1e-9
    report["pass"] = report["bounded_pass"] and report["uniform_pass"] and report.get("joint_pass", True)
    return report


def _joint_modulus(family, metric: PolyMetric, steps: int, density: int) -> float:
    """Largest change of (t, x) -> F_t(x) between neighbouring nodes of a product grid."""
    ts = np.linspace(0.0, 1.0, steps + 1)
    G = metric.grid(density)
    V = np.array([[as_sampled(family(t))(g.point, metric.complex) for g in G] for t in ts])
    E = np.array([g.embedded for g in G])
    D = np.linalg.norm(E[:, None, :] - E[None, :, :], axis=-1)
    h = np.sort(D, axis=1)[:, 1].max() if len(G) > 1 else 0.0
    near = D <= h + 1e-12
    worst = 0.0
    for j in range(len(ts)):
        for k in (j, j + 1):
            if k < len(ts):
                diff = np.abs(V[j][:, None] - V[k][None, :])
                worst = max(worst, float(diff[near].max()))
    return worst


def format_report(report: dict) -> str:
    lines = []
    for k, v in report.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        elif isinstance(v, list) and v and isinstance(v[0], float):
            v = " ".join(f"{x:.6g}" for x in v)
        lines.append(f"{k}={v}")
    return "\n".join(lines)
