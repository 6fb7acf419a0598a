"""Piecewise affine functions and the subdivisions they induce.

A :class:`PAFunc` stores, per cell, an affine form ``x -> w @ x + c`` on the
hyperplane H. A :class:`MinSum` is a function that is concave on every cell,
written as a sum of minima of affine pieces. Cutting each cell where the
minimizing piece changes gives the affinity subdivision.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .complex import (Cell, Complex, Point, as_open, canonicalize, common_refinement,
                      is_subdivision, star_open, transport_open)
from .config import get_tol
from .errors import (DirectionOutsideCell, FiberInconsistent, FunctionNotDefinedOnComplex,
                     IncompatibleComplexes, InputError, NotCellwiseConcave,
                     PointOutsideComplex)
from .geom import metric_orthonormal, null_basis

CONSISTENCY_TOL = 1e-7


def _canonical_form(poly, w, c, metric):
    """Minimal-norm covector agreeing with w on the cell's directions, same values on the cell."""
    w = np.asarray(w, dtype=float)
    v0 = float(w @ poly.basepoint + c)
    if poly.dim == 0:
        return np.zeros_like(w), v0
    Q = metric_orthonormal(poly.basis, metric)
    wm = (Q @ w) @ (Q @ metric)
    if np.allclose(wm, w, rtol=1e-13, atol=1e-13 * max(1.0, float(np.abs(w).max()))):
        return w, float(c)   # already canonical; keeps files byte-stable
    return wm, v0 - float(wm @ poly.basepoint)


class PAFunc:
    def __init__(self, complex: Complex, data: dict, check: bool = True):
        self.complex = complex
        G = complex.ambient.metric
        out = {}
        for cid, cell in complex.cells.items():
            if cid not in data:
                raise FunctionNotDefinedOnComplex(f"no affine data on cell {cid!r}")
            w, c = data[cid]
            w = np.asarray(w, dtype=float)
            if w.shape != (complex.ambient.dim,):
                raise InputError(f"covector on {cid!r} has wrong length")
            out[cid] = _canonical_form(cell.poly, w, float(c), G)
        extra = set(data) - set(complex.cells)
        if extra:
            raise InputError(f"affine data given for unknown cells {sorted(extra)}")
        self.data = out
        if check:
            bad = self.inconsistencies()
            if bad:
                raise InputError("face consistency violated: " + "; ".join(bad[:5]))

    # -- constructors
    @classmethod
    def from_affine(cls, cx: Complex, w, c: float = 0.0) -> "PAFunc":
        return cls(cx, {cid: (w, c) for cid in cx.cells}, check=False)

    @classmethod
    def zero(cls, cx: Complex) -> "PAFunc":
        return cls.from_affine(cx, np.zeros(cx.ambient.dim))

    @classmethod
    def from_cell_data(cls, cx: Complex, data: dict) -> "PAFunc":
        """Data given on some cells; every other cell inherits it from a coface."""
        full = dict(data)
        for cid in cx.cells:
            if cid in full:
                continue
            src = next((p for p in cx.cofaces_of(cid) if p in data), None)
            if src is None:
                raise FunctionNotDefinedOnComplex(f"cell {cid!r} has no coface with data")
            full[cid] = data[src]
        return cls(cx, full)

    @classmethod
    def from_vertex_values(cls, cx: Complex, vertex_values: dict, ray_values: dict | None = None) -> "PAFunc":
        """Fit per-cell affine data from values at 0-cells and increments along 1-cells.

        ``ray_values`` maps an unbounded 1-cell to ``(direction, increment)``,
        meaning the function grows by ``increment`` along ``direction``.
        """
        ray_values = ray_values or {}
        pts, dirs = [], []
        for vid, val in vertex_values.items():
            cell = cx.cell(vid)
            if cell.dim != 0:
                raise InputError(f"{vid!r} is not a 0-cell")
            pts.append((cell.vertices[0], float(val), vid))
        for rid, (direction, inc) in ray_values.items():
            dirs.append((np.asarray(direction, dtype=float), float(inc), rid))
        data = {}
        for cid, cell in cx.cells.items():
            rows, rhs = [], []
            for p, val, vid in pts:
                if cx.leq(vid, cid):
                    rows.append(np.append(p, 1.0))
                    rhs.append(val)
            for r, inc, rid in dirs:
                if cx.leq(rid, cid):
                    rows.append(np.append(r, 0.0))
                    rhs.append(inc)
            if not rows:
                raise FunctionNotDefinedOnComplex(f"no data determines the function on {cid!r}")
            M, y = np.array(rows), np.array(rhs)
            sol, *_ = np.linalg.lstsq(M, y, rcond=None)
            if np.abs(M @ sol - y).max() > CONSISTENCY_TOL * max(1.0, np.abs(y).max()):
                raise InputError(f"values on {cid!r} are not affine")
            data[cid] = (sol[:-1], sol[-1])
        return cls(cx, data)

    # -- evaluation
    def value_on(self, cid, x) -> float:
        w, c = self.data[cid]
        return float(w @ np.asarray(x, dtype=float) + c)

    def evaluate(self, p: Point) -> float:
        if p.carrier not in self.complex.cells:
            raise PointOutsideComplex(f"carrier {p.carrier!r} is not a cell of the function's complex")
        return self.value_on(p.carrier, p.coords)

    __call__ = evaluate

    def slope(self, cid, v, check: bool = False) -> float:
        v = np.asarray(v, dtype=float)
        if check:
            B = self.complex.cell(cid).poly.basis
            if np.linalg.norm(v - (B @ v) @ B) > 1e3 * get_tol() * max(1.0, np.linalg.norm(v)):
                raise DirectionOutsideCell(f"direction is not parallel to {cid!r}")
        return float(self.data[cid][0] @ v)

    def max_abs_coefficient(self) -> float:
        return max((float(np.abs(w).max(initial=0.0)) for w, _ in self.data.values()), default=0.0)

    def vertex_values(self) -> dict:
        cx = self.complex
        return {v: self.value_on(v, cx.cells[v].vertices[0]) for v in cx.cells_of_dim(0)}

    def inconsistencies(self) -> list[str]:
        cx = self.complex
        out = []
        for s in cx.cells:
            ws, cs = self.data[s]
            for t in cx.faces_of(s):
                wt, ct = self.data[t]
                poly = cx.cells[t].poly
                scale = max(1.0, poly.scale * max(np.abs(ws).max(initial=0), np.abs(wt).max(initial=0)),
                            abs(cs), abs(ct))
                dv = np.abs(poly.points @ (ws - wt) + cs - ct).max()
                dr = np.abs(poly.rays @ (ws - wt)).max() if len(poly.rays) else 0.0
                if max(dv, dr) > CONSISTENCY_TOL * scale:
                    out.append(f"data on {s!r} and its face {t!r} disagree")
        return out

    # -- algebra
    def _aligned(self, other: "PAFunc"):
        a, b = self, other
        if a.complex is b.complex:
            return a, b
        if a.complex.same_structure(b.complex):
            return a, b.on_structure(a.complex)
        try:
            if is_subdivision(a.complex, b.complex):
                return a, b.pullback(a.complex)
            if is_subdivision(b.complex, a.complex):
                return a.pullback(b.complex), b
        except IncompatibleComplexes:
            pass
        R = common_refinement(a.complex, b.complex)
        return a.pullback(R), b.pullback(R)

    def __add__(self, other: "PAFunc") -> "PAFunc":
        a, b = self._aligned(other)
        return PAFunc(a.complex, {k: (w + b.data[k][0], c + b.data[k][1]) for k, (w, c) in a.data.items()},
                      check=False)

    def __rmul__(self, s: float) -> "PAFunc":
        return PAFunc(self.complex, {k: (s * w, s * c) for k, (w, c) in self.data.items()}, check=False)

    __mul__ = __rmul__

    def __neg__(self) -> "PAFunc":
        return (-1.0) * self

    def __sub__(self, other: "PAFunc") -> "PAFunc":
        return self + (-1.0) * other

    def pullback(self, fine: Complex) -> "PAFunc":
        if fine is self.complex:
            return self
        if fine.same_structure(self.complex):
            return self.on_structure(fine)
        m = fine.carrier_map(self.complex)
        return PAFunc(fine, {r: self.data[m[r]] for r in fine.cells}, check=False)

    def on_structure(self, cx: Complex) -> "PAFunc":
        """The same function on a copy of the complex carrying another metric."""
        if not cx.same_structure(self.complex):
            raise FunctionNotDefinedOnComplex("complexes differ")
        return PAFunc(cx, self.data, check=False)

    def __repr__(self):
        return f"PAFunc(on {len(self.complex)} cells)"


def evaluate(f: PAFunc, p: Point) -> float:
    return f.evaluate(p)


def slope(f: PAFunc, sigma, v) -> float:
    return f.slope(sigma, v, check=True)


# ---------------------------------------------------------------------------
# cellwise concave functions

def _piece(p):
    w, c = p
    return np.asarray(w, dtype=float), float(c)


class MinSum:
    """Sum of minima of affine pieces, per cell.

    ``summands`` apply to every cell; ``per_cell`` adds cell-specific ones.
    Each summand is a list of ``(covector, constant)`` pieces.
    """

    def __init__(self, complex: Complex, summands=(), per_cell: dict | None = None):
        self.complex = complex
        self.summands = [[_piece(p) for p in s] for s in summands if len(s)]
        self.per_cell = {k: [[_piece(p) for p in s] for s in v] for k, v in (per_cell or {}).items()}

    def summands_for(self, cid) -> list:
        return self.summands + self.per_cell.get(cid, [])

    def value_on(self, cid, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(min(w @ x + c for w, c in s) for s in self.summands_for(cid)))

    def affine_at(self, cid, x):
        """Affine form of the active pieces at x."""
        x = np.asarray(x, dtype=float)
        W = np.zeros(self.complex.ambient.dim)
        C = 0.0
        for s in self.summands_for(cid):
            vals = [w @ x + c for w, c in s]
            w, c = s[int(np.argmin(vals))]
            W = W + w
            C += c
        return W, C

    def to_pafunc(self, S: Complex) -> PAFunc:
        """Affine data on a subdivision where every summand is affine on every cell."""
        m = S.carrier_map(self.complex)
        return PAFunc(S, {r: self.affine_at(m[r], cell.poly.relint_point()) for r, cell in S.cells.items()},
                      check=False)


def _dominant(R, summand) -> bool:
    tol = get_tol() * 1e3 * R.scale
    W = np.array([w for w, _ in summand])
    C = np.array([c for _, c in summand])
    V = R.points @ W.T + C
    S = R.rays @ W.T if len(R.rays) else np.zeros((0, len(summand)))
    for i in range(len(summand)):
        if np.all(V[:, i:i + 1] <= V + tol) and np.all(S[:, i:i + 1] <= S + tol):
            return True
    return False


def _split(regions, summand):
    out = []
    for R in regions:
        if _dominant(R, summand):
            out.append(R)
            continue
        parts = []
        for i, (wi, ci) in enumerate(summand):
            rows = [np.append(wj - wi, cj - ci) for j, (wj, cj) in enumerate(summand) if j != i]
            P = R.intersect(np.array(rows))
            if P is None or P.dim != R.dim:
                continue
            if not any(P.equals(Q) for Q in parts):
                parts.append(P)
        out.extend(parts)
    return out


def _cellwise_from_pafunc(cx: Complex, f: PAFunc) -> MinSum:
    if not is_subdivision(f.complex, cx):
        raise FunctionNotDefinedOnComplex("the function's complex does not subdivide the target")
    m = f.complex.carrier_map(cx)
    per_cell = {}
    for sid in cx.cells:
        d = cx.dim_of(sid)
        inside = [r for r in f.complex.cells if m[r] == sid]
        pieces = [f.data[r] for r in inside if f.complex.dim_of(r) == d]
        for r in inside:
            ws, cs = f.data[r]
            poly = f.complex.cells[r].poly
            for w, c in pieces:
                tol = CONSISTENCY_TOL * max(1.0, poly.scale)
                if (np.any(poly.points @ (w - ws) + c - cs < -tol)
                        or (len(poly.rays) and np.any(poly.rays @ (w - ws) < -tol))):
                    raise NotCellwiseConcave(f"the function is not concave on cell {sid!r}")
        per_cell[sid] = [pieces]
    return MinSum(cx, per_cell=per_cell)


def affinity_subdivision(cx: Complex, f) -> Complex:
    """Subdivide every cell along the loci where f changes its affine piece."""
    if isinstance(f, PAFunc):
        if f.complex is cx or f.complex.same_structure(cx):
            return cx
        f = _cellwise_from_pafunc(cx, f)
    elif f.complex is not cx:
        raise FunctionNotDefinedOnComplex("the function lives on another complex")
    made = []   # (id, poly, carrier)
    for sid, cell in cx.cells.items():
        regions = [cell.poly]
        for s in f.summands_for(sid):
            if len(s) > 1:
                regions = _split(regions, s)
        if len(regions) == 1 and regions[0] is cell.poly:
            made.append((sid, cell.poly, sid))
            continue
        found = []
        for R in regions:
            for F in R.faces():
                if F.dim < cell.dim and cell.poly.on_boundary(F):
                    continue
                if not any(F.dim == Q.dim and F.equals(Q) for Q in found):
                    found.append(F)
        if len(found) == 1:
            made.append((sid, found[0], sid))
        else:
            made.extend((f"{sid}.{i}", F, sid) for i, F in enumerate(found))
    cells = [Cell.from_poly(i, P) for i, P, _ in made]
    pairs = []
    for i, P, s in made:
        for j, Q, t in made:
            if P.dim < Q.dim and cx.leq(s, t) and Q.contains_poly(P):
                pairs.append((i, j))
    return Complex(cx.ambient, cells, pairs, base=cx, carriers={i: s for i, _, s in made})


def pointwise_min(fs) -> PAFunc:
    """min(f_1, ..., f_m) as a PA function on the subdivision where it is affine per cell."""
    fs = list(fs)
    if not fs:
        raise InputError("need at least one function")
    base = fs[0]
    for g in fs[1:]:
        base, _ = base._aligned(g)
    aligned = [g.pullback(base.complex) if g.complex is not base.complex else g for g in fs]
    cx = base.complex
    F = MinSum(cx, per_cell={k: [[g.data[k] for g in aligned]] for k in cx.cells})
    S = affinity_subdivision(cx, F)
    return F.to_pafunc(S)


def min_of_linear(functionals, cx: Complex):
    """min(0, l_1, ..., l_m) for linear forms l_j on N; returns (function, its subdivision)."""
    funcs = [np.asarray(w, dtype=float) for w in functionals]
    if not funcs:
        return PAFunc.zero(cx), cx
    F = MinSum(cx, [[(np.zeros(cx.ambient.dim), 0.0)] + [(w, 0.0) for w in funcs]])
    S = affinity_subdivision(cx, F)
    return F.to_pafunc(S), S


def _cell_functionals(cx: Complex, sid) -> list:
    """Affine forms cutting out the cell inside H: facet inequalities and +- hull equations."""
    poly = cx.cells[sid].poly
    A, b = poly.facets
    pieces = [(A[j], b[j]) for j in range(A.shape[0])]
    a = cx.ambient.hyperplane
    for u in null_basis(np.vstack([poly.basis, a]), cx.ambient.dim):
        e = -float(u @ poly.basepoint)
        pieces.append((u, e))
        pieces.append((-u, -e))
    return pieces


def regularize(cx: Complex, open_=None):
    """Subdivision and concave function on it that is strictly concave over the open."""
    open_ = as_open(cx, open_)
    cache = cx.__dict__.setdefault("_regularized", {})
    if open_ not in cache:
        zero = (np.zeros(cx.ambient.dim), 0.0)
        summands = [[zero] + _cell_functionals(cx, s) for s in cx.cells if s in open_]
        F = MinSum(cx, summands)
        S = affinity_subdivision(cx, F)
        cache[open_] = (S, F.to_pafunc(S))
    return cache[open_]


DC_MARGIN = 0.1


def dc_decompose(g: PAFunc, open_=None, margin: float = DC_MARGIN):
    """Write g = f1 - f2 with f1, f2 concave on the regularized subdivision."""
    from .weights import product_terms, star_generators
    cx = g.complex
    open_ = as_open(cx, open_)
    S, freg = regularize(cx, open_)
    gS = g.pullback(S)
    openS = transport_open(S, cx, open_)
    t = 0.0
    for tau in S.cells:
        if tau not in openS:
            continue
        for c in star_generators(S, tau):
            fr, _ = product_terms(freg, c, tau)
            gv, _ = product_terms(gS, c, tau)
            if fr <= get_tol():
                continue
            t = max(t, -gv / fr)
    t *= 1.0 + margin
    f2 = t * freg
    return gS + f2, f2


# ---------------------------------------------------------------------------
# concave envelope

class Envelope:
    """Upper concave envelope of a lifted point/ray configuration, evaluated by LP."""

    def __init__(self, points, values, rays, slopes):
        self.points = np.asarray(points, dtype=float)
        self.values = np.asarray(values, dtype=float)
        d = self.points.shape[1]
        self.rays = np.asarray(rays, dtype=float).reshape(-1, d)
        self.slopes = np.asarray(slopes, dtype=float)

    def __call__(self, y) -> float:
        y = np.asarray(y, dtype=float)
        m, s = len(self.points), len(self.rays)
        A = np.vstack([np.hstack([self.points.T, self.rays.T]),
                       np.concatenate([np.ones(m), np.zeros(s)])[None, :]])
        rhs = np.append(y, 1.0)
        obj = -np.concatenate([self.values, self.slopes])
        res = linprog(obj, A_eq=A, b_eq=rhs, bounds=(0, None), method="highs")
        if res.status == 2:
            return -np.inf
        if res.status == 3:
            return np.inf
        if res.status != 0:
            raise RuntimeError(f"envelope LP failed: {res.message}")
        return float(-res.fun)


@dataclass
class EnvelopeReport:
    envelope: Envelope
    equal: bool
    gaps: list = field(default_factory=list)   # (cell, coords, f value, envelope value)


def _maximal_in(cx: Complex, open_) -> list[str]:
    return [c for c in cx.cells if c in open_ and not (cx.cofaces_of(c) & open_)]


def check_fibers(f: PAFunc, open_=None) -> None:
    """Raise FiberInconsistent if two cells with overlapping images disagree there."""
    cx = f.complex
    open_ = as_open(cx, open_)
    top = _maximal_in(cx, open_)
    for i, s in enumerate(top):
        for t in top[i + 1:]:
            X = cx.cells[s].poly.intersect_poly(cx.cells[t].poly)
            if X is None:
                continue
            ws, cs = f.data[s]
            wt, ct = f.data[t]
            scale = max(1.0, X.scale * max(np.abs(ws).max(initial=0), np.abs(wt).max(initial=0)))
            samples = list(X.points) + [X.relint_point()]
            dv = max(abs((ws - wt) @ x + cs - ct) for x in samples)
            dr = max((abs((ws - wt) @ r) for r in X.rays), default=0.0)
            if max(dv, dr) > CONSISTENCY_TOL * scale:
                raise FiberInconsistent(
                    f"cells {s!r} and {t!r} have overlapping images but different values there",
                    cells=(s, t), point=X.relint_point())


def concave_envelope(f: PAFunc, open_=None) -> EnvelopeReport:
    cx = f.complex
    open_ = as_open(cx, open_)
    check_fibers(f, open_)
    pts, vals, rays, slopes = [], [], [], []
    samples = []
    for cid in cx.cells:
        if cid not in open_:
            continue
        poly = cx.cells[cid].poly
        for p in poly.points:
            pts.append(p)
            vals.append(f.value_on(cid, p))
            samples.append((cid, p))
        for r in poly.rays:
            rays.append(r)
            slopes.append(f.slope(cid, r))
            for p in poly.points:
                samples.append((cid, p + r))
        samples.append((cid, poly.relint_point()))
    env = Envelope(pts, vals, rays, slopes)
    gaps = []
    for cid, x in samples:
        fx = f.value_on(cid, x)
        ex = env(x)
        if ex - fx > 1e-7 * max(1.0, abs(fx)):
            gaps.append((cid, x, fx, ex))
    return EnvelopeReport(env, not gaps, gaps)
