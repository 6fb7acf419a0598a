"""Finite polyhedral complexes sitting in the hyperplane H of an ambient space.

A cell stores its image polyhedron. Gluing is carried only by the face poset,
so two distinct cells may have the same image. A complex built as a
subdivision of another remembers that parent as ``base``, together with a
``carriers`` map sending each cell to the smallest parent cell containing it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .config import get_tol
from .errors import (DimensionMismatch, IncompatibleComplexes, InputError,
                     PointOutsideCarrier, PointOutsideComplex, UnknownCell)
from .geom import AffineFlat, AmbientSpace, Polyhedron, unit_normal


class Cell:
    __slots__ = ("id", "poly")

    def __init__(self, id, vertices, rays=()):
        self.id = str(id)
        self.poly = Polyhedron(vertices, rays)

    @classmethod
    def from_poly(cls, id, poly: Polyhedron) -> "Cell":
        cell = cls.__new__(cls)
        cell.id = str(id)
        cell.poly = poly
        return cell

    @property
    def dim(self) -> int:
        return self.poly.dim

    @property
    def vertices(self) -> np.ndarray:
        return self.poly.points

    @property
    def rays(self) -> np.ndarray:
        return self.poly.rays

    def __repr__(self):
        return f"Cell({self.id!r}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Point:
    carrier: str
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))


class CombOpen(frozenset):
    """An upward-closed set of cell ids."""

    def __repr__(self):
        return f"CombOpen({sorted(self)})"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "valid"
        return "invalid:\n" + "\n".join(f"  - {v}" for v in self.violations)


class Complex:
    """Cells plus face relations. The face relation is closed transitively on input."""

    def __init__(self, ambient: AmbientSpace, cells, faces=(), base: "Complex | None" = None,
                 carriers: dict | None = None):
        self.ambient = ambient
        self.cells: dict[str, Cell] = {}
        for c in cells:
            if c.id in self.cells:
                raise InputError(f"duplicate cell id {c.id!r}")
            if c.poly.ambient_dim != ambient.dim:
                raise DimensionMismatch(
                    f"cell {c.id!r} lives in dimension {c.poly.ambient_dim}, ambient is {ambient.dim}")
            self.cells[c.id] = c
        direct: dict[str, set] = {k: set() for k in self.cells}
        for child, parent in faces:
            child, parent = str(child), str(parent)
            for x in (child, parent):
                if x not in self.cells:
                    raise UnknownCell(f"face relation mentions unknown cell {x!r}")
            if child != parent:
                direct[parent].add(child)
        self._down = _transitive(direct)
        up: dict[str, set] = {k: set() for k in self.cells}
        for p, ds in self._down.items():
            for c in ds:
                up[c].add(p)
        self._up = {k: frozenset(v) for k, v in up.items()}
        if (base is None) != (carriers is None):
            raise InputError("base and carriers must be given together")
        if base is not None:
            missing = [k for k in self.cells if k not in carriers]
            if missing:
                raise InputError(f"cells without carrier: {missing}")
            bad = [v for v in carriers.values() if v not in base.cells]
            if bad:
                raise UnknownCell(f"carriers reference unknown base cells {bad}")
        self.base = base
        self.carriers = dict(carriers) if carriers is not None else None
        self._maps: dict[int, tuple] = {}
        self._normals: dict = {}
        self._token = object()

    # -- basic queries
    def __contains__(self, cid) -> bool:
        return cid in self.cells

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __repr__(self):
        return f"Complex({len(self)} cells, dim={self.dim})"

    def cell(self, cid) -> Cell:
        try:
            return self.cells[cid]
        except KeyError:
            raise UnknownCell(f"unknown cell {cid!r}") from None

    def dim_of(self, cid) -> int:
        return self.cell(cid).dim

    @property
    def dim(self) -> int:
        return max((c.dim for c in self.cells.values()), default=-1)

    def is_pure(self, open_: "CombOpen | None" = None) -> bool:
        """Every cell of the open lies in a cell of top dimension."""
        ids = set(self.cells) if open_ is None else set(open_)
        n = max((self.dim_of(c) for c in ids), default=-1)
        return all(self.dim_of(c) == n or any(self.dim_of(p) == n for p in self._up[c] & ids)
                   for c in ids)

    def faces_of(self, cid) -> frozenset:
        """Proper faces (transitively)."""
        self.cell(cid)
        return self._down[cid]

    def cofaces_of(self, cid) -> frozenset:
        self.cell(cid)
        return self._up[cid]

    def facets_of(self, cid) -> list[str]:
        d = self.dim_of(cid)
        return [c for c in self.cells if c in self._down[cid] and self.dim_of(c) == d - 1]

    def cofacets_of(self, cid) -> list[str]:
        d = self.dim_of(cid)
        return [c for c in self.cells if c in self._up[cid] and self.dim_of(c) == d + 1]

    def leq(self, a, b) -> bool:
        return a == b or a in self._down[b]

    def cells_of_dim(self, k: int) -> list[str]:
        return [c for c, cell in self.cells.items() if cell.dim == k]

    def closure(self, ids) -> set:
        out = set()
        for c in ids:
            out.add(c)
            out |= self.faces_of(c)
        return out

    def meet(self, a, b) -> list[str]:
        """Maximal common faces of two cells (a valid complex has at most one)."""
        common = (self._down[a] | {a}) & (self._down[b] | {b})
        return [c for c in common if not any(c in self._down[o] for o in common)]

    def minimal_cells(self) -> list[str]:
        return [c for c in self.cells if not self._down[c]]

    def subcomplex(self, ids) -> "Complex":
        keep = self.closure(ids)
        cells = [self.cells[c] for c in self.cells if c in keep]
        pairs = [(c, p) for p in keep for c in self._down[p]]
        carriers = {c: self.carriers[c] for c in keep} if self.base is not None else None
        return Complex(self.ambient, cells, pairs, self.base, carriers)

    def with_metric(self, metric) -> "Complex":
        """Same cells and gluing, different Euclidean structure."""
        pairs = [(c, p) for p in self.cells for c in self._down[p]]
        out = Complex(self.ambient.with_metric(metric), list(self.cells.values()), pairs,
                      self.base, self.carriers)
        out._token = self._token
        return out

    def same_structure(self, other: "Complex") -> bool:
        """Same cells and gluing; the metrics may differ."""
        return self._token is other._token

    def face_pairs(self) -> list[tuple[str, str]]:
        return [(c, p) for p in self.cells for c in self.cells if c in self._down[p]]

    # -- metric data
    def normal(self, tau, sigma) -> np.ndarray:
        """Unit normal to tau pointing into sigma (tau a facet of sigma)."""
        key = (tau, sigma)
        if key not in self._normals:
            t, s = self.cell(tau).poly, self.cell(sigma).poly
            if tau not in self._down[sigma] or s.dim != t.dim + 1:
                raise DimensionMismatch(f"{tau!r} is not a facet of {sigma!r}")
            pointing = s.relint_point() - t.relint_point()
            self._normals[key] = unit_normal(t.flat, s.flat, pointing, self.ambient.metric)
        return self._normals[key]

    # -- lineage
    def root(self) -> "Complex":
        c = self
        while c.base is not None:
            c = c.base
        return c

    def root_carrier(self, cid) -> str:
        c = self
        while c.base is not None:
            cid = c.carriers[cid]
            c = c.base
        return cid

    def carrier_map(self, other: "Complex") -> dict:
        """Map each cell here to the smallest cell of ``other`` containing it.

        Uses recorded carriers when ``other`` is an ancestor, otherwise infers
        carriers geometrically (restricted to matching root cells when both
        complexes share a root). Raises IncompatibleComplexes when some cell
        has no carrier or an ambiguous one.
        """
        key = id(other)
        if key in self._maps:
            return self._maps[key][1]
        m = {c: c for c in self.cells}
        if self.same_structure(other):
            self._maps[key] = (other, m)
            return m
        c = self
        found = False
        while True:
            if c is other:
                found = True
                break
            if c.base is None:
                break
            m = {k: c.carriers[v] for k, v in m.items()}
            c = c.base
        if not found:
            m = self._infer_carriers(other)
        self._maps[key] = (other, m)
        return m

    def _infer_carriers(self, other: "Complex") -> dict:
        shared = self.root() is other.root()
        out = {}
        for cid, cell in self.cells.items():
            r = self.root_carrier(cid) if shared else None
            cands = []
            for oid, ocell in other.cells.items():
                if ocell.dim < cell.dim:
                    continue
                if shared and not other.root().leq(r, other.root_carrier(oid)):
                    continue
                if ocell.poly.contains_poly(cell.poly):
                    cands.append(oid)
            if not cands:
                raise IncompatibleComplexes(f"cell {cid!r} is not contained in any cell of the other complex")
            dmin = min(other.dim_of(o) for o in cands)
            best = [o for o in cands if other.dim_of(o) == dmin]
            if len(best) > 1 and shared:
                best = [o for o in best if other.root_carrier(o) == r] or best
            if len(best) > 1:
                raise IncompatibleComplexes(
                    f"cell {cid!r} has ambiguous carriers {best}; build subdivisions through the library so carriers are recorded")
            out[cid] = best[0]
        return out

    def locate(self, x, root_cell: str | None = None) -> Point:
        """Canonical point with coordinates x, optionally constrained to a root cell."""
        x = np.asarray(x, dtype=float)
        best = None
        for cid, cell in self.cells.items():
            if root_cell is not None and self.root_carrier(cid) != root_cell:
                continue
            if (best is None or cell.dim < self.dim_of(best)) and cell.poly.contains(x):
                best = cid
        if best is None:
            raise PointOutsideComplex(f"point {x.tolist()} lies in no cell")
        return Point(best, x)

    def transfer(self, p: Point, source: "Complex") -> Point:
        """Express a point of ``source`` (same root, or geometric) in this complex."""
        if source is self:
            return canonicalize(self, p)
        if source.root() is self.root():
            q = canonicalize(source, p)
            return self.locate(q.coords, source.root_carrier(q.carrier))
        return self.locate(p.coords)


def _transitive(direct: dict) -> dict:
    out: dict[str, frozenset] = {}

    def visit(k, stack):
        if k in out:
            return out[k]
        if k in stack:
            raise InputError(f"face relation has a cycle through {k!r}")
        stack.add(k)
        acc = set()
        for c in direct[k]:
            acc.add(c)
            acc |= visit(c, stack)
        stack.discard(k)
        out[k] = frozenset(acc)
        return out[k]

    for k in direct:
        visit(k, set())
    return out


# ---------------------------------------------------------------------------
# operations

def validate(cx: Complex) -> ValidationReport:
    rep = ValidationReport()
    tol = get_tol()
    a = cx.ambient.hyperplane
    for cid, cell in cx.cells.items():
        scale = cell.poly.scale
        if np.any(np.abs(cell.vertices @ a - 1.0) > tol * 1e2 * scale):
            rep.violations.append(f"cell {cid!r}: vertex not on the hyperplane a(x) = 1")
        if cell.rays.shape[0] and np.any(np.abs(cell.rays @ a) > tol * 1e2):
            rep.violations.append(f"cell {cid!r}: ray not parallel to the hyperplane")
    for p in cx.cells:
        pp = cx.cells[p].poly
        for c in cx.faces_of(p):
            cp = cx.cells[c].poly
            if cp.dim >= pp.dim or not pp.is_face(cp):
                rep.violations.append(f"face relation ({c!r}, {p!r}): image of {c!r} is not a face of {p!r}")
        children = [c for c in cx.faces_of(p)]
        for face in pp.faces():
            if face is pp:
                continue
            match = [c for c in children if cx.cells[c].dim == face.dim and cx.cells[c].poly.equals(face)]
            if not match:
                rep.violations.append(
                    f"face closure violated: a {face.dim}-dimensional face of {p!r} is not listed in the face poset")
            elif len(match) > 1:
                rep.violations.append(
                    f"cells {match} are faces of {p!r} with the same image; the cell map must be injective")
    ids = list(cx.cells)
    for s, t in combinations(ids, 2):
        m = cx.meet(s, t)
        if len(m) > 1:
            rep.violations.append(f"cells {s!r} and {t!r} have no unique maximal common face (candidates {sorted(m)})")
    return rep


def open_all(cx: Complex) -> CombOpen:
    return CombOpen(cx.cells)


def is_upward_closed(cx: Complex, ids) -> bool:
    s = set(ids)
    return all(cx.cofaces_of(c) <= s for c in s)


def upward_closure(cx: Complex, ids) -> CombOpen:
    out = set()
    for c in ids:
        out.add(c)
        out |= cx.cofaces_of(c)
    return CombOpen(out)


def as_open(cx: Complex, ids) -> CombOpen:
    """Validate and wrap a set of ids as a combinatorial open (None means everything)."""
    if ids is None:
        return open_all(cx)
    s = set(ids)
    unknown = s - set(cx.cells)
    if unknown:
        raise UnknownCell(f"unknown cells {sorted(unknown)}")
    if not is_upward_closed(cx, s):
        raise InputError("open set of cells is not upward closed")
    return CombOpen(s)


def star_open(cx: Complex, tau) -> CombOpen:
    return CombOpen({tau} | set(cx.cofaces_of(tau)))


def restrict(cx: Complex, open_, k: int) -> list[str]:
    return [c for c in cx.cells if c in open_ and cx.dim_of(c) == k]


def canonicalize(cx: Complex, p: Point) -> Point:
    cell = cx.cell(p.carrier)
    if not cell.poly.contains(p.coords):
        raise PointOutsideCarrier(f"point is not in its carrier {p.carrier!r}")
    best = p.carrier
    for f in cx.faces_of(p.carrier):
        if cx.dim_of(f) < cx.dim_of(best) and cx.cells[f].poly.contains(p.coords):
            best = f
    return Point(best, p.coords)


def transport_open(fine: Complex, coarse: Complex, open_) -> CombOpen:
    """Cells of ``fine`` whose carrier in ``coarse`` lies in the open."""
    m = fine.carrier_map(coarse)
    return CombOpen(c for c in fine.cells if m[c] in open_)


def is_subdivision(fine: Complex, coarse: Complex) -> bool:
    if not fine.ambient.same_space(coarse.ambient):
        return False
    if fine is coarse:
        return True
    try:
        m = fine.carrier_map(coarse)
    except IncompatibleComplexes:
        return False
    for c, k in m.items():
        if fine.dim_of(c) > coarse.dim_of(k):
            return False
        if not coarse.cells[k].poly.contains_poly(fine.cells[c].poly):
            return False
    for p in fine.cells:
        for c in fine.faces_of(p):
            if not coarse.leq(m[c], m[p]):
                return False
    by_carrier: dict[str, list] = {k: [] for k in coarse.cells}
    for c, k in m.items():
        by_carrier[k].append(c)
    for k, members in by_carrier.items():
        top = [c for c in members if fine.dim_of(c) == coarse.dim_of(k)]
        if not top:
            return False
        tops = set(top)
        for c in top:
            for f in fine.facets_of(c):
                if m[f] == k and sum(1 for s in fine.cofacets_of(f) if s in tops) != 2:
                    return False
        for c in members:
            if c not in tops and not (fine.cofaces_of(c) & tops):
                return False
    return True


def _fresh_id(base: str, used: set) -> str:
    cand, i = base, 1
    while cand in used:
        cand = f"{base}#{i}"
        i += 1
    used.add(cand)
    return cand


def _minimal_face(cx: Complex, top: str, poly: Polyhedron) -> str:
    best = top
    for f in cx.faces_of(top):
        if cx.dim_of(f) < cx.dim_of(best) and cx.cells[f].poly.contains_poly(poly):
            best = f
    return best


def common_refinement(c1: Complex, c2: Complex) -> Complex:
    """Complex of all nonempty intersections of a cell of c1 with a cell of c2."""
    if c1 is c2:
        return c1
    if not c1.ambient.same_space(c2.ambient):
        raise IncompatibleComplexes("complexes live in different ambient spaces")
    P = c1.root() if c1.root() is c2.root() else None
    found: list[tuple] = []   # (id, poly, root cell or None, carrier in c1)
    used: set = set()
    for t1, cell1 in c1.cells.items():
        for t2, cell2 in c2.cells.items():
            if P is not None:
                r1, r2 = c1.root_carrier(t1), c2.root_carrier(t2)
                mu = P.meet(r1, r2)
                if not mu:
                    continue
                mu = mu[0]
                X = cell1.poly.intersect_poly(cell2.poly)
                if X is None:
                    continue
                X = X.intersect_poly(P.cells[mu].poly)
                if X is None:
                    continue
                if not (cell1.poly.contains_poly(X) and cell2.poly.contains_poly(X)):
                    raise IncompatibleComplexes(f"intersection of {t1!r} and {t2!r} is not a polyhedron of both")
                rc = _minimal_face(P, mu, X)
            else:
                X = cell1.poly.intersect_poly(cell2.poly)
                if X is None:
                    continue
                rc = None
            if any(r == rc and q.dim == X.dim and q.equals(X) for _, q, r, _ in found):
                continue
            if X.equals(cell1.poly):
                name = t1
            elif X.equals(cell2.poly):
                name = t2
            else:
                name = f"{t1}&{t2}"
            found.append((_fresh_id(name, used), X, rc, _minimal_face(c1, t1, X)))
    cells = [Cell.from_poly(i, X) for i, X, _, _ in found]
    pairs = []
    for i, X, r, _ in found:
        for j, Y, s, _ in found:
            if i == j or X.dim >= Y.dim:
                continue
            if P is not None and not P.leq(r, s):
                continue
            if Y.contains_poly(X):
                pairs.append((i, j))
    carriers = {i: k for i, _, _, k in found}
    out = Complex(c1.ambient, cells, pairs, base=c1, carriers=carriers)
    if P is None and not (is_subdivision(out, c1) and is_subdivision(out, c2)):
        raise IncompatibleComplexes("the complexes do not subdivide a common support")
    return out
