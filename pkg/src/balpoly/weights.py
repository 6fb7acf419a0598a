"""Weights on combinatorial opens, balancing checks, and the product with PA functions."""
from __future__ import annotations

import numpy as np

from .complex import (CombOpen, Complex, as_open, common_refinement, is_subdivision,
                      is_upward_closed, star_open, transport_open)
from .config import get_tol
from .errors import (FunctionNotDefinedOnComplex, IncompatibleComplexes, InputError,
                     NotASubdivision, NotASubOpen, NotMinkowski, NotPositive)
from .geom import gram_volume_ratio

MINKOWSKI_TOL = 1e-7


class Weight:
    """A real value on every k-cell of an open. Cells outside the open carry nothing."""

    def __init__(self, complex: Complex, k: int, values=None, open_=None):
        self.complex = complex
        self.k = int(k)
        self.open = as_open(complex, open_)
        cells = [c for c in complex.cells if c in self.open and complex.dim_of(c) == self.k]
        vals = dict.fromkeys(cells, 0.0)
        for key, v in (values or {}).items():
            if key not in vals:
                if key not in complex.cells:
                    raise InputError(f"weight refers to unknown cell {key!r}")
                raise InputError(f"cell {key!r} is not a {self.k}-cell of the open")
            vals[key] = float(v)
        self.values = vals

    @property
    def cells(self) -> list[str]:
        return list(self.values)

    def __getitem__(self, cid) -> float:
        return self.values[cid]

    def get(self, cid, default=0.0) -> float:
        return self.values.get(cid, default)

    def vector(self) -> np.ndarray:
        return np.array(list(self.values.values()))

    def support(self, tol: float | None = None) -> list[str]:
        tol = get_tol() if tol is None else tol
        return [c for c, v in self.values.items() if abs(v) > tol]

    def mass(self) -> float:
        return float(sum(abs(v) for v in self.values.values()))

    def is_positive(self, tol: float | None = None) -> bool:
        tol = get_tol() if tol is None else tol
        return all(v >= -tol * max(1.0, self.mass()) for v in self.values.values())

    def _like(self, values) -> "Weight":
        return Weight(self.complex, self.k, values, self.open)

    def _check_compatible(self, other: "Weight"):
        if other.complex is not self.complex or other.k != self.k or other.open != self.open:
            raise IncompatibleComplexes("weights live on different complexes, opens or dimensions")

    def __add__(self, other: "Weight") -> "Weight":
        self._check_compatible(other)
        return self._like({c: v + other.values[c] for c, v in self.values.items()})

    def __sub__(self, other: "Weight") -> "Weight":
        return self + (-1.0) * other

    def __rmul__(self, s: float) -> "Weight":
        return self._like({c: s * v for c, v in self.values.items()})

    __mul__ = __rmul__

    def __neg__(self) -> "Weight":
        return (-1.0) * self

    def allclose(self, other: "Weight", rel: float = 1e-6) -> bool:
        if set(self.values) != set(other.values):
            return False
        scale = max(1.0, self.mass(), other.mass())
        return all(abs(v - other.values[c]) <= rel * scale for c, v in self.values.items())

    def __repr__(self):
        vals = ", ".join(f"{c}: {v:.6g}" for c, v in self.values.items())
        return f"Weight(k={self.k}, {{{vals}}})"


class Infeasible:
    """Returned when no balancing condition exists."""

    def __init__(self, reason: str):
        self.reason = reason

    def __bool__(self):
        return False

    def __repr__(self):
        return f"Infeasible({self.reason!r})"


# ---------------------------------------------------------------------------
# balancing

def residuals(c: Weight) -> dict:
    """Balancing defect at every (k-1)-cell of the open, as vectors of N."""
    cx = c.complex
    out = {}
    if c.k < 1:
        return out
    for tau in cx.cells:
        if tau not in c.open or cx.dim_of(tau) != c.k - 1:
            continue
        acc = np.zeros(cx.ambient.dim)
        for s in cx.cofacets_of(tau):
            acc = acc + c.values[s] * cx.normal(tau, s)
        out[tau] = acc
    return out


def is_minkowski(c: Weight, tol: float = MINKOWSKI_TOL) -> bool:
    mass = c.mass()
    if mass == 0:
        return True
    G = c.complex.ambient.metric
    return all(np.sqrt(r @ G @ r) <= tol * mass for r in residuals(c).values())


def is_minkowski_by_linear_functions(c: Weight, tol: float = MINKOWSKI_TOL) -> bool:
    """Minkowski test through products with coordinate linear functions."""
    from .pafun import PAFunc
    mass = c.mass()
    if mass == 0 or c.k < 1:
        return True
    for w in np.eye(c.complex.ambient.dim):
        p = product(PAFunc.from_affine(c.complex, w), c)
        if any(abs(v) > tol * mass for v in p.values.values()):
            return False
    return True


def _balance_rows(cx: Complex, open_, k: int) -> tuple[list[str], np.ndarray]:
    cells = [c for c in cx.cells if c in open_ and cx.dim_of(c) == k]
    index = {c: i for i, c in enumerate(cells)}
    d = cx.ambient.dim
    rows = []
    for tau in cx.cells:
        if tau not in open_ or cx.dim_of(tau) != k - 1:
            continue
        block = np.zeros((d, len(cells)))
        for s in cx.cofacets_of(tau):
            block[:, index[s]] = cx.normal(tau, s)
        rows.append(block)
    M = np.vstack(rows) if rows else np.zeros((0, len(cells)))
    return cells, M


def positive_cone_generators(cx: Complex, open_, k: int) -> list[Weight]:
    """Extreme rays of the cone of nonnegative k-weights balanced at every (k-1)-cell of the open."""
    from .geom import cone_extreme_rays
    open_ = as_open(cx, open_)
    key = ("gens", frozenset(open_), k)
    cache = cx.__dict__.setdefault("_cone_cache", {})
    if key not in cache:
        cells, M = _balance_rows(cx, open_, k)
        rays = cone_extreme_rays(len(cells), M) if cells else []
        cache[key] = [(cells, r) for r in rays]
    return [Weight(cx, k, dict(zip(cells, r)), open_) for cells, r in cache[key]]


def star_generators(cx: Complex, tau: str) -> list[Weight]:
    """Positive weights on star(tau) of dimension dim(tau)+1, balanced at tau."""
    return positive_cone_generators(cx, star_open(cx, tau), cx.dim_of(tau) + 1)


def find_balancing(cx: Complex, open_=None):
    """Sum of the extreme rays of the positive top-dimensional Minkowski cone, or Infeasible."""
    open_ = as_open(cx, open_)
    if not open_:
        return Infeasible("the open is empty")
    n = max(cx.dim_of(c) for c in open_)
    if not cx.is_pure(open_):
        return Infeasible("the complex is not of pure dimension on the open")
    gens = positive_cone_generators(cx, open_, n)
    if not gens:
        return Infeasible("the only nonnegative Minkowski weight is zero")
    total = gens[0]
    for g in gens[1:]:
        total = total + g
    low = [c for c, v in total.values.items() if v <= get_tol()]
    if low:
        return Infeasible(f"no positive Minkowski weight is nonzero on {sorted(low)}")
    return total


def is_balancing(b: Weight) -> bool:
    cx = b.complex
    n = max((cx.dim_of(c) for c in b.open), default=-1)
    return (b.k == n and is_minkowski(b)
            and all(v > get_tol() for v in b.values.values()))


def is_locally_balanceable(cx: Complex) -> bool:
    return all(bool(find_balancing(cx, star_open(cx, m))) for m in cx.minimal_cells())


# ---------------------------------------------------------------------------
# product, restriction, pullback

def _function_on(f, cx: Complex):
    if f.complex is cx:
        return f
    if f.complex.same_structure(cx):
        return f.on_structure(cx)
    try:
        if is_subdivision(cx, f.complex):
            return f.pullback(cx)
    except IncompatibleComplexes:
        pass
    raise FunctionNotDefinedOnComplex("the function is not defined on the weight's complex")


def product_terms(f, c: Weight, tau: str) -> tuple[float, float]:
    """Product value at tau and the magnitude of its terms (for tolerance scaling)."""
    cx = c.complex
    val, mag = 0.0, 0.0
    for s in cx.cofacets_of(tau):
        cs = c.values.get(s, 0.0)
        if cs == 0.0:
            continue
        t = cs * f.slope(s, cx.normal(tau, s))
        val -= t
        mag += abs(t)
    return val, mag


def product_at(f, c: Weight, tau: str) -> float:
    return product_terms(f, c, tau)[0]


def product_second_form(f, c: Weight) -> Weight:
    """Product computed by evaluating affine data at x and x + v."""
    f = _function_on(f, c.complex)
    cx = c.complex
    vals = {}
    for tau in cx.cells:
        if tau not in c.open or cx.dim_of(tau) != c.k - 1:
            continue
        x = cx.cells[tau].poly.relint_point()
        tot, acc = 0.0, 0.0
        for s in cx.cofacets_of(tau):
            cs = c.values[s]
            tot += cs
            acc += cs * f.value_on(s, x + cx.normal(tau, s))
        vals[tau] = tot * f.value_on(tau, x) - acc
    return Weight(cx, c.k - 1, vals, c.open)


def product(f, c: Weight) -> Weight:
    """The (k-1)-weight f.c; computed from slopes and cross-checked against point evaluations."""
    if c.k < 1:
        raise InputError("cannot multiply a 0-dimensional weight")
    f = _function_on(f, c.complex)
    cx = c.complex
    vals = {}
    for tau in cx.cells:
        if tau in c.open and cx.dim_of(tau) == c.k - 1:
            vals[tau] = product_at(f, c, tau)
    out = Weight(cx, c.k - 1, vals, c.open)
    alt = product_second_form(f, c)
    scale = max(1.0, c.mass() * (1.0 + f.max_abs_coefficient()))
    for tau, v in vals.items():
        if abs(v - alt.values[tau]) > 1e-6 * scale:
            raise FunctionNotDefinedOnComplex(
                f"product forms disagree at {tau!r} ({v} vs {alt.values[tau]}); function data is inconsistent")
    return out


def restrict_weight(c: Weight, smaller_open) -> Weight:
    s = set(smaller_open)
    if not s <= set(c.open) or not is_upward_closed(c.complex, s):
        raise NotASubOpen("target is not an upward-closed subset of the weight's open")
    vals = {k: v for k, v in c.values.items() if k in s}
    return Weight(c.complex, c.k, vals, CombOpen(s))


def pullback(c: Weight, fine: Complex) -> Weight:
    if fine is c.complex:
        return c
    if c.complex.same_structure(fine):
        return Weight(fine, c.k, c.values, c.open)
    if not is_subdivision(fine, c.complex):
        raise NotASubdivision("target complex does not subdivide the weight's complex")
    m = fine.carrier_map(c.complex)
    open_ = transport_open(fine, c.complex, c.open)
    vals = {}
    for r in fine.cells:
        if r in open_ and fine.dim_of(r) == c.k:
            s = m[r]
            vals[r] = c.values[s] if c.complex.dim_of(s) == c.k else 0.0
    return Weight(fine, c.k, vals, open_)


def change_structure(c: Weight, new_metric) -> Weight:
    """Transport to the same complex with another metric, rescaling by volume ratios."""
    cx = c.complex
    new_cx = cx.with_metric(new_metric)
    vals = {}
    for s, v in c.values.items():
        B = cx.cells[s].poly.basis
        vals[s] = v * gram_volume_ratio(B, new_cx.ambient.metric, cx.ambient.metric)
    return Weight(new_cx, c.k, vals, c.open)


def cycles_equal(a: Weight, b: Weight, rel: float = 1e-6) -> bool:
    if a.k != b.k:
        return False
    R = common_refinement(a.complex, b.complex)
    pa, pb = pullback(a, R), pullback(b, R)
    keys = set(pa.values) | set(pb.values)
    scale = max(1.0, pa.mass(), pb.mass())
    return all(abs(pa.get(k) - pb.get(k)) <= rel * scale for k in keys)


def support_subcomplex(c: Weight) -> tuple[Complex, Weight]:
    if not c.is_positive():
        raise NotPositive("weight has negative entries")
    if not is_minkowski(c):
        raise NotMinkowski("weight is not balanced")
    supp = c.support()
    sub = c.complex.subcomplex(supp)
    return sub, Weight(sub, c.k, {s: c.values[s] for s in supp})
