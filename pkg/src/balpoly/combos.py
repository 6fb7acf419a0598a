"""Convex combinations of points and their polyhedral and balanced refinements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex import Complex, Point, as_open, canonicalize, star_open, transport_open
from .concavity import BetaPositiveWitness, beta_positive_product
from .config import get_tol
from .errors import StarNotContained, WitnessInvalid
from .geom import point_flat_distance
from .pafun import MinSum, PAFunc, affinity_subdivision
from .weights import Weight, product, pullback

COMBO_TOL = 1e-7


@dataclass(eq=False)
class Combo:
    center: Point
    points: list
    coeffs: list

    def scaled(self, eps: float) -> "Combo":
        """Shrink every point toward the center by the factor eps."""
        x = self.center.coords
        pts = [Point(p.carrier, x + eps * (p.coords - x)) for p in self.points]
        return Combo(self.center, pts, list(self.coeffs))


@dataclass(eq=False)
class BalancedWitness:
    complex: Complex
    tau: str
    sigma: list
    weight: Weight
    beta_witness: BetaPositiveWitness | None = None


def check_convex(combo: Combo, tol: float = COMBO_TOL) -> bool:
    nu = np.asarray(combo.coeffs, dtype=float)
    if len(nu) != len(combo.points) or len(nu) == 0:
        return False
    if np.any(nu < -tol) or abs(nu.sum() - 1.0) > tol:
        return False
    X = np.array([p.coords for p in combo.points])
    x = combo.center.coords
    scale = max(1.0, float(np.abs(X).max()), float(np.abs(x).max()))
    return bool(np.linalg.norm(nu @ X - x) <= tol * scale)


def _cofaces_holding(cx: Complex, tau: str, p: Point, open_) -> list[str]:
    q = canonicalize(cx, p)
    return [s for s in cx.cofaces_of(tau) | {tau} if s in open_ and cx.leq(q.carrier, s)]


def check_polyhedral(combo: Combo, cx: Complex, open_=None, tau: str | None = None,
                     sigma: list | None = None) -> bool:
    """Convex, and every point sits in a coface (inside the open) of a cell holding the center."""
    if not check_convex(combo):
        return False
    open_ = as_open(cx, open_)
    c = canonicalize(cx, combo.center)
    if c.carrier not in open_:
        return False
    if tau is None:
        tau = c.carrier
    elif not cx.leq(c.carrier, tau):
        return False
    for i, p in enumerate(combo.points):
        holders = _cofaces_holding(cx, tau, p, open_)
        if sigma is not None:
            if sigma[i] not in holders:
                return False
        elif not holders:
            return False
    return True


def check_balanced(combo: Combo, witness: BalancedWitness | None, b: Weight) -> bool:
    """Polyhedral, the point cells are the distinct k-cofaces of tau, and nu_i d_i = c(sigma_i).

    Without a witness only centers on (n-1)-cells can be decided, since there
    the admissible weights are the nonnegative multiples of b.
    """
    if witness is None:
        return _balanced_top(combo, b)
    cx = witness.complex
    open_ = b.open if cx is b.complex else transport_open(cx, b.complex, b.open)
    tau = witness.tau
    if not check_polyhedral(combo, cx, open_, tau, witness.sigma):
        return False
    k = cx.dim_of(tau) + 1
    if witness.weight.k != k or witness.weight.complex is not cx:
        raise WitnessInvalid("witness weight has the wrong dimension or complex")
    if witness.beta_witness is None:
        raise WitnessInvalid("a positivity witness is required")
    expect = beta_positive_product(witness.beta_witness, b)
    if expect.complex is not cx:
        expect = pullback(expect, cx)
    if not expect.allclose(witness.weight, rel=COMBO_TOL):
        raise WitnessInvalid("witness weight does not match its positivity witness")
    return _distance_equations(combo, cx, tau, witness.sigma, witness.weight)


def _distance_equations(combo, cx, tau, sigma, c: Weight) -> bool:
    k = cx.dim_of(tau) + 1
    cofs = [s for s in cx.cofaces_of(tau) if cx.dim_of(s) == k]
    if len(set(sigma)) != len(sigma) or not set(sigma) <= set(cofs):
        return False
    flat = cx.cells[tau].poly.flat
    G = cx.ambient.metric
    lhs = {s: 0.0 for s in cofs}
    for s, p, nu in zip(sigma, combo.points, combo.coeffs):
        lhs[s] = nu * point_flat_distance(p.coords, flat, G)
    scale = max(1.0, c.mass(), sum(abs(v) for v in lhs.values()))
    return all(abs(lhs[s] - c.get(s)) <= COMBO_TOL * scale for s in cofs)


def _balanced_top(combo: Combo, b: Weight) -> bool:
    cx = b.complex
    if not check_polyhedral(combo, cx, b.open):
        return False
    tau = canonicalize(cx, combo.center).carrier
    if cx.dim_of(tau) != b.k - 1:
        raise WitnessInvalid("centers below codimension one need an explicit positivity witness")
    sigma = []
    for p in combo.points:
        holders = [s for s in _cofaces_holding(cx, tau, p, b.open) if cx.dim_of(s) == b.k]
        if len(holders) != 1:
            return False
        sigma.append(holders[0])
    if len(set(sigma)) != len(sigma):
        return False
    flat = cx.cells[tau].poly.flat
    G = cx.ambient.metric
    cofs = [s for s in cx.cofaces_of(tau) if cx.dim_of(s) == b.k]
    lhs = np.zeros(len(cofs))
    for s, p, nu in zip(sigma, combo.points, combo.coeffs):
        lhs[cofs.index(s)] = nu * point_flat_distance(p.coords, flat, G)
    bv = np.array([b[s] for s in cofs])
    alpha = float(lhs @ bv / (bv @ bv))
    if alpha < -COMBO_TOL:
        return False
    return bool(np.linalg.norm(lhs - alpha * bv) <= COMBO_TOL * max(1.0, np.abs(lhs).sum()))


def _shoot(poly, x, v) -> float:
    """Largest t with x + t v still in the polyhedron."""
    A, b = poly.facets
    av = A @ v
    slack = A @ x + b
    lim = [s / -a for a, s in zip(av, slack) if a < -1e-12]
    return min(lim) if lim else np.inf


def generate_facet_combos(cx: Complex, b: Weight, tau: str, epsilon: float | None = None):
    """Balanced combination centered in the relative interior of an (n-1)-cell."""
    if cx.dim_of(tau) != b.k - 1 or tau not in b.open:
        raise WitnessInvalid("tau must be an (n-1)-cell of the balancing condition's open")
    x = cx.cells[tau].poly.relint_point()
    cofs = cx.cofacets_of(tau)
    normals = [cx.normal(tau, s) for s in cofs]
    limit = min(_shoot(cx.cells[s].poly, x, v) for s, v in zip(cofs, normals))
    eps = 0.5 * limit if np.isfinite(limit) else 1.0
    if epsilon is not None:
        eps = min(eps, float(epsilon))
    total = sum(b[s] for s in cofs)
    nu = [b[s] / total for s in cofs]
    pts = [Point(s, x + eps * v) for s, v in zip(cofs, normals)]
    alpha = eps / total
    witness = BalancedWitness(cx, tau, list(cofs), alpha * b, BetaPositiveWitness([(alpha, [])], b.k))
    return Combo(Point(tau, x), pts, nu), witness


def _segment_pieces(cx: Complex, y, x0) -> list:
    from .geom import null_basis
    u = x0 - y
    u = u / np.linalg.norm(u)
    pieces = [(u, -float(u @ y)), (-u, float(u @ x0))]
    for z in null_basis(np.vstack([u, cx.ambient.hyperplane]), cx.ambient.dim):
        pieces.append((z, -float(z @ y)))
        pieces.append((-z, float(z @ y)))
    return pieces


def generate_point_combo(cx: Complex, b: Weight, y: Point, x0: Point):
    """Balanced combination centered at y with x0 among its points (positive coefficient)."""
    if b.complex is not cx:
        b = pullback(b, cx)
    y = canonicalize(cx, y)
    x0 = canonicalize(cx, x0)
    star = star_open(cx, y.carrier)
    if not star <= b.open:
        raise StarNotContained("the star of the center is not inside the balancing condition's open")
    if not any(cx.leq(x0.carrier, s) for s in star):
        raise StarNotContained("x0 is not in the star of the center")
    if np.linalg.norm(x0.coords - y.coords) <= get_tol():
        raise StarNotContained("x0 coincides with the center")
    n = b.k
    zero = (np.zeros(cx.ambient.dim), 0.0)
    F = MinSum(cx, [[zero] + _segment_pieces(cx, y.coords, x0.coords)])
    S = affinity_subdivision(cx, F)
    g = F.to_pafunc(S)
    c = pullback(b, S)
    for _ in range(n - 1):
        c = product(g, c)
    yS = S.locate(y.coords, cx.root_carrier(y.carrier))
    if S.dim_of(yS.carrier) != 0:
        raise StarNotContained("center did not become a vertex of the subdivision")
    G = S.ambient.metric
    edges = [e for e in S.cofacets_of(yS.carrier) if e in c.open]
    pts, nus, sig = [], [], []
    first = None
    for e in edges:
        poly = S.cells[e].poly
        others = [p for p in poly.points if np.linalg.norm(p - y.coords) > get_tol() * poly.scale]
        if others:
            xi = others[0]
        else:
            r = poly.rays[0]
            xi = y.coords + r / np.sqrt(r @ G @ r)
        v = xi - y.coords
        nus.append(c[e] / np.sqrt(v @ G @ v))
        pts.append(Point(e, xi))
        sig.append(e)
        if np.linalg.norm(xi - x0.coords) <= 1e-7 * max(1.0, poly.scale):
            first = len(pts) - 1
    if first is None:
        raise StarNotContained("no edge of the subdivision joins the center to x0")
    order = [first] + [i for i in range(len(pts)) if i != first]
    total = float(sum(nus))
    alpha = 1.0 / total
    combo = Combo(yS, [pts[i] for i in order], [nus[i] * alpha for i in order])
    witness = BalancedWitness(S, yS.carrier, [sig[i] for i in order], alpha * c,
                              BetaPositiveWitness([(alpha, [g] * (n - 1))], 1))
    return combo, witness


def _value(f, p: Point, source: Complex | None) -> float:
    if isinstance(f, PAFunc):
        if source is not None and source is not f.complex:
            p = f.complex.transfer(p, source)
        return f.evaluate(p)
    return float(f(p))


def concavity_inequality(f, combo: Combo, source: Complex | None = None) -> float:
    """f(center) minus the weighted mean of f at the points."""
    fx = _value(f, combo.center, source)
    return fx - sum(nu * _value(f, p, source) for nu, p in zip(combo.coeffs, combo.points))
