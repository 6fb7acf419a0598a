"""Deciders for strong, plain and weak concavity of PA functions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .complex import Complex, as_open, common_refinement, is_subdivision
from .config import get_tol
from .errors import ComplexMismatch, FiberInconsistent, NotPositive, WitnessNotConcave
from .pafun import PAFunc, concave_envelope
from .weights import (Weight, _function_on, product, product_terms, pullback,
                      star_generators)


class ConcavityClass(enum.Enum):
    STRONG = "Strong"
    CONCAVE = "Concave"
    WEAK = "Weak"
    NONE = "None"

    def __str__(self):
        return self.value


@dataclass
class Classification:
    cls: ConcavityClass
    strong: bool
    concave: bool
    weak: bool
    certificates: list = field(default_factory=list)

    def __str__(self):
        return str(self.cls)


def _threshold(mag: float) -> float:
    return get_tol() * max(1.0, mag)


def concavity_violations(f: PAFunc, open_=None, first_only: bool = False) -> list:
    """(tau, generator, value) triples with (f.c)(tau) < 0 for a star generator c."""
    cx = f.complex
    open_ = as_open(cx, open_)
    out = []
    for tau in cx.cells:
        if tau not in open_:
            continue
        for c in star_generators(cx, tau):
            val, mag = product_terms(f, c, tau)
            if val < -_threshold(mag):
                out.append((tau, c, val))
                if first_only:
                    return out
    return out


def is_concave(f: PAFunc, open_=None) -> bool:
    """Every positive weight on a star, balanced at its center, has nonnegative product there."""
    return not concavity_violations(f, open_, first_only=True)


def is_weakly_concave(f: PAFunc, b: Weight) -> bool:
    fb = _aligned_product(f, b)
    tol = _threshold(b.mass() * (1.0 + f.max_abs_coefficient()))
    return all(v >= -tol for v in fb.values.values())


def _aligned_product(f: PAFunc, b: Weight) -> Weight:
    if f.complex is b.complex or f.complex.same_structure(b.complex) or is_subdivision(b.complex, f.complex):
        return product(f, b)
    if is_subdivision(f.complex, b.complex):
        return product(f, pullback(b, f.complex))
    raise ComplexMismatch("function and balancing condition live on unrelated complexes")


def is_strictly_concave(f: PAFunc, cx: Complex | None = None, open_=None) -> bool:
    cx = f.complex if cx is None else cx
    f = _function_on(f, cx)
    open_ = as_open(cx, open_)
    for tau in cx.cells:
        if tau not in open_:
            continue
        for c in star_generators(cx, tau):
            val, _ = product_terms(f, c, tau)
            if not val > get_tol():
                return False
    return True


def is_strongly_concave(f: PAFunc, open_=None) -> bool:
    try:
        return concave_envelope(f, open_).equal
    except FiberInconsistent:
        return False


@dataclass
class BetaPositiveWitness:
    """Terms (alpha, [f_1, ..., f_m]) of a nonnegative combination of products with b."""
    terms: list
    k: int


def beta_positive_product(w: BetaPositiveWitness, b: Weight) -> Weight:
    terms = []
    for alpha, funcs in w.terms:
        if alpha < 0:
            raise WitnessNotConcave("coefficients must be nonnegative")
        if len(funcs) != b.k - w.k:
            raise WitnessNotConcave(f"need {b.k - w.k} functions per term, got {len(funcs)}")
        c = b
        for g in funcs:
            if not is_concave(g):
                raise WitnessNotConcave("a witness function is not concave")
            if g.complex is not c.complex and is_subdivision(g.complex, c.complex):
                c = pullback(c, g.complex)
            c = product(g, c)
        terms.append(alpha * c)
    if not terms:
        raise WitnessNotConcave("empty witness")
    cx = terms[0].complex
    for t in terms[1:]:
        if t.complex is not cx:
            cx = common_refinement(cx, t.complex)
    total = pullback(terms[0], cx)
    for t in terms[1:]:
        total = total + pullback(t, cx)
    if not total.is_positive(tol=1e-7):
        raise NotPositive("product of concave functions with the balancing condition is not positive")
    return total


def classify(f: PAFunc, b: Weight) -> Classification:
    certs = []
    weak = is_weakly_concave(f, b)
    viol = concavity_violations(f, first_only=True)
    concave = not viol
    if viol:
        tau, c, val = viol[0]
        certs.append(("concave", tau, dict(c.values), val))
    try:
        rep = concave_envelope(f, b.open if f.complex is b.complex else None)
        strong = rep.equal
        if rep.gaps:
            cid, x, fx, ex = rep.gaps[0]
            certs.append(("strong", cid, x.tolist(), fx, ex))
    except FiberInconsistent as exc:
        strong = False
        certs.append(("fiber", exc.cells))
    if weak and concave and strong:
        cls = ConcavityClass.STRONG
    elif weak and concave:
        cls = ConcavityClass.CONCAVE
    elif weak:
        cls = ConcavityClass.WEAK
    else:
        cls = ConcavityClass.NONE
    if (strong and not concave) or (concave and not weak):
        certs.append(("hierarchy", strong, concave, weak))
    return Classification(cls, strong, concave, weak, certs)
