"""Acceptance run: one PASS/FAIL line per criterion, then a hard assert."""
import time

import numpy as np
from balpoly import fixtures as fx
from balpoly.analysis import convergence_harness, lipschitz_estimate, polyhedral_metric, sup_norm, truncate
from balpoly.combos import BalancedWitness, Combo, check_balanced, check_convex, check_polyhedral
from balpoly.complex import Point, star_open
from balpoly.concavity import BetaPositiveWitness, ConcavityClass, classify, is_concave, is_strictly_concave
from balpoly.pafun import PAFunc, dc_decompose, regularize
from balpoly.weights import Infeasible, find_balancing, positive_cone_generators, product, product_at

from oracles import brute_is_concave
from properties import CHECKS, fixture_cases, random_function
from small_complexes import small_complexes


def report(capsys, n, ok, detail=""):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else ""))
    assert ok, detail


def test_criterion_1_four_rays_generators(capsys):
    t0 = time.perf_counter()
    F = fx.four_rays()
    gens = positive_cone_generators(F, star_open(F, "tau"), 1)
    got = sorted(tuple(g.values[s] / max(g.values.values()) for s in ("s1", "s2", "s3", "s4")) for g in gens)
    want = sorted([(1.0, 1.0, 0.0, 0.0), (0.0, 1.0, 2 ** -0.5, 2 ** -0.5)])
    gens_ok = len(got) == 2 and all(np.abs(np.subtract(a, b)).max() < 1e-6 for a, b in zip(got, want))
    f = fx.four_rays_kink(F)
    c1, c2 = fx.four_rays_generators(F)
    prod_ok = abs(product_at(f, c1, "tau") - 1) < 1e-9 and abs(product_at(f, c2, "tau")) < 1e-9
    dt = time.perf_counter() - t0
    report(capsys, 1, gens_ok and prod_ok and dt < 1, f"{dt:.3f}s")


def test_criterion_2_nine_cones(capsys):
    t0 = time.perf_counter()
    X = fx.nine_cones()
    b = fx.nine_cones_balancing(X)
    f = fx.nine_cones_function(X)
    fb = product(f, b)
    first = [fb.values[t] for t in ("t1", "t2", "t3", "t4", "t5")]
    ffb = product(f, fb).values["o"]
    ok = (np.abs(np.subtract(first, [1, 1, 0, 0, 0])).max() < 1e-6 and abs(ffb + 1) < 1e-6
          and classify(f, b).cls is ConcavityClass.WEAK)
    dt = time.perf_counter() - t0
    report(capsys, 2, ok and dt < 1, f"{dt:.3f}s")


def test_criterion_3_three_rays_table(capsys):
    L = fx.line_in_three_rays()
    b = fx.three_rays_balancing(L, 1.0, 1.0)
    table = {(-1, 1, 1): ConcavityClass.STRONG, (-1, 1, 0): ConcavityClass.CONCAVE,
             (-1, 2, 0): ConcavityClass.WEAK, (1, 1, 1): ConcavityClass.NONE}
    ok = True
    for (a1, a2, a3), want in table.items():
        r = classify(fx.three_rays_function_on(L, a1, a2, a3), b)
        # closed-form conditions for this family with unit gluing weights
        strong = -a1 >= a2 == a3
        concave = -a1 >= a2 and -a1 >= a3
        weak = -2 * a1 >= a2 + a3
        ok &= r.cls is want and (r.weak, r.concave, r.strong) == (weak, concave, strong)
    report(capsys, 3, ok)


def test_criterion_4_balancing_examples(capsys):
    ray_ok = isinstance(find_balancing(fx.ray()), Infeasible)
    b = find_balancing(fx.euclidean_space(2))
    plane_ok = not isinstance(b, Infeasible) and b.values == {"R": 1.0}
    report(capsys, 4, ray_ok and plane_ok)


def test_criterion_5_three_combos(capsys):
    L = fx.line_in_three_rays()
    b = fx.three_rays_balancing(L)
    combos = {k: Combo(c, pts, nu) for k, (c, pts, nu) in fx.combo_points(1.0).items()}
    witness = BalancedWitness(L, "tau", ["s1", "s2", "s3"], (1 / 3) * b, BetaPositiveWitness([(1 / 3, [])], 1))

    def verdict(name, w=None):
        c = combos[name]
        convex = check_convex(c)
        poly = convex and check_polyhedral(c, L)
        return convex, poly, poly and check_balanced(c, w, b)

    ok = verdict("convex_only")[:2] == (True, False)
    ok &= verdict("polyhedral_only") == (True, True, False)
    ok &= verdict("balanced", witness) == (True, True, True)
    ok &= verdict("balanced") == (True, True, True)
    report(capsys, 5, ok)


def test_criterion_6_property_suite(capsys):
    rng = np.random.default_rng(20240601)
    cases = fixture_cases()
    runs, failures = 0, []
    for _ in range(18):
        for case in cases:
            for check in CHECKS:
                runs += 1
                try:
                    check(case, rng)
                except AssertionError as exc:
                    failures.append((case.name, check.__name__, str(exc)[:120]))
    ok = runs >= 500 and len(cases) >= 4 and not failures
    report(capsys, 6, ok, f"{runs} cases, {len(failures)} failures")


def _random_g(cx, rng):
    if cx.cells_of_dim(0):
        return random_function(cx, rng)
    return PAFunc.from_affine(cx, rng.normal(size=cx.ambient.dim), rng.normal())


def _sample_points(cx):
    for cid, cell in cx.cells.items():
        yield Point(cid, cell.poly.relint_point())
        for v in cell.poly.points:
            yield Point(cid, v)


def test_criterion_7_regularization(capsys):
    complexes = [fx.ray(), fx.euclidean_space(2), fx.line_in_three_rays(), fx.four_rays(), fx.quadrant_fan(),
                 fx.nine_cones(), fx.segment_complex([0, 1, 3]), fx.square_two_triangles()]
    strict_ok = all(is_strictly_concave(f, S) for S, f in (regularize(cx) for cx in complexes))
    rng = np.random.default_rng(7)
    bad = 0
    for i in range(100):
        cx = complexes[i % len(complexes)]
        g = _random_g(cx, rng)
        f1, f2 = dc_decompose(g)
        S = f1.complex
        err = max(abs(g.evaluate(_to_coarse(S, cx, p)) - (f1(p) - f2(p)))
                  for p in _sample_points(S))
        if not (is_concave(f1) and is_concave(f2) and err < 1e-9 * max(1.0, g.max_abs_coefficient())):
            bad += 1
    report(capsys, 7, strict_ok and bad == 0, f"{bad} bad decompositions")


def _to_coarse(S, cx, p):
    return Point(S.carrier_map(cx)[p.carrier], p.coords)


def test_criterion_8_star_reduction(capsys):
    rng = np.random.default_rng(8)
    mismatches, seen = 0, {True: 0, False: 0}
    for name, cx in small_complexes().items():
        assert len(cx) <= 8, name
        for _ in range(25):
            f = _random_g(cx, rng)
            verdict = is_concave(f)
            seen[verdict] += 1
            mismatches += verdict != brute_is_concave(f)
    report(capsys, 8, mismatches == 0 and all(seen.values()), f"{mismatches} mismatches, verdicts {seen}")


def _weakly_concave_batch(F, b, kink, rng, count):
    out = []
    for _ in range(count):
        f = random_function(F, rng)
        deficit = product(f, b).values["tau"]
        if deficit < 0:
            f = f + (rng.uniform(0, 1) - deficit) * kink
        out.append(f)
    return out


def test_criterion_9_continuity_harness(capsys):
    t0 = time.perf_counter()
    F = fx.four_rays()
    c1, c2 = fx.four_rays_generators(F)
    b = c1 + c2
    kink = fx.four_rays_kink(F)
    inner = polyhedral_metric(truncate(F, 1.0))
    outer = polyhedral_metric(truncate(F, 2.0))
    rng = np.random.default_rng(9)

    def fit(batch):
        return max(lipschitz_estimate(f, None, inner, 4) / sup_norm(f, outer, 4) for f in batch)

    first = _weakly_concave_batch(F, b, kink, rng, 100)
    C = fit(first)
    C2 = fit(_weakly_concave_batch(F, b, kink, rng, 100))
    drift = abs(C2 - C) / C
    ns = (1, 2, 4, 8, 16)
    rep = convergence_harness([fx.four_rays_smoothed(F, n) for n in ns], b, limit=kink, radius=1.0)
    gaps_ok = all(g < 2 / n for g, n in zip(rep["gaps"], ns)) and rep["pass"]
    dt = time.perf_counter() - t0
    ok = drift < 0.2 and gaps_ok and dt < 60
    report(capsys, 9, ok, f"C={C:.4f} refit={C2:.4f} drift={drift:.3f} gaps={[round(g, 6) for g in rep['gaps']]} "
                          f"{dt:.1f}s")

