"""Small reference complexes, functions and weights used by tests and bundled data."""
from __future__ import annotations

import numpy as np

from .complex import Cell, Complex, Point
from .geom import AmbientSpace
from .pafun import MinSum, PAFunc, affinity_subdivision
from .weights import Weight


def _fan(dim: int, rays: dict, cones: dict, vertex_id: str = "o") -> Complex:
    """A fan in H = {x_dim = 1} with apex (0, ..., 0, 1).

    ``rays`` maps ids to directions in R^(dim-1); ``cones`` maps ids to tuples of ray ids.
    """
    amb = AmbientSpace(dim)
    apex = np.eye(dim)[-1]
    lift = {k: np.append(np.asarray(v, dtype=float), 0.0) for k, v in rays.items()}
    cells = [Cell(vertex_id, [apex])]
    pairs = []
    for k, r in lift.items():
        cells.append(Cell(k, [apex], [r]))
        pairs.append((vertex_id, k))
    for k, members in cones.items():
        cells.append(Cell(k, [apex], [lift[m] for m in members]))
        pairs.append((vertex_id, k))
        pairs.extend((m, k) for m in members)
    return Complex(amb, cells, pairs)


def ray() -> Complex:
    """The half line: one vertex, one ray."""
    return _fan(2, {"s": [1.0]}, {})


def euclidean_space(n: int = 2) -> Complex:
    """R^n as a single cell (no proper faces)."""
    amb = AmbientSpace(n + 1)
    apex = np.eye(n + 1)[-1]
    dirs = [s * e for e in np.eye(n + 1)[:n] for s in (1.0, -1.0)]
    return Complex(amb, [Cell("R", [apex], dirs)])


def line_in_three_rays() -> Complex:
    """Three half lines glued at one point; two of them share their image."""
    return _fan(2, {"s1": [-1.0], "s2": [1.0], "s3": [1.0]}, {}, vertex_id="tau")


def three_rays_function(a1: float, a2: float, a3: float) -> PAFunc:
    """f(x, i) = a_i x on the three-rays space."""
    cx = line_in_three_rays()
    return three_rays_function_on(cx, a1, a2, a3)


def three_rays_function_on(cx: Complex, a1, a2, a3) -> PAFunc:
    return PAFunc.from_vertex_values(
        cx, {"tau": 0.0},
        {"s1": ([-1.0, 0.0], a1), "s2": ([1.0, 0.0], a2), "s3": ([1.0, 0.0], a3)})


def three_rays_balancing(cx: Complex, g2: float = 1.0, g3: float = 1.0) -> Weight:
    return Weight(cx, 1, {"s1": g2 + g3, "s2": g2, "s3": g3})


def four_rays() -> Complex:
    """Rays (0,1), (0,-1), (1,1), (-1,1) in the plane H, glued at the origin."""
    return _fan(3, {"s1": [0, 1], "s2": [0, -1], "s3": [1, 1], "s4": [-1, 1]}, {}, vertex_id="tau")


def four_rays_kink(cx: Complex) -> PAFunc:
    """f = -x on the first ray (x the arclength), 0 on the others."""
    return PAFunc.from_vertex_values(
        cx, {"tau": 0.0},
        {"s1": ([0, 1, 0], -1.0), "s2": ([0, -1, 0], 0.0), "s3": ([1, 1, 0], 0.0), "s4": ([-1, 1, 0], 0.0)})


def four_rays_generators(cx: Complex) -> tuple[Weight, Weight]:
    c1 = Weight(cx, 1, {"s1": 1, "s2": 1, "s3": 0, "s4": 0})
    c2 = Weight(cx, 1, {"s1": 0, "s2": np.sqrt(2), "s3": 1, "s4": 1})
    return c1, c2


def four_rays_smoothed(cx: Complex, n: int) -> PAFunc:
    """min(0, 1/n - x) on the first ray, 0 elsewhere; lives on a subdivision of cx."""
    F = MinSum(cx, per_cell={"s1": [[(np.zeros(3), 0.0), (np.array([0.0, -1.0, 0.0]), 1.0 / n)]]})
    S = affinity_subdivision(cx, F)
    return F.to_pafunc(S)


def quadrant_fan() -> Complex:
    """The plane H cut into its four closed quadrants."""
    rays = {"e1": [1, 0], "e2": [0, 1], "e3": [-1, 0], "e4": [0, -1]}
    cones = {"q1": ("e1", "e2"), "q2": ("e2", "e3"), "q3": ("e3", "e4"), "q4": ("e4", "e1")}
    return _fan(3, rays, cones)


def half_plane_fan() -> Complex:
    """The upper half plane of H cut into two quadrants."""
    return _fan(3, {"e1": [1, 0], "e2": [0, 1], "e3": [-1, 0]}, {"q1": ("e1", "e2"), "q2": ("e2", "e3")})


def fan_function(cx: Complex, ray_values: dict, apex_value: float = 0.0, vertex_id: str = "o") -> PAFunc:
    """Linear on every cone of a fan, from its value at the apex and increments along unit rays."""
    rv = {k: (cx.cells[k].rays[0], v) for k, v in ray_values.items()}
    return PAFunc.from_vertex_values(cx, {vertex_id: apex_value}, rv)


FIVE_RAYS = {"t1": [0, 0, 1], "t2": [0, 0, -1], "t3": [1, 0, 0], "t4": [0, 1, 0], "t5": [-1, -1, 0]}
NINE_CONES = {"s1": ("t1", "t3"), "s2": ("t1", "t4"), "s3": ("t1", "t5"),
              "s4": ("t2", "t3"), "s5": ("t2", "t4"), "s6": ("t2", "t5"),
              "s7": ("t3", "t4"), "s8": ("t3", "t5"), "s9": ("t4", "t5")}


def nine_cones() -> Complex:
    """Nine 2-dimensional cones on five rays in H = R^3."""
    return _fan(4, FIVE_RAYS, NINE_CONES)


def nine_cones_balancing(cx: Complex) -> Weight:
    r2 = np.sqrt(2.0)
    return Weight(cx, 2, {k: (r2 if k in ("s3", "s6") else 1.0) for k in NINE_CONES})


def nine_cones_function(cx: Complex, values=(1.0, 0.0, -1.0, 0.0, 0.0)) -> PAFunc:
    """Linear on each cone with the given values at the five ray generators."""
    rv = {k: (np.append(v, 0.0), val) for (k, v), val in zip(FIVE_RAYS.items(), values)}
    return PAFunc.from_vertex_values(cx, {"o": 0.0}, rv)


def segment_complex(breaks) -> Complex:
    """The subdivided segment [breaks[0], breaks[-1]] in H = {y = 1} of R^2."""
    amb = AmbientSpace(2)
    pts = [float(b) for b in breaks]
    cells = [Cell(f"v{i}", [[p, 1.0]]) for i, p in enumerate(pts)]
    pairs = []
    for i in range(len(pts) - 1):
        cells.append(Cell(f"e{i}", [[pts[i], 1.0], [pts[i + 1], 1.0]]))
        pairs += [(f"v{i}", f"e{i}"), (f"v{i + 1}", f"e{i}")]
    return Complex(amb, cells, pairs)


def square_two_triangles() -> Complex:
    """The unit square split along its diagonal, in H = {z = 1} of R^3."""
    amb = AmbientSpace(3)
    P = {"a": [0, 0, 1], "b": [1, 0, 1], "c": [1, 1, 1], "d": [0, 1, 1]}
    cells = [Cell(k, [v]) for k, v in P.items()]
    edges = {"ab": "ab", "bc": "bc", "cd": "cd", "da": "da", "ac": "ac"}
    for k, ends in edges.items():
        cells.append(Cell(k, [P[ends[0]], P[ends[1]]]))
    cells.append(Cell("T1", [P["a"], P["b"], P["c"]]))
    cells.append(Cell("T2", [P["a"], P["c"], P["d"]]))
    pairs = [(e[0], k) for k, e in edges.items()] + [(e[1], k) for k, e in edges.items()]
    for t, es, vs in (("T1", ("ab", "bc", "ac"), "abc"), ("T2", ("ac", "cd", "da"), "acd")):
        pairs += [(e, t) for e in es] + [(v, t) for v in vs]
    return Complex(amb, cells, pairs)


def triangle() -> Complex:
    """A single closed triangle with its edges and vertices, in H = {z = 1} of R^3."""
    amb = AmbientSpace(3)
    P = {"a": [0, 0, 1], "b": [1, 0, 1], "c": [0, 1, 1]}
    cells = [Cell(k, [v]) for k, v in P.items()]
    cells += [Cell(e, [P[e[0]], P[e[1]]]) for e in ("ab", "bc", "ac")]
    cells.append(Cell("T", list(P.values())))
    pairs = [(v, e) for e in ("ab", "bc", "ac") for v in e] + [(e, "T") for e in ("ab", "bc", "ac")]
    return Complex(amb, cells, pairs)


def combo_points(p: float = 1.0) -> dict:
    """The three convex combinations on the three-rays space, as coordinate data."""
    def pt(cell, x):
        return Point(cell, np.array([x, 1.0]))
    return {
        "convex_only": (pt("s2", p), [pt("s3", p)], [1.0]),
        "polyhedral_only": (pt("tau", 0.0), [pt("s1", -p), pt("s2", p)], [0.5, 0.5]),
        "balanced": (pt("tau", 0.0), [pt("s1", -2 * p), pt("s2", p), pt("s3", p)], [1 / 3] * 3),
    }
