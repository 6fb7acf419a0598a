"""Command-line front end.

Exit status: 0 when the answer is positive, 1 for a negative answer (invalid,
infeasible, not balanced, ...) or a violated invariant, 2 for bad input.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import config
from .errors import BalpolyError, InputError
from .io import Workspace

EXIT_OK, EXIT_NO, EXIT_INPUT = 0, 1, 2


def data_dir() -> Path:
    return Path(str(resources.files("balpoly") / "data"))


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _print_weight(w, out) -> None:
    for cid, v in w.values.items():
        print(f"{cid} {_fmt(v)}", file=out)


def _ids(s: str | None):
    return None if s is None else [x for x in s.split(",") if x]


# -- subcommands (each returns an exit code)

def cmd_validate(ws, a, out):
    from .complex import validate
    ws.check = False
    rep = validate(ws.load(a.complex, "complex"))
    print(rep, file=out)
    return EXIT_OK if rep.ok else EXIT_NO


def cmd_balance(ws, a, out):
    from .weights import Infeasible, find_balancing
    cx = ws.load(a.complex, "complex")
    b = find_balancing(cx, _ids(a.open) and _upward(cx, _ids(a.open)))
    if isinstance(b, Infeasible):
        print(f"infeasible: {b.reason}", file=out)
        return EXIT_NO
    _print_weight(b, out)
    if a.output:
        ws.save(b, a.output)
    return EXIT_OK


def _upward(cx, ids):
    from .complex import as_open
    return as_open(cx, ids)


def cmd_minkowski(ws, a, out):
    from .weights import is_minkowski, residuals
    c = ws.load(a.weight, "weight")
    ok = is_minkowski(c)
    worst = max((float((r @ r) ** 0.5) for r in residuals(c).values()), default=0.0)
    print(f"minkowski={'yes' if ok else 'no'} max_residual={_fmt(worst)}", file=out)
    return EXIT_OK if ok else EXIT_NO


def cmd_product(ws, a, out):
    from .weights import product
    f = ws.load(a.function, "function")
    c = ws.load(a.weight, "weight")
    p = product(f, c)
    _print_weight(p, out)
    if a.output:
        ws.save(p, a.output)
    return EXIT_OK


def cmd_generators(ws, a, out):
    from .complex import star_open
    from .weights import positive_cone_generators
    cx = ws.load(a.complex, "complex")
    if a.tau not in cx.cells:
        raise InputError(f"unknown cell {a.tau!r}")
    gens = positive_cone_generators(cx, star_open(cx, a.tau), a.k)
    for i, g in enumerate(gens):
        print(f"generator {i}: " + " ".join(f"{k}={_fmt(v)}" for k, v in g.values.items()), file=out)
    if not gens:
        print("no positive Minkowski weights", file=out)
    return EXIT_OK if gens else EXIT_NO


def cmd_classify(ws, a, out):
    from .concavity import classify
    f = ws.load(a.function, "function")
    b = ws.load(a.balancing, "weight")
    r = classify(f, b)
    print(r.cls, file=out)
    if a.verbose:
        print(f"strong={r.strong} concave={r.concave} weak={r.weak}", file=out)
        for c in r.certificates:
            print(f"certificate {c}", file=out)
    return EXIT_OK


def cmd_subdivide(ws, a, out):
    from .pafun import affinity_subdivision
    cx = ws.load(a.complex, "complex")
    f = ws.load(a.function, "function")
    S = affinity_subdivision(cx, f)
    print(f"cells {len(cx)} -> {len(S)}", file=out)
    if a.output:
        ws.save(S, a.output)
    return EXIT_OK


def cmd_regularize(ws, a, out):
    from .concavity import is_strictly_concave
    from .pafun import regularize
    cx = ws.load(a.complex, "complex")
    S, f = regularize(cx, _ids(a.open) and _upward(cx, _ids(a.open)))
    strict = is_strictly_concave(f, S)
    print(f"cells {len(cx)} -> {len(S)} strictly_concave={'yes' if strict else 'no'}", file=out)
    if a.output:
        ws.save(f, a.output)
    return EXIT_OK if strict else EXIT_NO


def cmd_dc(ws, a, out):
    from .pafun import dc_decompose
    g = ws.load(a.function, "function")
    f1, f2 = dc_decompose(g)
    err = max(abs(g.evaluate(p) - (f1.evaluate(q) - f2.evaluate(q)))
              for p, q in _vertex_pairs(g, f1))
    print(f"pieces on {len(f1.complex)} cells, max vertex error {_fmt(err)}", file=out)
    if a.output:
        stem = Path(a.output)
        ws.save(f1, stem.with_name(stem.stem + "_1" + (stem.suffix or ".fn")))
        ws.save(f2, stem.with_name(stem.stem + "_2" + (stem.suffix or ".fn")))
    return EXIT_OK


def _vertex_pairs(g, f):
    from .complex import Point
    for cid in f.complex.cells:
        if f.complex.dim_of(cid) == 0:
            q = Point(cid, f.complex.cells[cid].poly.points[0])
            yield g.complex.transfer(q, f.complex), q


def cmd_combo_check(ws, a, out):
    from .combos import check_balanced, check_convex, check_polyhedral
    obj = ws.load(a.combo, "combo")
    combo, cx, b = obj["combo"], obj["complex"], obj["balancing"]
    convex = check_convex(combo)
    poly = convex and check_polyhedral(combo, cx, b.open if b is not None and b.complex is cx else None)
    line = f"convex={'yes' if convex else 'no'} polyhedral={'yes' if poly else 'no'}"
    results = [convex, poly]
    if b is not None:
        witness = obj["witness"] if a.witness else None
        if a.witness and witness is None:
            raise InputError("the combination file has no witness")
        bal = poly and check_balanced(combo, witness, b)
        line += f" balanced={'yes' if bal else 'no'}"
        results.append(bal)
    print(line, file=out)
    return EXIT_OK if all(results) else EXIT_NO


def _compact_metric(f, cells, radius):
    from .analysis import polyhedral_metric, truncate
    K = truncate(f.complex, radius)
    if cells is None:
        return K, polyhedral_metric(K)
    unknown = set(cells) - set(f.complex.cells)
    if unknown:
        raise InputError(f"unknown cells {sorted(unknown)}")
    keep = [k for k in K.cells if K.carriers[k] in f.complex.closure(cells)]
    return K, polyhedral_metric(K, keep)


def cmd_lipschitz(ws, a, out):
    from .analysis import lipschitz_estimate, sup_norm
    f = ws.load(a.function, "function")
    _, metric = _compact_metric(f, _ids(a.compact), a.radius)
    lip = lipschitz_estimate(f, None, metric, a.density)
    print(f"lipschitz={_fmt(lip)} sup={_fmt(sup_norm(f, metric, a.density))}", file=out)
    return EXIT_OK


def cmd_converge(ws, a, out):
    from .analysis import convergence_harness, format_report
    fs = [ws.load(p, "function") for p in a.functions]
    b = ws.load(a.balancing, "weight")
    limit = ws.load(a.limit, "function") if a.limit else None
    rep = convergence_harness(fs, b, limit=limit, radius=a.radius, density=a.density, jobs=a.jobs)
    print(format_report(rep), file=out)
    return EXIT_OK if rep["pass"] else EXIT_NO


def cmd_datadir(ws, a, out):
    print(data_dir(), file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="balpoly", description=__doc__.splitlines()[0])
    p.add_argument("--tol", type=float, help="numeric tolerance (default 1e-9, env BALPOLY_TOL)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for sampling experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        q = sub.add_parser(name, help=help_)
        q.set_defaults(fn=fn)
        return q

    q = add("validate", cmd_validate, "check a complex file")
    q.add_argument("complex")
    q = add("balance", cmd_balance, "find a balancing condition")
    q.add_argument("complex")
    q.add_argument("--open", help="comma-separated ids of an upward-closed set of cells")
    q.add_argument("-o", "--output")
    q = add("minkowski", cmd_minkowski, "check the balancing equations of a weight")
    q.add_argument("weight")
    q = add("product", cmd_product, "product of a PA function with a weight")
    q.add_argument("function")
    q.add_argument("weight")
    q.add_argument("-o", "--output")
    q = add("generators", cmd_generators, "extreme rays of the positive Minkowski cone on a star")
    q.add_argument("complex")
    q.add_argument("--tau", required=True)
    q.add_argument("--k", type=int, required=True)
    q = add("classify", cmd_classify, "strong / concave / weak / none")
    q.add_argument("function")
    q.add_argument("--balancing", required=True)
    q.add_argument("-v", "--verbose", action="store_true")
    q = add("subdivide", cmd_subdivide, "subdivide a complex where a function changes its affine piece")
    q.add_argument("complex")
    q.add_argument("function")
    q.add_argument("-o", "--output")
    q = add("regularize", cmd_regularize, "strictly concave function on a subdivision")
    q.add_argument("complex")
    q.add_argument("--open")
    q.add_argument("-o", "--output")
    q = add("dc", cmd_dc, "write a PA function as a difference of concave ones")
    q.add_argument("function")
    q.add_argument("-o", "--output", help="output stem; writes <stem>_1 and <stem>_2")
    q = add("combo-check", cmd_combo_check, "convex / polyhedral / balanced checks")
    q.add_argument("combo")
    q.add_argument("--witness", action="store_true", help="use the witness stored in the file")
    for name, fn, help_ in (("lipschitz", cmd_lipschitz, "grid Lipschitz estimate on truncated cells"),
                            ("converge", cmd_converge, "uniform convergence report for a sequence")):
        q = add(name, fn, help_)
        if name == "lipschitz":
            q.add_argument("function")
            q.add_argument("--compact", help="comma-separated cells (default: all)")
        else:
            q.add_argument("functions", nargs="+")
            q.add_argument("--balancing", required=True)
            q.add_argument("--limit")
        q.add_argument("--radius", type=float, default=1.0)
        q.add_argument("--density", type=int, default=8)
    add("datadir", cmd_datadir, "print the directory of bundled example files")
    return p


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    ws = Workspace()
    try:
        if a.tol is not None:
            with config.tolerance(a.tol):
                return a.fn(ws, a, out)
        return a.fn(ws, a, out)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BalpolyError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NO
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
