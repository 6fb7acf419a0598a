"""JSON files for complexes, weights, PA functions and convex combinations.

Every file holds one object tagged by ``"type"``. References to other objects
are either paths relative to the referring file or inline objects. A
:class:`Workspace` caches loaded files by path, so several files referencing
the same complex share one in-memory object.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .combos import BalancedWitness, Combo
from .complex import Cell, Complex, Point, validate
from .concavity import BetaPositiveWitness
from .errors import InputError
from .geom import AmbientSpace
from .pafun import PAFunc
from .weights import Weight

_vec = {"type": "array", "items": {"type": "number"}}
_mat = {"type": "array", "items": _vec}
_ref = {"oneOf": [{"type": "string"}, {"type": "object"}]}
_point = {"type": "object", "required": ["cell", "coords"],
          "properties": {"cell": {"type": "string"}, "coords": _vec}}

SCHEMAS = {
    "complex": {
        "type": "object",
        "required": ["type", "dim", "cells"],
        "properties": {
            "dim": {"type": "integer", "minimum": 1},
            "metric": _mat,
            "hyperplane": _vec,
            "cells": {"type": "array", "items": {
                "type": "object", "required": ["id", "vertices"],
                "properties": {"id": {"type": "string"}, "vertices": _mat, "rays": _mat}}},
            "faces": {"type": "array", "items": {"type": "array", "items": {"type": "string"},
                                                  "minItems": 2, "maxItems": 2}},
            "base": _ref,
            "carriers": {"type": "object", "additionalProperties": {"type": "string"}},
        },
    },
    "weight": {
        "type": "object",
        "required": ["type", "complex", "k", "values"],
        "properties": {
            "complex": _ref,
            "k": {"type": "integer", "minimum": 0},
            "open": {"oneOf": [{"const": "all"}, {"type": "array", "items": {"type": "string"}}]},
            "values": {"type": "object", "additionalProperties": {"type": "number"}},
        },
    },
    "function": {
        "type": "object",
        "required": ["type", "complex", "cells"],
        "properties": {
            "complex": _ref,
            "cells": {"type": "object", "additionalProperties": {
                "type": "object", "required": ["covector", "constant"],
                "properties": {"covector": _vec, "constant": {"type": "number"}}}},
        },
    },
    "combo": {
        "type": "object",
        "required": ["type", "complex", "center", "points", "coeffs"],
        "properties": {
            "complex": _ref,
            "balancing": _ref,
            "center": _point,
            "points": {"type": "array", "items": _point},
            "coeffs": _vec,
            "witness": {
                "type": "object", "required": ["tau", "sigma", "weight", "beta"],
                "properties": {
                    "complex": _ref,
                    "tau": {"type": "string"},
                    "sigma": {"type": "array", "items": {"type": "string"}},
                    "weight": _ref,
                    "beta": {"type": "object", "required": ["k", "terms"], "properties": {
                        "k": {"type": "integer"},
                        "terms": {"type": "array", "items": {
                            "type": "object", "required": ["alpha", "functions"],
                            "properties": {"alpha": {"type": "number"},
                                           "functions": {"type": "array", "items": _ref}}}}}},
                },
            },
        },
    },
}


def _floats(a) -> list:
    return [[float(x) for x in row] for row in np.atleast_2d(a)] if np.size(a) else []


class Workspace:
    """Loaded objects keyed by resolved path, plus where each object came from."""

    def __init__(self, check: bool = True):
        self.check = check
        self.objects: dict[Path, object] = {}
        self.paths: dict[int, Path] = {}

    # -- reading
    def read_json(self, path) -> dict:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise InputError(f"{path}: cannot read ({exc.strerror})") from None
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None

    def load(self, path, expect: str | None = None):
        path = Path(path).resolve()
        if path in self.objects:
            obj = self.objects[path]
        else:
            obj = self.from_dict(self.read_json(path), path.parent, str(path))
            self.objects[path] = obj
            self.paths[id(obj)] = path
        if expect is not None and _kind(obj) != expect:
            raise InputError(f"{path}: expected a {expect}, found a {_kind(obj)}")
        return obj

    def _resolve(self, ref, here: Path, expect: str):
        if isinstance(ref, str):
            return self.load(here / ref, expect)
        obj = self.from_dict(ref, here, f"inline {expect}")
        if _kind(obj) != expect:
            raise InputError(f"inline object: expected a {expect}")
        return obj

    def from_dict(self, d: dict, here: Path = Path("."), where: str = "<data>"):
        if not isinstance(d, dict) or d.get("type") not in SCHEMAS:
            raise InputError(f"{where}: missing or unknown 'type' (one of {sorted(SCHEMAS)})")
        kind = d["type"]
        try:
            jsonschema.validate(d, SCHEMAS[kind])
        except jsonschema.ValidationError as exc:
            loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise InputError(f"{where}: schema violation at {loc}: {exc.message}") from None
        return getattr(self, f"_{kind}")(d, here, where)

    def _complex(self, d, here, where) -> Complex:
        amb = AmbientSpace(d["dim"], d.get("metric"), d.get("hyperplane"))
        cells = [Cell(c["id"], c["vertices"], c.get("rays", [])) for c in d["cells"]]
        base = self._resolve(d["base"], here, "complex") if "base" in d else None
        cx = Complex(amb, cells, [tuple(p) for p in d.get("faces", [])], base, d.get("carriers"))
        if self.check:
            rep = validate(cx)
            if not rep.ok:
                raise InputError(f"{where}: {rep}")
        return cx

    def _weight(self, d, here, where) -> Weight:
        cx = self._resolve(d["complex"], here, "complex")
        open_ = None if d.get("open", "all") == "all" else d["open"]
        return Weight(cx, d["k"], d["values"], open_)

    def _function(self, d, here, where) -> PAFunc:
        cx = self._resolve(d["complex"], here, "complex")
        data = {k: (v["covector"], v["constant"]) for k, v in d["cells"].items()}
        return PAFunc(cx, data, check=self.check)

    def _combo(self, d, here, where) -> dict:
        cx = self._resolve(d["complex"], here, "complex")

        def pt(p):
            if p["cell"] not in cx.cells:
                raise InputError(f"{where}: unknown cell {p['cell']!r}")
            return Point(p["cell"], p["coords"])

        combo = Combo(pt(d["center"]), [pt(p) for p in d["points"]], list(d["coeffs"]))
        out = {"type": "combo", "combo": combo, "complex": cx, "balancing": None, "witness": None}
        if "balancing" in d:
            out["balancing"] = self._resolve(d["balancing"], here, "weight")
        if "witness" in d:
            w = d["witness"]
            wcx = self._resolve(w["complex"], here, "complex") if "complex" in w else cx
            terms = [(t["alpha"], [self._resolve(f, here, "function") for f in t["functions"]])
                     for t in w["beta"]["terms"]]
            out["witness"] = BalancedWitness(wcx, w["tau"], list(w["sigma"]),
                                             self._resolve(w["weight"], here, "weight"),
                                             BetaPositiveWitness(terms, w["beta"]["k"]))
        return out

    # -- writing
    def ref(self, obj, here: Path | None):
        """Path reference when the object came from a file, otherwise an inline object."""
        p = self.paths.get(id(obj))
        if p is not None and here is not None:
            return _relpath(p, here)
        return to_dict(obj, self, here)

    def save(self, obj, path) -> None:
        path = Path(path).resolve()
        path.write_text(dumps(to_dict(obj, self, path.parent)))
        self.objects[path] = obj
        self.paths[id(obj)] = path


def _relpath(p: Path, here: Path) -> str:
    import os
    rel = os.path.relpath(p, here)
    return str(p) if rel.startswith("..") else rel


def _kind(obj) -> str:
    if isinstance(obj, Complex):
        return "complex"
    if isinstance(obj, Weight):
        return "weight"
    if isinstance(obj, PAFunc):
        return "function"
    if isinstance(obj, dict) and obj.get("type") == "combo":
        return "combo"
    return type(obj).__name__


def to_dict(obj, ws: Workspace | None = None, here: Path | None = None) -> dict:
    ws = ws or Workspace()
    if isinstance(obj, Complex):
        amb = obj.ambient
        d = {"type": "complex", "dim": amb.dim}
        if not np.allclose(amb.metric, np.eye(amb.dim), atol=0, rtol=0):
            d["metric"] = _floats(amb.metric)
        d["hyperplane"] = [float(x) for x in amb.hyperplane]
        d["cells"] = []
        for c in obj.cells.values():
            e = {"id": c.id, "vertices": _floats(c.vertices)}
            if c.rays.shape[0]:
                e["rays"] = _floats(c.rays)
            d["cells"].append(e)
        d["faces"] = [list(p) for p in obj.face_pairs()]
        if obj.base is not None:
            d["base"] = ws.ref(obj.base, here)
            d["carriers"] = dict(obj.carriers)
        return d
    if isinstance(obj, Weight):
        full = len(obj.open) == len(obj.complex.cells)
        return {"type": "weight", "complex": ws.ref(obj.complex, here), "k": obj.k,
                "open": "all" if full else sorted(obj.open),
                "values": {k: float(v) for k, v in obj.values.items()}}
    if isinstance(obj, PAFunc):
        return {"type": "function", "complex": ws.ref(obj.complex, here),
                "cells": {k: {"covector": [float(x) for x in w], "constant": float(c)}
                          for k, (w, c) in obj.data.items()}}
    if _kind(obj) == "combo":
        combo = obj["combo"]

        def pt(p):
            return {"cell": p.carrier, "coords": [float(x) for x in p.coords]}

        d = {"type": "combo", "complex": ws.ref(obj["complex"], here), "center": pt(combo.center),
             "points": [pt(p) for p in combo.points], "coeffs": [float(x) for x in combo.coeffs]}
        if obj.get("balancing") is not None:
            d["balancing"] = ws.ref(obj["balancing"], here)
        w = obj.get("witness")
        if w is not None:
            d["witness"] = {
                "complex": ws.ref(w.complex, here), "tau": w.tau, "sigma": list(w.sigma),
                "weight": ws.ref(w.weight, here),
                "beta": {"k": w.beta_witness.k,
                         "terms": [{"alpha": float(a), "functions": [ws.ref(f, here) for f in fs]}
                                   for a, fs in w.beta_witness.terms]}}
        return d
    raise InputError(f"cannot serialize {type(obj).__name__}")


def _flat(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (list, dict)) for x in v)


def _emit(v, ind: int) -> str:
    pad = " " * ind
    if isinstance(v, dict) and v:
        items = [f'{pad} {json.dumps(k)}: {_emit(x, ind + 1)}' for k, x in v.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(v, list) and v and not _flat(v):
        items = [f"{pad} {_emit(x, ind + 1)}" for x in v]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    return json.dumps(v)


def dumps(d: dict) -> str:
    """JSON with flat arrays kept on one line; floats keep full round-trip precision."""
    return _emit(d, 0) + "\n"


def load(path, check: bool = True):
    return Workspace(check).load(path)


def save(obj, path) -> None:
    Workspace().save(obj, path)
