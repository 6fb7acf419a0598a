import io
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from balpoly import fixtures as fx
from balpoly.cli import data_dir, run
from balpoly.errors import InputError
from balpoly.io import Workspace, dumps, load, to_dict
from balpoly.pafun import PAFunc
from balpoly.weights import Weight

DATA = data_dir()
ALL_FILES = sorted(p.name for p in DATA.iterdir() if p.suffix in (".cx", ".wt", ".fn", ".combo"))


def cli(*args):
    out = io.StringIO()
    code = run([str(a) for a in args], out)
    return code, out.getvalue()


@pytest.fixture
def data(tmp_path):
    dst = tmp_path / "data"
    shutil.copytree(DATA, dst)
    return dst


def test_bundled_files_round_trip_byte_identical(data):
    ws = Workspace()
    objs = {name: ws.load(data / name) for name in ALL_FILES}
    for name, obj in objs.items():
        before = (data / name).read_bytes()
        ws.save(obj, data / name)
        assert (data / name).read_bytes() == before, name


def test_shared_references_load_once():
    ws = Workspace()
    b = ws.load(DATA / "four_rays_b.wt")
    f = ws.load(DATA / "four_rays_kink.fn")
    assert b.complex is f.complex


def test_round_trip_preserves_values(tmp_path):
    X = fx.nine_cones()
    f = fx.nine_cones_function(X)
    ws = Workspace()
    ws.save(X, tmp_path / "x.cx")
    ws.save(f, tmp_path / "f.fn")
    g = load(tmp_path / "f.fn")
    assert json.loads((tmp_path / "f.fn").read_text())["complex"] == "x.cx"
    for cid in X.cells:
        assert np.array_equal(g.data[cid][0], f.data[cid][0])


def test_inline_objects():
    F = fx.four_rays()
    d = to_dict(Weight(F, 1, {"s1": 1.0, "s2": 1.0}))
    assert isinstance(d["complex"], dict)
    w = Workspace().from_dict(d)
    assert w.values["s1"] == 1.0 and w.values["s3"] == 0.0
    assert dumps(d) == dumps(to_dict(w))


def test_error_messages(tmp_path):
    bad = tmp_path / "bad.cx"
    bad.write_text('{"type": "complex",\n "dim": 2,\n "cells": [}')
    with pytest.raises(InputError, match=r"bad.cx:3:\d+"):
        load(bad)
    bad.write_text(json.dumps({"type": "complex", "dim": "two", "cells": []}))
    with pytest.raises(InputError, match="schema violation at dim"):
        load(bad)
    bad.write_text(json.dumps({"type": "tensor"}))
    with pytest.raises(InputError, match="unknown 'type'"):
        load(bad)
    with pytest.raises(InputError, match="cannot read"):
        load(tmp_path / "missing.cx")
    with pytest.raises(InputError, match="expected a weight"):
        Workspace().load(DATA / "four_rays.cx", "weight")


def test_invalid_complex_is_rejected(tmp_path):
    d = {"type": "complex", "dim": 2, "cells": [{"id": "v", "vertices": [[0, 1]]},
                                               {"id": "e", "vertices": [[0, 1], [1, 1]]}]}
    (tmp_path / "open.cx").write_text(json.dumps(d))
    with pytest.raises(InputError, match="face closure"):
        load(tmp_path / "open.cx")
    code, out = cli("validate", tmp_path / "open.cx")
    assert code == 1 and "face closure" in out


def test_inconsistent_function_is_rejected(tmp_path):
    d = json.loads((DATA / "four_rays_kink.fn").read_text())
    d["complex"] = str(DATA / "four_rays.cx")
    d["cells"]["tau"]["constant"] = 5.0
    (tmp_path / "f.fn").write_text(json.dumps(d))
    assert cli("classify", tmp_path / "f.fn", "--balancing", DATA / "four_rays_b.wt")[0] == 2


def test_cli_balance(tmp_path):
    code, out = cli("balance", DATA / "ray.cx")
    assert code == 1 and out.startswith("infeasible:")
    code, out = cli("balance", DATA / "three_rays.cx", "-o", tmp_path / "b.wt")
    vals = dict(line.split() for line in out.splitlines())
    assert code == 0 and float(vals["s1"]) == pytest.approx(2 * float(vals["s2"]))
    assert load(tmp_path / "b.wt").k == 1
    assert cli("balance", DATA / "plane.cx")[1] == "R 1\n"
    assert cli("balance", DATA / "four_rays.cx", "--open", "tau")[0] == 2


def test_cli_products_and_generators(tmp_path):
    code, out = cli("product", DATA / "four_rays_kink.fn", DATA / "four_rays_c1.wt", "-o", tmp_path / "p.wt")
    assert code == 0 and out == "tau 1\n"
    code, out = cli("generators", DATA / "four_rays.cx", "--tau", "tau", "--k", "1")
    assert code == 0 and out.count("generator") == 2
    assert cli("generators", DATA / "four_rays.cx", "--tau", "nope", "--k", "1")[0] == 2
    assert cli("minkowski", DATA / "four_rays_c2.wt")[0] == 0
    assert cli("minkowski", tmp_path / "p.wt")[0] == 0


def test_cli_classify():
    b = DATA / "three_rays_b.wt"
    for name, want in (("strong", "Strong"), ("concave", "Concave"), ("weak", "Weak"), ("none", "None")):
        code, out = cli("classify", DATA / f"three_rays_{name}.fn", "--balancing", b)
        assert code == 0 and out.strip() == want
    code, out = cli("classify", DATA / "nine_cones_f.fn", "--balancing", DATA / "nine_cones_b.wt", "-v")
    assert out.splitlines()[0] == "Weak" and "certificate" in out


def test_cli_subdivision_commands(tmp_path):
    code, out = cli("subdivide", DATA / "four_rays.cx", DATA / "four_rays_smooth_4.fn", "-o", tmp_path / "s.cx")
    assert code == 0 and out.startswith("cells 5 -> 7")
    code, out = cli("regularize", DATA / "nine_cones.cx", "-o", tmp_path / "r.fn")
    assert code == 0 and "strictly_concave=yes" in out
    assert isinstance(load(tmp_path / "r.fn"), PAFunc)
    code, out = cli("dc", DATA / "nine_cones_f.fn", "-o", tmp_path / "parts.fn")
    assert code == 0 and out.endswith("max vertex error 0\n")
    assert (tmp_path / "parts_1.fn").exists() and (tmp_path / "parts_2.fn").exists()


def test_cli_combo_check():
    assert cli("combo-check", DATA / "combo_convex_only.combo") == (1, "convex=yes polyhedral=no balanced=no\n")
    assert cli("combo-check", DATA / "combo_polyhedral_only.combo")[1].endswith("polyhedral=yes balanced=no\n")
    assert cli("combo-check", DATA / "combo_balanced.combo")[0] == 0
    assert cli("combo-check", DATA / "combo_balanced.combo", "--witness")[0] == 0
    assert cli("combo-check", DATA / "combo_convex_only.combo", "--witness")[0] == 2


def test_cli_analysis_commands():
    code, out = cli("lipschitz", DATA / "four_rays_kink.fn", "--compact", "s1", "--density", "4")
    assert code == 0 and out.startswith("lipschitz=")
    smooth = [DATA / f"four_rays_smooth_{n}.fn" for n in (2, 4, 8)]
    code, out = cli("--jobs", 2, "converge", *smooth, "--balancing", DATA / "four_rays_b.wt",
                    "--limit", DATA / "four_rays_kink.fn")
    assert code == 0 and "gaps=0.5 0.25 0.125" in out


def test_cli_input_errors(tmp_path):
    assert cli("validate", tmp_path / "nothing.cx")[0] == 2
    assert cli("frobnicate")[0] == 2
    assert cli("--tol", "-1", "validate", DATA / "ray.cx")[0] == 2
    assert cli("--tol", "1e-6", "validate", DATA / "ray.cx")[0] == 0


def test_console_script_and_env_tolerance():
    exe = shutil.which("balpoly")
    cmd = [exe] if exe else [sys.executable, "-m", "balpoly"]
    r = subprocess.run(cmd + ["datadir"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == str(DATA)
    env_bad = subprocess.run([sys.executable, "-c", "import balpoly.config"], capture_output=True, text=True,
                             env={"BALPOLY_TOL": "abc", "PATH": ""})
    assert env_bad.returncode != 0 and "BALPOLY_TOL" in env_bad.stderr
    r = subprocess.run([sys.executable, "-c", "from balpoly.config import get_tol; print(get_tol())"],
                       capture_output=True, text=True, env={"BALPOLY_TOL": "1e-6", "PATH": ""})
    assert r.stdout.strip() == "1e-06"
