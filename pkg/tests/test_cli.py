import json
import math
import subprocess
import sys

import numpy as np
import pytest

from eincausal import io as sio
from eincausal.causal_analysis import CausalSet
from eincausal.cli import main

P0 = '{"x":[1,0,0],"t":0}'
DIAMOND = '{"kind":"diamond","a":{"x":[0,0,1],"t":0},"b":{"x":[0,0,1],"t":1}}'
FLAT = '{"mesh":{"spacing":0.39269908169872414,"dim":2,"function":{"kind":"constant","value":0.0}}}'
TALL = '{"kind":"diamond","a":{"x":[0,0,1],"t":-4},"b":{"x":[0,0,1],"t":4}}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, (json.loads(out) if out else None), err


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_relate_example(capsys):
    code, out, _ = run_json(capsys, "relate", "--dim", "2", "-p", P0, "-q",
                            '{"x":[-1,0,0],"t":3.14159265358979}')
    assert code == 0 and out == {"relation": "CausalNullFuture"}


def test_geodesic_then_classify(capsys, tmp_path):
    code, out, _ = run(capsys, "geodesic", "--dim", "2", "-p", P0, "--dir", "[0,1,0]",
                       "--s-max", "6.2832", "--samples", "100")
    assert code == 0
    curve = sio.curve_from_dict(json.loads(out))
    assert len(curve) == 100
    path = write(tmp_path, "curve.json", out)
    code, verdict, _ = run_json(capsys, "curve-classify", "--curve", path)
    assert code == 0 and verdict["kind"] == "NullGeodesic"


def test_geodesic_csv(capsys):
    code, out, _ = run(capsys, "geodesic", "-p", P0, "--dir", "[0,0,1]", "--s-max", "1",
                       "--samples", "3", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "t,x0,x1,x2" and len(lines) == 4


def test_not_causal_curve_exits_one(capsys):
    curve = '{"samples":[{"t":0,"x":[1,0,0]},{"t":0.1,"x":[0,1,0]}]}'
    code, verdict, _ = run_json(capsys, "curve-classify", "--curve", curve)
    assert code == 1 and verdict["kind"] == "NotCausal" and verdict["witness_segment"] == 0


def test_transform_apply_then_fit(capsys, tmp_path):
    code, out, _ = run(capsys, "transform-apply", "--random", "1.0", "--seed", "5", "--count", "8")
    assert code == 0
    data = json.loads(out)
    path = write(tmp_path, "pairs.json", out)
    code, fit, _ = run_json(capsys, "fit-liouville", "--pairs", path)
    assert code == 0 and fit["residual"] < 1e-6
    m = np.array(fit["transform"]["matrix"])
    assert np.linalg.norm(m - np.array(data["transform"]["matrix"])) < 1e-6


def test_transform_compose_output_reparses(capsys, tmp_path):
    code, out, _ = run(capsys, "transform-apply", "--random", "0.5", "--seed", "1", "--count", "6")
    t = json.loads(out)["transform"]
    f = write(tmp_path, "t.json", json.dumps(t))
    code, comp, _ = run_json(capsys, "transform-compose", "--first", f, "--second", f)
    assert code == 0
    sio.transform_from_dict(comp)


def test_transform_apply_single_cover_point(capsys):
    delta = json.dumps({"matrix": np.eye(5).ravel().tolist(), "winding": 1})
    code, out, _ = run_json(capsys, "transform-apply", "--transform", delta, "-p", P0)
    assert code == 0 and out["image"]["t"] == pytest.approx(2 * math.pi)


def test_boundary_and_graph_checks(capsys, tmp_path):
    code, out, _ = run(capsys, "boundary", "-p", P0, "--mesh", "0.4")
    g = sio.graph_from_dict(json.loads(out))
    assert code == 0 and g.full_sphere
    path = write(tmp_path, "g.json", out)
    code, v, _ = run_json(capsys, "graph-check", "--graph", path)
    assert code == 0 and v["achronal"] and not v["strict"]
    code, v, _ = run_json(capsys, "cauchy-check", "--graph", path, "--seed", "1", "--probes", "30")
    assert code == 0 and v["cauchy"]
    code, v, err = run_json(capsys, "expansion-check", "--graph", path, "--seed", "1")
    assert code == 2 and json.loads(err)["type"] == "PreconditionError"


def test_steep_graph_is_refuted(capsys):
    g = '{"mesh":{"spacing":0.4,"dim":2,"function":{"kind":"cone","center":[0,0,1],"slope":1.5,"offset":0}}}'
    code, v, _ = run_json(capsys, "graph-check", "--graph", g)
    assert code == 1 and not v["achronal"] and len(v["witness"]) == 2


def test_explicit_boundary_reparses(capsys):
    code, out, _ = run(capsys, "boundary", "-p", P0, "--mesh", "0.8", "--explicit", "--future")
    g = sio.graph_from_dict(json.loads(out))
    assert code == 0 and np.all(g.values >= 0.0)


def test_develop_escape_exits_one(capsys):
    cap = ('{"mesh":{"spacing":0.19634954084936207,"dim":2,"function":{"kind":"constant","value":0.0},'
           '"cap":{"center":[0,0,1],"radius":1.5707963267948966}}}')
    code, v, _ = run_json(capsys, "develop", "-q", '{"x":[0,0,1],"t":3}', "--graph", cap, "--seed", "0")
    assert code == 1 and v["verdict"] == "EscapeWitness"
    code, v, _ = run_json(capsys, "develop", "-q", '{"x":[0,0,1],"t":1}', "--graph", FLAT,
                          "--seed", "0", "--budget", "40")
    assert code == 0 and v["verdict"] == "InsideUpToSampling"


def test_embed_and_inverse(capsys):
    code, img, _ = run_json(capsys, "embed", "-m", '{"tm":0,"y":[0,0]}')
    assert code == 0 and img == {"x": [0.0, 0.0, 1.0], "t": 0.0}
    code, back, _ = run_json(capsys, "embed-inverse", "-p", '{"x":[0,0,1],"t":0.5}')
    assert code == 0 and back["y"] == [0.0, 0.0]
    code, _, err = run_json(capsys, "embed-inverse", "-p", '{"x":[1,0,0],"t":1.5707963267948966}')
    assert code == 2 and json.loads(err)["type"] == "DomainError"


def test_embed_csv(capsys):
    pts = '{"points":[{"tm":0,"y":[0,0]},{"tm":1,"y":[1,0]}]}'
    code, out, _ = run(capsys, "embed", "--points", pts, "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "tm,abs_y,t,d0"


def test_conformality(capsys):
    code, rep, _ = run_json(capsys, "conformality", "--samples", "20", "--seed", "3")
    assert code == 0 and rep["max_defect"] < 1e-5


def test_domain_check_membership_and_convexity(capsys):
    code, v, _ = run_json(capsys, "domain-check", "--domain", DIAMOND, "-p", '{"x":[0,0,1],"t":0.5}')
    assert code == 0 and v == {"contains": True}
    code, v, _ = run_json(capsys, "domain-check", "--domain", DIAMOND, "--seed", "0", "--trials", "100")
    assert code == 0 and v["convex"]
    stacked = ('{"kind":"union","parts":[' + DIAMOND + ','
               '{"kind":"diamond","a":{"x":[0,0,1],"t":1.5},"b":{"x":[0,0,1],"t":2.5}}]}')
    code, v, _ = run_json(capsys, "domain-check", "--domain", stacked, "--seed", "0", "--trials", "200")
    assert code == 1 and not v["convex"]


def test_boundary_split(capsys):
    d = '{"kind":"diamond","a":{"x":[0,0,1],"t":-1},"b":{"x":[0,0,1],"t":1}}'
    code, v, _ = run_json(capsys, "boundary-split", "--domain", d, "--graph", FLAT, "--seed", "0",
                          "--mesh", "0.2", "--triples", "200")
    assert code == 0 and v["valid"] and v["plus_count"] > 0 and v["minus_count"] > 0


def test_glue(capsys):
    other = '{"kind":"diamond","a":{"x":[0,0,1],"t":-3.5},"b":{"x":[0,0,1],"t":3.8}}'
    code, v, _ = run_json(capsys, "glue", "--first", TALL, "--second", other, "--graph", FLAT,
                          "--seed", "0", "--trials", "200", "--probes", "50")
    assert code == 0 and v["report"]["valid"]
    sio.domain_from_dict(v["domain"])
    short = '{"kind":"diamond","a":{"x":[0,0,1],"t":-1},"b":{"x":[0,0,1],"t":1}}'
    code, _, err = run_json(capsys, "glue", "--first", short, "--second", TALL, "--graph", FLAT,
                            "--seed", "0", "--probes", "50")
    assert code == 2 and json.loads(err)["type"] == "PreconditionError"


def test_conjugate_check(capsys):
    code, v, _ = run_json(capsys, "conjugate-check", "-p", P0, "--seed", "0", "--mesh", "0.4",
                          "--probes", "30")
    assert code == 0 and v["valid"]


def test_sprinkle_outputs(capsys):
    code, out, _ = run(capsys, "sprinkle", "--domain", DIAMOND, "--count", "20", "--seed", "4")
    cs = CausalSet.from_dict(json.loads(out))
    assert code == 0 and len(cs) == 20 and cs.is_partial_order()
    code, csv, _ = run(capsys, "sprinkle", "--domain", DIAMOND, "--count", "20", "--seed", "4",
                       "--format", "csv")
    assert csv.splitlines()[0] == "source,target"
    assert len(csv.splitlines()) - 1 == int(cs.relation.sum())


def test_limit_curve_command(capsys):
    curves = []
    for k in range(1, 8):
        v = np.array([0.0, 1.0, 1.0 / k])
        v /= np.linalg.norm(v)
        s = np.linspace(0, 1.5, 30)
        xs = np.cos(s)[:, None] * np.array([1.0, 0, 0]) + np.sin(s)[:, None] * v
        curves.append({"samples": [{"t": float(t), "x": x.tolist()} for t, x in zip(s, xs)]})
    code, out, _ = run_json(capsys, "limit-curve", "--curves", json.dumps({"curves": curves}),
                            "--grid", "32")
    assert code == 0 and len(sio.curve_from_dict(out)) == 33


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "relate", "-p", P0, "-q", P0, "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text()) == {"relation": "Coincident"}


# --------------------------------------------------------------------------
# errors and determinism


@pytest.mark.parametrize(
    "argv",
    [
        ["sprinkle", "--domain", DIAMOND, "--count", "5"],  # no seed
        ["relate", "-p", '{"x":[1,1,0],"t":0}', "-q", P0],  # not unit
        ["relate", "-p", "{not json", "-q", P0],
        ["relate", "-p", "/nonexistent/file.json", "-q", P0],
        ["relate", "--dim", "1", "-p", P0, "-q", P0],
        ["relate", "--eps", "0", "-p", P0, "-q", P0],
        ["relate", "-p", P0, "-q", P0, "--format", "csv"],
        ["no-such-command"],
        ["geodesic", "-p", P0, "--dir", "[1,0,0]", "--s-max", "1"],  # not tangent
    ],
)
def test_errors_exit_two_with_json_diagnostic(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    diag = json.loads(err)
    assert "error" in diag and "type" in diag


def test_identical_runs_are_byte_identical(capsys):
    argv = ["sprinkle", "--domain", DIAMOND, "--count", "30", "--seed", "11"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_module_entry_point_subprocess():
    cmd = [sys.executable, "-m", "eincausal", "relate", "--dim", "2", "-p", P0,
           "-q", '{"x":[-1,0,0],"t":3.14159265358979}']
    res = subprocess.run(cmd, capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout) == {"relation": "CausalNullFuture"}
    bad = subprocess.run(cmd[:4] + ["relate", "-p", "{}"], capture_output=True, text=True, check=False)
    assert bad.returncode == 2 and "error" in json.loads(bad.stderr)


def test_help_lists_csv_columns(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    out, _ = capsys.readouterr()
    assert info.value.code == 0 and "tm, abs_y, t, d0" in out
