import csv
import io
import json

import pytest

from conftest import bump_beam
from ebres import CompactCoeff, __version__
from ebres.cli import RunConfig, main, parse_complex, read_grid


@pytest.fixture
def files(tmp_path, step):
    (tmp_path / "pq.json").write_text(json.dumps(step.to_dict()))
    (tmp_path / "p.json").write_text(json.dumps(CompactCoeff.constant(2.0, 1.0).to_dict()))
    (tmp_path / "grid.json").write_text(json.dumps(
        {"rect": {"x0": -2, "x1": 2, "y0": -1, "y1": 1}, "nx": 3, "ny": 2}))
    (tmp_path / "beam.json").write_text(json.dumps(bump_beam().to_dict()))
    return tmp_path


def body(path):
    lines = path.read_text().splitlines()
    return [ln for ln in lines if not ln.startswith("#")]


def header_config(path):
    line = next(ln for ln in path.read_text().splitlines() if ln.startswith("# config: "))
    return json.loads(line[len("# config: "):])


def test_det_csv(files):
    out = files / "det.csv"
    assert main(["det", "--pq", str(files / "pq.json"), "--grid", str(files / "grid.json"),
                 "--out", str(out)]) == 0
    rows = list(csv.reader(io.StringIO("\n".join(body(out)))))
    assert rows[0] == ["re_k", "im_k", "re_D", "im_D", "err_est", "N"]
    ks = [(float(r[0]), float(r[1])) for r in rows[1:]]
    assert len(ks) == 6 and ks == sorted(ks)
    assert f"# ebres {__version__}" in out.read_text()
    assert header_config(out)["subcommand"] == "det"


def test_det_is_deterministic_across_threads(files):
    a, b = files / "a.csv", files / "b.csv"
    args = ["det", "--pq", str(files / "pq.json"), "--grid", str(files / "grid.json")]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "3"]) == 0
    assert body(a) == body(b)


def test_seventeen_digits(files):
    out = files / "det.csv"
    main(["det", "--pq", str(files / "pq.json"), "--grid", str(files / "grid.json"), "--out", str(out)])
    row = body(out)[1].split(",")
    assert float(row[2]) == float("%.17g" % float(row[2]))
    assert len(row[2].lstrip("-").replace(".", "").lstrip("0")) >= 15


def test_oracle_csv(files):
    out = files / "o.csv"
    assert main(["oracle", "--p", str(files / "p.json"), "--grid", str(files / "grid.json"),
                 "--out", str(out)]) == 0
    assert body(out)[0] == "re_k,im_k,re_d,im_d,re_D,im_D"


def test_transform(files):
    out = files / "pq_beam.json"
    assert main(["transform", "--beam", str(files / "beam.json"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["version"] == __version__ and doc["gamma"] > 0 and doc["kappa_integral"] > 0
    assert set(doc["p"]) >= {"support_end", "pieces"}


def test_count_and_dry_run(files, capsys):
    assert main(["count", "--pq", str(files / "pq.json"), "--radii", "5,10", "--dry-run"]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert plan["options"]["radii"] == [5.0, 10.0]
    out = files / "c.csv"
    assert main(["count", "--pq", str(files / "pq.json"), "--radii", "5,10", "--out", str(out)]) == 0
    rows = body(out)
    assert rows[0].startswith("r,N,N1,N2,N3,N4,N_circle")
    assert rows[2].split(",")[1] == rows[2].split(",")[6]


def test_resonances_trace_pipeline(files):
    res = files / "res.json"
    assert main(["resonances", "--pq", str(files / "pq.json"), "--rect", "-6,1,-6,6",
                 "--out", str(res)]) == 0
    doc = json.loads(res.read_text())
    assert doc["zeros"] and {"re", "im", "mult", "quadrant", "residual"} <= set(doc["zeros"][0])
    assert doc["config"]["options"]["rect"] == [-6.0, 1.0, -6.0, 6.0]
    # the rectangle misses part of the disc, so the trace step must refuse it
    assert main(["trace", "--pq", str(files / "pq.json"), "--res", str(res), "--k", "2+2i",
                 "--radii", "3,5", "--out", str(files / "t.json")]) == 2


def test_scatter(files):
    out = files / "s.csv"
    assert main(["scatter", "--pq", str(files / "pq.json"), "--kmin", "0.5", "--kmax", "4",
                 "--n", "8", "--out", str(out)]) == 0
    rows = body(out)
    assert rows[0] == "k,re_S,im_S,phi,identity_residual" and len(rows) >= 9
    assert max(float(r.split(",")[4]) for r in rows[1:]) < 1e-7


def test_verify(files):
    out = files / "v.json"
    assert main(["verify", "--pq", str(files / "pq.json"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["all_pass"] and all(c["value"] < c["threshold"] for c in doc["checks"].values())


def test_malformed_json_reports_byte_offset(files, capsys):
    bad = files / "bad.json"
    bad.write_bytes('{"p": "é", \n  oops}'.encode())
    assert main(["det", "--pq", str(bad), "--grid", str(files / "grid.json")]) == 1
    err = capsys.readouterr().err
    # character offset 14, byte offset 15 because of the two-byte character
    assert str(bad) in err and "byte 15" in err


@pytest.mark.parametrize("argv", [
    ["det", "--pq", "missing.json", "--grid", "missing.json"],
    ["count", "--pq", "x.json", "--radii", "10,5"],
    ["count", "--pq", "x.json", "--radii", "a,b"],
    ["det", "--unknown"],
    ["resonances", "--pq", "x.json", "--rect", "1,2,3"],
    [],
])
def test_input_errors_exit_one(argv):
    assert main(argv) == 1


def test_config_file_roundtrip(files):
    cfg = RunConfig("count", {"pq": str(files / "pq.json")}, {"radii": [5.0], "order": 64}, None, 3)
    text = cfg.to_json()
    assert RunConfig.from_json(text).to_json() == text
    path = files / "cfg.json"
    path.write_text(text)
    out = files / "c.csv"
    assert main(["count", "--config", str(path), "--out", str(out)]) == 0
    got = header_config(out)
    assert got["options"]["radii"] == [5.0] and got["seed"] == 3


def test_config_subcommand_mismatch(files):
    path = files / "cfg.json"
    path.write_text(RunConfig("det").to_json())
    assert main(["count", "--config", str(path)]) == 1


@pytest.mark.parametrize("s, z", [("2+2i", 2 + 2j), ("-1.5i", -1.5j), ("3", 3), ("1-2j", 1 - 2j)])
def test_parse_complex(s, z):
    assert parse_complex(s) == z


def test_grid_points_sorted():
    pts = read_grid({"points": [{"re": 2, "im": 0}, {"re": 1, "im": 1}, {"re": 1, "im": -1}]})
    assert list(pts) == [1 - 1j, 1 + 1j, 2]
