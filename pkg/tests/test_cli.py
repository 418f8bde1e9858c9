import csv
import json
import xml.etree.ElementTree as ET

import pytest
from conftest import tri

from astargcs import cli
from astargcs.instances import save_instance
from astargcs.search import InternalConsistencyError

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def tri_file(tmp_path):
    path = tmp_path / "tri.json"
    save_instance(tri(), path)
    return path


def test_solve_tri_has_zero_gap(tri_file, tmp_path):
    rep, trace = tmp_path / "r.json", tmp_path / "t.csv"
    rc = cli.main(["solve", str(tri_file), "--algo", "astar-gcs", "--sinit", "astar", "--weight", "1.0",
                   "--report", str(rep), "--trace", str(trace)])
    assert rc == 0
    r = json.loads(rep.read_text())
    assert r["seed"] == 0 and r["accuracy"] == 1e-7 and r["version"]
    # both bounds carry solver error of order the accuracy; the gap is zero to that precision
    assert r["result"]["gap_pct"] == pytest.approx(0.0, abs=1e-4)
    assert r["result"]["C_lb"] == pytest.approx(2.0, abs=1e-6)
    assert trace.read_text().startswith("iter,phase,S_size")


def test_solve_baseline_and_preempt(tmp_path):
    inst = tmp_path / "m.json"
    assert cli.main(["generate", "maze", "--rows", "4", "--cols", "4", "--seed", "2", "-o", str(inst)]) == 0
    rep = tmp_path / "r.json"
    assert cli.main(["solve", str(inst), "--algo", "baseline", "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["result"]["iterations"] == 1
    assert cli.main(["solve", str(inst), "--max-iters", "1", "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["result"]["termination"] == "preempted"


def test_heuristic_and_oracle(tri_file, tmp_path, capsys):
    out = tmp_path / "h.json"
    assert cli.main(["heuristic", str(tri_file), "--method", "h1", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["values"] == {"0": 2.0, "1": 1.0, "2": 0.0}
    hrep = tmp_path / "r.json"
    assert cli.main(["solve", str(tri_file), "--heuristic", str(out), "--report", str(hrep)]) == 0
    capsys.readouterr()
    assert cli.main(["oracle", str(tri_file)]) == 0
    o = json.loads(capsys.readouterr().out)
    assert o["c_opt"] == pytest.approx(2.0) and o["path"] == [0, 1, 2]


def test_bench_row_contract(tmp_path):
    d = tmp_path / "inst"
    d.mkdir()
    for i, fam in enumerate(["maze", "maze", "bars"]):
        cli.main(["generate", fam, "--rows", "4", "--cols", "4", "--width", "8", "--height", "8",
                  "--bars", "4", "--seed", str(i), "-o", str(d / f"i{i}.json")])
    out, summ = tmp_path / "b.csv", tmp_path / "s.csv"
    assert cli.main(["bench", str(d), "--weights", "0,1", "-o", str(out), "--summary", str(summ)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == cli.BENCH_COLUMNS
    assert len(rows) - 1 == 3 * 2 * 2
    assert {r[2] for r in rows[1:]} == {"first", "final"}
    for r in rows[1:]:
        assert r[9] == "n/a" or float(r[9]) >= -1e-4
    assert len(list(csv.reader(summ.open()))) == 1 + 12


def test_plot_is_well_formed(tmp_path):
    inst, rep, svg = tmp_path / "m.json", tmp_path / "r.json", tmp_path / "m.svg"
    cli.main(["generate", "maze", "--rows", "4", "--cols", "4", "-o", str(inst)])
    cli.main(["solve", str(inst), "--report", str(rep)])
    assert cli.main(["plot", str(inst), "--report", str(rep), "-o", str(svg)]) == 0
    root = ET.parse(svg).getroot()
    assert len(root.findall(f"{SVG}polyline")) == 1


def test_plot_hpolytope_and_rejects_3d(tmp_path):
    from astargcs.core import ConvexSet, GcsGraph

    poly = ConvexSet.hpolytope([[1.0, 1.0]], [1.5], [0, 0], [1, 1])
    g = GcsGraph((ConvexSet.point([-1, 0]), poly, ConvexSet.point([2, 2])), ((0, 1), (1, 2)), 0, 2)
    svg = cli.render_svg(g)
    root = ET.fromstring(svg)
    assert len(root.findall(f".//{SVG}polygon")) == 1
    inst = tmp_path / "v.json"
    cli.main(["generate", "village", "--nx", "3", "--ny", "3", "--nz", "2", "-o", str(inst)])
    assert cli.main(["plot", str(inst)]) == cli.EXIT_USER


def test_exit_codes(tmp_path, tri_file, monkeypatch):
    assert cli.main(["solve", str(tmp_path / "missing.json")]) == cli.EXIT_USER
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dimension": 2, "vertices": []}))
    assert cli.main(["solve", str(bad)]) == cli.EXIT_USER

    def boom(*a, **k):
        raise InternalConsistencyError("no growth")

    monkeypatch.setattr(cli, "run_astar_gcs", boom)
    assert cli.main(["solve", str(tri_file)]) == cli.EXIT_INTERNAL


def test_no_path_exit_code(tmp_path, monkeypatch):
    from astargcs.core import NoPathError

    def nopath(*a, **k):
        raise NoPathError("unreachable")

    path = tmp_path / "t.json"
    save_instance(tri(), path)
    monkeypatch.setattr(cli, "exact_opt", nopath)
    assert cli.main(["oracle", str(path)]) == cli.EXIT_NO_PATH
