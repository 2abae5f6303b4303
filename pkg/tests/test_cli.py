import csv
import io
import json
import subprocess
import sys

import pytest

from skilltransfer.cli import build_parser, main
from skilltransfer.planner import OccupancyGrid
from skilltransfer.sim import RunReport

from conftest import FIXTURES

DRAWER = str(FIXTURES / "drawer.json")
DOOR = str(FIXTURES / "door.json")
CORRIDOR = str(FIXTURES / "corridor.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sim_run_drawer(capsys):
    code, out, _ = run(capsys, "sim", "run", "--scenario", DRAWER)
    assert code == 0
    rep = RunReport.from_json(out)
    assert rep.success and rep.total_collision_loss == 0.0


def test_sim_run_is_byte_stable(capsys):
    a = run(capsys, "sim", "run", "--scenario", DOOR, "--seed", "7")[1]
    b = run(capsys, "sim", "run", "--scenario", DOOR, "--seed", "7")[1]
    assert a == b and json.loads(a)["success"]


def test_sim_run_failure_exits_1(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"planner": {"hard_check": True}}))
    code, out, err = run(capsys, "sim", "run", "--scenario", CORRIDOR, "--config", str(cfg))
    assert code == 1
    assert not json.loads(out)["success"]
    assert "collision" in err


def test_sim_run_out_and_svg(capsys, tmp_path):
    out, svg = tmp_path / "r.json", tmp_path / "r.svg"
    code, stdout, _ = run(capsys, "sim", "run", "--scenario", DRAWER, "--out", str(out), "--svg", str(svg))
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["success"]
    assert svg.read_text().startswith("<svg")


def test_missing_file_exits_1(capsys):
    code, _, err = run(capsys, "graph", "triples", "missing.json")
    assert code == 1
    assert "not found" in err and "missing.json" in err


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err
    with pytest.raises(SystemExit) as e:
        main(["plan", "--scenario", DRAWER, "--goal", "1,2"])
    assert e.value.code == 2


def _subcommands():
    ap = build_parser()
    sub = next(a for a in ap._actions if a.dest == "command")
    out = []
    for name, p in sub.choices.items():
        nested = [a for a in p._actions if getattr(a, "choices", None) and isinstance(a.choices, dict)]
        if nested:
            out += [((name, child), cp) for child, cp in nested[0].choices.items()]
        else:
            out.append(((name,), p))
    return out


@pytest.mark.parametrize("argv,parser", _subcommands(), ids=lambda v: " ".join(v) if isinstance(v, tuple) else "")
def test_help_documents_every_flag(capsys, argv, parser):
    with pytest.raises(SystemExit) as e:
        main([*argv, "--help"])
    assert e.value.code == 0
    text = capsys.readouterr().out
    flags = [s for a in parser._actions for s in a.option_strings if s.startswith("--")]
    assert "--seed" in flags
    for f in flags:
        assert f in text
    for a in parser._actions:
        assert a.help, f"{argv}: {a.option_strings or a.dest} lacks help"


def test_graph_validate_and_triples(capsys):
    code, out, _ = run(capsys, "graph", "validate", DRAWER)
    assert code == 0 and out.splitlines() == [
        "ok task: 11 nodes, 21 edges", "ok scene: 8 nodes, 6 edges", "ok state: 7 nodes, 0 edges"]
    code, out, _ = run(capsys, "graph", "triples", DRAWER, "--kind", "scene")
    assert code == 0
    assert "drawer_handle-attach-drawer" in out.splitlines()
    assert "cup_2-on-table" in out.splitlines()


def test_graph_validate_rejects_bad_graph(capsys, tmp_path):
    bad = tmp_path / "g.json"
    bad.write_text(json.dumps({"kind": "scene", "nodes": [], "edges": [
        {"id": "e0", "source": "a", "target": "b", "relation": "on", "attributes": {}}]}))
    code, _, err = run(capsys, "graph", "validate", str(bad))
    assert code == 1 and err.startswith("error:")


def test_plan_and_grid_dump(capsys, tmp_path):
    dump = tmp_path / "grid.bin"
    code, out, _ = run(capsys, "plan", "--scenario", DRAWER, "--goal", "0.45,-0.2,0.95", "--grid-dump", str(dump))
    assert code == 0
    wps = json.loads(out)
    assert len(wps) >= 2
    grid = OccupancyGrid.from_bytes(dump.read_bytes())
    assert grid.dims == (55, 60, 40)  # 1.1 x 1.2 x 0.8 m at 0.02 m
    assert grid.occupied.any()


def test_plan_hard_check_rejects_corridor(capsys):
    args = ["plan", "--scenario", CORRIDOR, "--goal", "0.81,0.01,0.78", "--exclude", "cup_1"]
    code, _, _ = run(capsys, *args)
    assert code == 0
    code, _, err = run(capsys, *args, "--hard-check")
    assert code == 1 and "safety distance" in err


def test_perceive_synth(capsys, tmp_path):
    img = tmp_path / "f.png"
    code, out, _ = run(capsys, "perceive", "--synth", "rect-line", "--save-image", str(img), "--seed", "3")
    assert code == 0
    doc = json.loads(out)
    assert {"points", "lines", "thresholds"} <= set(doc) and doc["lines"]
    code, out2, _ = run(capsys, "perceive", str(img))
    assert code == 0 and out2 == out


def test_perceive_without_input_is_domain_error(capsys):
    assert run(capsys, "perceive")[0] == 1


def test_transfer_mock(capsys):
    code, out, _ = run(capsys, "transfer", "--library", DOOR)
    assert code == 0
    doc = json.loads(out)
    assert [s["target"] for s in doc["plan"]][:4] == ["door_handle"] * 4


def test_transfer_http_unreachable(capsys, monkeypatch):
    monkeypatch.setenv("SKILL_LLM_BASE_URL", "http://127.0.0.1:9")
    monkeypatch.setenv("SKILL_LLM_API_KEY", "x")
    code, _, err = run(capsys, "transfer", "--library", DOOR, "--provider", "http")
    assert code == 1 and "error:" in err


def test_bench_csv(capsys, tmp_path):
    out = tmp_path / "table.csv"
    code, _, _ = run(capsys, "bench", "tactile", "--corpus", "synth", "--seeds", "1", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert list(rows[0]) == ["shape", "condition", "method", "rmse"]
    shapes = {r["shape"] for r in rows}
    assert len(shapes) == 6
    assert {r["method"] for r in rows} == {"adaptive", "fixed"}
    first = out.read_text()
    run(capsys, "bench", "tactile", "--seeds", "1", "--out", str(out))
    assert out.read_text() == first


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "skilltransfer", "graph", "triples", DRAWER, "--kind", "state"],
                       capture_output=True, text=True)
    assert p.returncode == 0
    p = subprocess.run([sys.executable, "-m", "skilltransfer"], capture_output=True, text=True)
    assert p.returncode == 2 and "usage" in p.stderr
