import json

import jsonschema
import pytest

from conftest import run_cli
from fibretool.cli import envelope_schema, load_config
from fibretool.errors import ConfigParse

GOLDEN_RUNS = {
    "surgery_p2_q1.json": ["surgery", "--p", "2", "--q", "1"],
    "construct_multiple_fiber_p3.json": ["construct", "--kind", "multiple-fiber", "--p", "3", "--phi", "0.5"],
    "blf_n1_p2_q3.json": ["blf", "--n", "1", "--p", "2", "--q", "3"],
    "scan_multiple_fiber_p3_g8.json": ["scan", "--map", "multiple-fiber", "--p", "3", "--grid", "8,8,8,8"],
    "fiber_seifert_p3_q2.json": ["fiber", "--map", "seifert", "--p", "3", "--q", "2",
                                 "--target", "0.25,0", "--grid", "32,32,32"],
}
THREADED = {"scan_multiple_fiber_p3_g8.json", "fiber_seifert_p3_q2.json"}


@pytest.fixture(autouse=True)
def clean_cwd(tmp_path, monkeypatch):
    # keep any fibretool.json in the caller's directory out of the way
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("FIBRETOOL_THREADS", raising=False)


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden_envelopes(name, golden):
    code, out, err = run_cli(*GOLDEN_RUNS[name])
    assert code == 0, err
    assert out == (golden / name).read_text()
    jsonschema.validate(json.loads(out), envelope_schema())


@pytest.mark.parametrize("name", sorted(THREADED))
def test_thread_count_does_not_change_output(name, golden):
    want = (golden / name).read_text()
    for n in ("1", "8"):
        assert run_cli(*GOLDEN_RUNS[name], "--threads", n)[1] == want
        assert run_cli(*GOLDEN_RUNS[name], env={"FIBRETOOL_THREADS": n})[1] == want


def test_surgery_content():
    code, out, _ = run_cli("surgery", "--p", "5", "--q", "2", "--alpha", "1,0")
    env = json.loads(out)
    assert code == 0
    assert env["result"]["matrix"] == [[1, 0, 0], [0, 1, 2], [0, 2, 5]]
    assert env["result"]["gamma"] == [2, 0, 5]
    assert env["result"]["gamma_normalized"] == [0, 2, 5]
    assert env["result"]["integral"] is False
    assert "wall_time" not in env


def test_timing_flag():
    env = json.loads(run_cli("surgery", "--p", "2", "--q", "1", "--timing")[1])
    assert env["wall_time"] >= 0
    jsonschema.validate(env, envelope_schema())


def test_blf_writes_files(tmp_path, golden):
    svg, js = tmp_path / "d.svg", tmp_path / "d.json"
    code, out, _ = run_cli("blf", "--n", "1", "--p", "2", "--q", "3", "--svg", str(svg), "--json", str(js))
    assert code == 0
    assert svg.read_text() == (golden / "e1_2_3.svg").read_text()
    assert js.read_text() == (golden / "e1_2_3.diagram.json").read_text()
    assert json.loads(out)["command"]["svg"] == str(svg)


def test_fiber_csv(tmp_path):
    csv = tmp_path / "f.csv"
    code, _, _ = run_cli("fiber", "--map", "fold-chart", "--signs", "+-", "--target=0,-0.5", "--csv", str(csv))
    assert code == 0
    assert csv.read_text().startswith("component,c0,c1,c2\n")


@pytest.mark.parametrize("argv", [
    ["surgery", "--p", "2"],
    ["surgery", "--p", "4", "--q", "6"],
    ["surgery", "--p", "0", "--q", "3"],
    ["surgery", "--p", "3", "--q", "1", "--alpha", "2,4"],
    ["scan", "--map", "seifert"],
    ["scan", "--map", "fold-chart", "--signs", "+-", "--grid", "32,32"],
    ["scan", "--map", "seifert", "--p", "2", "--grid", "4,4,4"],
    ["blf", "--n", "1", "--p", "2", "--q", "4"],
    ["construct", "--kind", "multiple-fiber", "--p", "0"],
    ["nonsense"],
])
def test_usage_errors_exit_1(argv):
    code, out, err = run_cli(*argv)
    assert code == 1
    assert out == ""
    assert err.startswith("error:")


def test_failed_fiber_exits_2():
    code, out, _ = run_cli("fiber", "--map", "seifert", "--p", "2", "--target", "0,0", "--grid", "16,16,16")
    env = json.loads(out)
    assert code == 2
    assert env["result"] is None
    assert env["validation"]["first_violation"].startswith("ToleranceTooCoarse")
    jsonschema.validate(env, envelope_schema())
    code, out, _ = run_cli("fiber", "--map", "seifert", "--p", "2", "--target", "3,0", "--grid", "16,16,16")
    assert code == 2 and json.loads(out)["validation"]["first_violation"].startswith("EmptyFiber")


def test_config_delta_is_echoed(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"delta": 1e-3}))
    code, out, _ = run_cli("fiber", "--map", "seifert", "--p", "2", "--target", "0.25,0",
                           "--grid", "16,16,16", "--config", str(cfg))
    env = json.loads(out)
    assert env["command"]["delta"] == 1e-3
    assert code in (0, 2)


def test_default_config_file_is_picked_up(tmp_path):
    (tmp_path / "fibretool.json").write_text('{"tolerance": 0.5}')
    env = json.loads(run_cli("scan", "--map", "seifert", "--p", "2", "--grid", "8,8,8", "--no-samples")[1])
    assert env["command"]["tolerance"] == 0.5


def test_no_config_gives_defaults():
    cfg = load_config()
    assert cfg["delta"] is None and cfg["tolerance"] == 1e-8
    assert cfg["fiber_grid"]["multiple_fiber"] == [32, 32, 24, 24]


def test_malformed_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "tolerance": 1e-6,\n  "delta": ,\n}\n')
    code, _, err = run_cli("surgery", "--p", "2", "--q", "1", "--config", str(bad))
    assert code == 1
    assert "bad.json:3:" in err
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{\n  "colour": 1\n}\n')
    with pytest.raises(ConfigParse) as info:
        load_config(unknown, explicit=True)
    assert info.value.line == 2
    assert run_cli("surgery", "--p", "2", "--q", "1", "--config", str(tmp_path / "missing.json"))[0] == 1
