import json

import pytest
from click.testing import CliRunner

from qindex.cli import main
from qindex.fixtures import gluingFixture


@pytest.fixture
def run():
    runner = CliRunner()

    def go(*args):
        return runner.invoke(main, list(args), catch_exceptions=False)

    return go


def test_tetindex_table(run):
    r = run("tetindex", "0", "0", "--order", "12", "--output", "table")
    assert r.exit_code == 0
    assert r.output.strip().startswith("1 - q - 2*q^2")


def test_tetindex_leading_term(run):
    r = run("tetindex", "0", "0", "--order", "1", "--output", "table")
    assert r.output.strip() == "1 + O(q^1/2)"


def test_tetindex_json(run):
    r = run("tetindex", "1", "1", "--order", "12")
    obj = json.loads(r.output)
    assert r.exit_code == 0
    assert obj["m"] == 1 and obj["e"] == 1


def test_bad_flag_is_usage_error(run):
    r = run("tetindex", "0", "0", "--bogus")
    assert r.exit_code == 2


def test_order_and_q_limits(run):
    assert run("tetindex", "0", "0", "--order", "100").exit_code == 2
    assert run("tetindex", "0", "0", "--order", "100", "--unsafe-order").exit_code == 0
    assert run("integral", "fig8", "--q", "0.5").exit_code == 2


def test_index3d_fig8(run):
    r = run("index3d", "4_1", "0", "0", "--output", "table")
    assert r.exit_code == 0
    assert "= 1 - 2*q^2 - 3*q^4 + 2*q^6 + 8*q^8" in r.output


def test_index3d_cpcbbbdei_exit_4(run):
    r = run("index3d", "cPcbbbdei", "0", "0")
    assert r.exit_code == 4
    assert "NoStrictAngles" in r.output or "NoStrictAngles" in (r.stderr if r.stderr_bytes is not None else "")


def test_malformed_file_exit_3(run, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n": 2, "rows": [[1, 2]]}')
    assert run("index3d", str(p), "0", "0").exit_code == 3
    q = tmp_path / "notjson.json"
    q.write_text("{")
    assert run("integral", str(q)).exit_code == 3


def test_gluing_file_roundtrip(run, tmp_path):
    p = tmp_path / "fig8.json"
    p.write_text(gluingFixture("fig8").to_json())
    a = json.loads(run("index3d", str(p), "1", "0", "--order", "12").output)
    b = json.loads(run("index3d", "fig8", "1", "0", "--order", "12").output)
    assert a["series"] == b["series"]


def test_integral_json(run):
    r = run("integral", "fig8", "--s", "angle:0.1", "--t", "angle:0.3")
    assert r.exit_code == 0
    obj = json.loads(r.output)
    assert obj["gridUsed"] >= 32


def test_fourier_command(run):
    r = run("fourier", "4_1", "--mmax", "0", "--emax", "0", "--grid", "16")
    assert r.exit_code == 0
    obj = json.loads(r.output)
    assert abs(obj["entries"][0]["value"]["re"] - 0.9797020818) < 1e-9


def test_verify_suites(run):
    r = run("verify", "pentagon-series", "--order", "10", "--bound", "1")
    assert r.exit_code == 0
    assert json.loads(r.output)["passed"]
    assert run("verify", "symmetries", "--order", "8", "--bound", "1").exit_code == 0
    assert run("verify", "inversion", "--samples", "20").exit_code == 0
    assert run("verify", "nonsense").exit_code == 2


def test_examples(run):
    r = run("examples", "list", "--output", "table")
    assert "fig8" in r.output and "k6_1" in r.output
    r = run("examples", "run", "unknot")
    assert r.exit_code == 0
    obj = json.loads(r.output)
    assert obj["passed"] and obj["maxAbsIntegral"] < 1e-8
    assert "unknot-cMcabbgds: PASS" in run("examples", "run", "unknot", "--output", "table").output
    r = run("examples", "run", "cPcbbbdei")
    assert r.exit_code == 0
    assert run("examples", "run", "nope").exit_code == 3
