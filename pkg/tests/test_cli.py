import json

import numpy as np
import pytest

from crnli import cli
from crnli.catalog import get_network
from crnli.core import CRNetwork

EX1 = ["--f", "1,3,4", "--p", "1", "--c", "1", "--b", "1", "--alpha", "0.6666666666666666", "--beta", "0.4444444444444444"]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def eig_pairs(d):
    return np.array([complex(a, b) for a, b in d["eigenvalues"]])


def test_stability_branch_cycle_example(capsys):
    code, out, _ = run(["stability", "--network", "branch_cycle3", *EX1, "--support", "I=1,3", "J=2,3"], capsys)
    assert code == 0
    d = json.loads(out)
    ev = eig_pairs(d)
    for lam in (-7 / 12, -0.5):
        assert np.min(np.abs(ev - lam)) < 1e-9
    assert d["verdict"] == "stable"
    chk = d["factor_checks"][0]
    assert chk["ok"] and chk["applies_to_state"]


def test_stability_support_without_point(capsys):
    code, _, err = run(["stability", "--network", "branch_cycle3", *EX1, "--support", "I=1,3", "J=1,2"], capsys)
    assert code == cli.EXIT_NUMERIC
    rec = json.loads(err)
    assert rec["exit_code"] == code and rec["error"] == "no_fixed_point"


def test_stability_from_state_file(tmp_path, capsys):
    st = tmp_path / "st.json"
    st.write_text(json.dumps({"x": [0.75, 0.0, 4.5], "r": [0.0, 2.25, 3.0]}))
    code, out, _ = run(["stability", "--network", "branch_cycle3", *EX1, "--state", str(st)], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["verdict"] == "stable" and d["residual"] < 1e-12


def test_fixed_points_asym2(tmp_path, capsys):
    prm = tmp_path / "generic.json"
    prm.write_text(json.dumps({"f": [1.0, 1.0]}))
    code, out, _ = run(["fixed-points", "--network", "asym2", "--params", str(prm)], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["count"] == 4
    li = [s for s in d["solutions"] if s["has_li"]]
    assert len(li) == 1
    assert set(li[0]["labels"]) == {"persistent", "altruistic"}
    assert li[0]["stability"]["verdict"] == "unstable"


def test_catalog_show_roundtrip(capsys):
    code, out, _ = run(["catalog", "show", "composed5"], capsys)
    assert code == 0
    d = json.loads(out)
    assert CRNetwork.from_dict(d["network"]) == get_network("composed5")


def test_catalog_list_text(capsys):
    code, out, _ = run(["catalog", "list", "--format", "text"], capsys)
    assert code == 0
    assert "branch_cycle3" in out and "composed5" in out


def test_simulate_csv_header(capsys):
    code, out, _ = run(["simulate", "--network", "branch_cycle3", *EX1, "--t-end", "2", "--stride", "5"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,x1,x2,x3,r1,r2,r3"
    assert float(lines[-1].split(",")[0]) == pytest.approx(2.0)


def test_output_env_directory(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "out"))
    code, out, _ = run(["catalog", "show", "asym2"], capsys)
    assert code == 0 and out == ""
    written = tmp_path / "out" / "asym2.json"
    assert json.loads(written.read_text())["name"] == "asym2"
    assert not list((tmp_path / "out").glob(".*.tmp"))


def test_explicit_output_wins(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    target = tmp_path / "here.json"
    assert run(["-o", str(target), "catalog", "list"], capsys)[0] == 0
    assert target.exists() and not (tmp_path / "env").exists()


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "a.txt"
    cli.atomic_write(p, "one")
    cli.atomic_write(p, "two")
    assert p.read_text() == "two"
    assert [q.name for q in tmp_path.iterdir()] == ["a.txt"]


def test_sweep_seeded_and_csv(tmp_path, capsys):
    argv = ["sweep", "--network", "branch_cycle3", *EX1, "--support", "I=1,3", "J=2,3",
            "--samples", "20", "--seed", "9", "--summary"]
    code, a, _ = run(argv + ["--csv", str(tmp_path / "s.csv")], capsys)
    assert code == 0
    _, b, _ = run(argv, capsys)
    assert a == b
    d = json.loads(a)
    assert d["stable_fraction"] == 1.0 and d["spec"]["seed"] == 9 and "records" not in d
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 21


def test_sweep_bad_radius(capsys):
    code, _, err = run(["sweep", "--network", "branch_cycle3", *EX1, "--support", "I=1,3", "J=2,3",
                        "--radius", "0.7"], capsys)
    assert code == cli.EXIT_USAGE and json.loads(err)["exit_code"] == code


@pytest.mark.parametrize("argv, code", [
    (["bogus"], cli.EXIT_USAGE),
    (["stability", "--network", "asym2", "--f", "1,1"], cli.EXIT_USAGE),
    (["stability", "--network", "asym2", "--f", "1,1", "--support", "I=1", "K=2"], cli.EXIT_USAGE),
    (["fixed-points", "--network", "nope", "--f", "1"], cli.EXIT_MODEL),
    (["fixed-points", "--network", "asym2", "--f", "1,1", "--alpha", "0.3", "--beta", "0.5"], cli.EXIT_MODEL),
    (["fixed-points", "--network", "asym2", "--f", "1"], cli.EXIT_MODEL),
    (["fixed-points", "--network", "asym2", "--params", "/nonexistent/p.json"], cli.EXIT_INPUT),
    (["fixed-points", "--network", "asym2"], cli.EXIT_USAGE),
])
def test_exit_codes(argv, code, capsys):
    got, _, err = run(argv, capsys)
    assert got == code
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["exit_code"] == code and rec["message"]


def test_bad_json_input(tmp_path, capsys):
    bad = tmp_path / "p.json"
    bad.write_text("{not json")
    code, _, err = run(["fixed-points", "--network", "asym2", "--params", str(bad)], capsys)
    assert code == cli.EXIT_INPUT


def test_help_lists_exit_codes(capsys):
    code, out, _ = run(["--help"], capsys)
    assert code == 0
    for k in range(6):
        assert f"  {k}  " in out
    assert cli.OUTPUT_ENV in out


def test_json_floats_roundtrip(capsys):
    _, out, _ = run(["stability", "--network", "branch_cycle3", *EX1, "--support", "I=1,3", "J=2,3"], capsys)
    d = json.loads(out)
    assert d["params"]["alpha"] == 0.6666666666666666
