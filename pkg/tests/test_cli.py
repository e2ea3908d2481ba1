import csv
import json
import subprocess
import sys

import pytest

from singcone.cli import SUBCOMMANDS, build_parser, main


def run(argv, capsys):
    status = main([str(a) for a in argv])
    out = capsys.readouterr()
    return status, out.out, out.err


def test_spectrum_outputs(tmp_path, capsys):
    status, out, _ = run(["spectrum", "--n", 3, "--beta", 1.5707963267948966, "--out", tmp_path], capsys)
    assert status == 0
    report = json.loads((tmp_path / "spectrum.json").read_text())
    assert report["command"] == "spectrum"
    assert report["results"]["lambda"] == pytest.approx(2.0, abs=1e-6)
    with (tmp_path / "spectrum.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theta", "phi1", "dphi1"]
    assert len(rows) == 2049 + 1
    assert json.loads(out)["files"] == [str(tmp_path / "spectrum.json"), str(tmp_path / "spectrum.csv")]


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "beta": 1.0, "nodes": 513}))
    assert run(["spectrum", "--config", cfg, "--out", tmp_path / "a"], capsys)[0] == 0
    assert run(["spectrum", "--config", cfg, "--beta", 1.2, "--out", tmp_path / "b"], capsys)[0] == 0
    a = json.loads((tmp_path / "a" / "spectrum.json").read_text())
    b = json.loads((tmp_path / "b" / "spectrum.json").read_text())
    assert a["config"]["beta"] == 1.0 and a["config"]["nodes"] == 513
    assert b["config"]["beta"] == 1.2 and b["config"]["nodes"] == 513
    assert a["results"]["lambda"] > b["results"]["lambda"]


@pytest.mark.parametrize("payload, field", [
    ({"n": 3, "beta": 1.0, "betta": 2.0}, "betta"),
    ({"n": "three", "beta": 1.0}, "n"),
    ({"n": 3, "beta": 4.0}, "beta"),
    ({"n": 3, "beta": 1.0, "bc": "robin"}, "bc"),
])
def test_config_errors_exit_2(tmp_path, capsys, payload, field):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(payload))
    status, _, err = run(["spectrum", "--config", cfg, "--out", tmp_path], capsys)
    assert status == 2
    msg = json.loads(err)
    assert msg["error"] == "config" and msg["field"] == field
    assert not (tmp_path / "spectrum.json").exists()


def test_malformed_json_exit_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    status, _, err = run(["spectrum", "--config", cfg, "--out", tmp_path], capsys)
    assert status == 2 and json.loads(err)["error"] == "config"


def test_missing_required_parameter_exit_2(tmp_path, capsys):
    status, _, err = run(["spectrum", "--n", 3, "--out", tmp_path], capsys)
    assert status == 2 and json.loads(err)["field"] == "beta"


def test_subcritical_exponent_exit_3(tmp_path, capsys):
    status, _, err = run(["assemble", "--n", 3, "--beta", 1.5707963267948966, "--p", 1.9,
                          "--out", tmp_path], capsys)
    assert status == 3
    msg = json.loads(err)
    assert "p*" in msg["message"]
    assert not (tmp_path / "assemble.json").exists()


def test_unwritable_output_exit_4(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    status, _, err = run(["spectrum", "--n", 3, "--beta", 1.0, "--nodes", 257, "--out", blocker / "sub"], capsys)
    assert status == 4 and json.loads(err)["error"] == "io"


def test_deterministic_outputs(tmp_path, capsys):
    for d in ("a", "b"):
        assert run(["heteroclinic", "--n", 3, "--lambda", 2.0, "--p", 2.1, "--mu", 0.5,
                    "--out", tmp_path / d], capsys)[0] == 0
    for name in ("heteroclinic.json", "heteroclinic.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_help_lists_csv_columns():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, (_, doc) in SUBCOMMANDS.items():
        text = sub.choices[name].format_help()
        assert "CSV columns:" in text and doc.split(":")[1].strip().split(",")[0] in text


def test_verify_all_and_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "singcone", "verify-all", "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    report = json.loads((tmp_path / "verify_all.json").read_text())
    assert report["results"]["all_passed"]
    with (tmp_path / "verify_all.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(r["passed"] == "True" for r in rows)
