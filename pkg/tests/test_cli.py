import csv
import io
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from qcmlab.cli import COMMANDS, main


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--output-dir", str(out)])
    return code, out


def summary(out):
    return dict(ln.split(" = ", 1) for ln in (out / "summary.txt").read_text().splitlines() if " = " in ln)


def test_eval_map_origin_prints_zero(tmp_path, capsys):
    code, out = run(tmp_path, "eval-map", "--measure", "uniform-ball", "--at", "0,0")
    assert code == 0
    assert capsys.readouterr().out.strip() == "(0, 0)"
    assert (out / "report.csv").exists()


def test_paper_witness_fails(tmp_path):
    code, out = run(tmp_path, "check-isotropic", "--measure", "power:-1", "--paper-witness", "--eps", "1e-3")
    assert code == 1
    s = summary(out)
    assert s["overall_verdict"] == "fail"
    assert any(k.startswith("witness.") for k in s)


def test_paper_witness_passes_for_positive_power(tmp_path):
    code, _ = run(tmp_path, "check-isotropic", "--measure", "power:0.5", "--paper-witness", "--eps", "1e-3")
    assert code == 0


def test_singular_normalization(tmp_path):
    code, out = run(tmp_path, "singular-demo", "--n", "2", "--m", "1", "--normalization")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO((out / "report.csv").read_text())))
    assert float(rows[0]["deviation"]) < 1e-3


def test_usage_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["no-such-command"]) == 2
    assert run(tmp_path, "eval-map", "--at", "1,2,3")[0] == 2
    assert run(tmp_path, "eval-map", "--measure", "bogus")[0] == 2
    assert run(tmp_path, "check-doubling", "--trials", "0")[0] == 2
    assert run(tmp_path, "eval-map", "--seed", "-1")[0] == 2
    assert run(tmp_path, "eval-map", "--measure", "lebesgue")[0] == 2
    assert "error" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert main(["badset", "--help"]) == 0


def test_every_subcommand_has_help():
    for name in ("eval-map", "potential", "riesz", "check-decay", "check-doubling", "check-cone", "check-monotone",
                 "check-qs", "check-isotropic", "check-segments", "check-projection", "check-ulnc", "singular-demo",
                 "badset", "counterexample-demo"):
        assert name in COMMANDS


def test_config_sections_and_precedence(tmp_path, monkeypatch):
    monkeypatch.delenv("QCM_SEED", raising=False)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[common]\nseed = 5\ntrials = 7\n[badset]\ntrials = 3\n")
    code, out = run(tmp_path, "badset", "--config", str(cfg), "--v", "1,1")
    s = summary(out)
    assert (s["seed"], s["trials"]) == ("5", "3")
    code, out = run(tmp_path, "badset", "--config", str(cfg), "--seed", "9", "--v", "1,1", name="o2")
    assert summary(out)["seed"] == "9"
    monkeypatch.setenv("QCM_SEED", "11")
    code, out = run(tmp_path, "badset", "--config", str(cfg), "--v", "1,1", name="o3")
    assert summary(out)["seed"] == "11"
    code, out = run(tmp_path, "badset", "--config", str(cfg), "--seed", "4", "--v", "1,1", name="o4")
    assert summary(out)["seed"] == "4"


@pytest.mark.parametrize("text", ["[bogus]\nseed = 1\n", "[common]\nnot-a-key = 1\n", "no section line\n",
                                  "[common]\nseed = abc\n"])
def test_bad_config(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert run(tmp_path, "eval-map", "--config", str(cfg))[0] == 2


def test_missing_config(tmp_path):
    assert run(tmp_path, "eval-map", "--config", str(tmp_path / "none.cfg"))[0] == 2


def test_inconclusive_exit_on_budget(tmp_path):
    code, out = run(tmp_path, "eval-map", "--measure", "power:-1.5", "--at", "0.4,0.3", "--route", "split",
                    "--max-depth", "1")
    assert code == 3
    assert summary(out)["budget"] == "exceeded"


def test_plot_written_and_valid(tmp_path):
    code, out = run(tmp_path, "counterexample-demo", "--K", "1", "--grid", "200", "--plot")
    assert code == 0
    ET.fromstring((out / "plot.svg").read_text())
    assert (out / "polyline.csv").read_text().startswith("seed,t,h")


def test_determinism(tmp_path):
    argv = ["check-doubling", "--measure", "power:0.5", "--trials", "5", "--seed", "42"]
    _, a = run(tmp_path, *argv, name="a")
    _, b = run(tmp_path, *argv, name="b")
    assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()
    _, c = run(tmp_path, *argv[:-1], "43", name="c")
    assert (a / "report.csv").read_bytes() != (c / "report.csv").read_bytes()


def test_csv_seventeen_digits(tmp_path):
    _, out = run(tmp_path, "riesz", "--measure", "uniform-ball", "--at", "5,0", "--gamma", "1")
    rows = list(csv.reader(io.StringIO((out / "report.csv").read_text())))
    assert rows[0][0] == "seed"
    floats = [v for v in rows[1] if "." in v and "e" not in v]
    assert any(len(v.replace("-", "").replace(".", "").lstrip("0")) >= 15 for v in floats)


@pytest.mark.parametrize("argv,code", [
    (["check-decay", "--measure", "power:-1.5"], 0),
    (["check-decay", "--measure", "lebesgue"], 1),
    (["check-doubling", "--measure", "truncated:1,lebesgue", "--domain", "ball:0,0,0.3", "--r-max", "0.2",
      "--trials", "3"], 1),
    (["check-monotone", "--map", "identity", "--trials", "20"], 0),
    (["check-monotone", "--map", "linear:1,0,0,-1", "--trials", "20"], 1),
    (["check-qs", "--map", "linear:1,0,0,2", "--trials", "10"], 0),
    (["check-segments", "--measure", "lebesgue", "--trials", "5"], 0),
    (["check-projection", "--measure", "power:0.5", "--cube", "box:0.5,0.5,0.5,0.5"], 0),
    (["check-ulnc", "--anchors", "points:0,0;1,0", "--all-pairs", "--arbitrary-trials", "10"], 0),
    (["badset", "--q", "2", "--eps", "0.1", "--n", "3", "--v", "1,-1,1", "--k-min", "-60", "--k-max", "60"], 0),
    (["potential", "--measure", "uniform-ball", "--at", "0,0"], 0),
])
def test_subcommand_exit_codes(tmp_path, argv, code):
    assert run(tmp_path, *argv)[0] == code


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "qcmlab.cli", "eval-map", "--output-dir", str(tmp_path / "o")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "(0, 0)"
