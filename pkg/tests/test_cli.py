import csv
import json

import numpy as np
import pytest

from hyperdiss.cli import main, read_sweep_csv

TIM2 = "builtin:timoshenko?a=2&gamma=1"
TIM1 = "builtin:timoshenko?a=1&gamma=1"
TOY = "builtin:damped-wave"
EM = "builtin:euler-maxwell"


def _json(path):
    return json.loads(path.read_text())


def test_check_exit_codes(tmp_path):
    out = tmp_path / "r.json"
    assert main(["check", "--model", TIM2, "--out", str(out)]) == 0
    rep = _json(out)
    assert rep["conditions"]["S2"]["passed"] is False
    assert "S2" in rep["informational"] and rep["failed_expected"] == []
    assert rep["version"] and rep["config"]["command"] == "check"


def test_check_failing_expectation_exits_one(tmp_path):
    model = tmp_path / "m.json"
    assert main(["export", "--model", TIM2, "--out", str(model)]) == 0
    d = json.loads(model.read_text())
    d["expected"]["pass"] = ["A", "S2"]
    model.write_text(json.dumps(d))
    out = tmp_path / "r.json"
    assert main(["check", "--model", str(model), "--out", str(out)]) == 1
    assert _json(out)["failed_expected"] == ["S2"]


def test_export_check_round_trip(tmp_path):
    model = tmp_path / "em.json"
    assert main(["export", "--model", EM, "--out", str(model)]) == 0
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["check", "--model", EM, "--sphere-count", "64", "--out", str(a)]) == 0
    assert main(["check", "--model", str(model), "--sphere-count", "64", "--out", str(b)]) == 0
    ra, rb = _json(a), _json(b)
    for r in (ra, rb):
        r["config"].pop("model"), r["config"].pop("outputs")
    assert ra == rb


@pytest.mark.parametrize("argv", [
    ["check", "--model", "builtin:nosuch"],
    ["check", "--model", "builtin:timoshenko?a=-1"],
    ["check", "--model", TIM2, "--tol", "0.5"],
    ["spectrum", "--model", TIM2, "--restricted", "--out", "x.csv"],
    ["spectrum", "--model", TIM2, "--s-points", "10", "--out", "x.csv"],
    ["decay", "--model", TIM2, "--profile", "cauchy:1", "--out", "x.csv"],
    ["classify"],
])
def test_usage_errors_exit_two(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_empty_and_malformed_model_files(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert main(["check", "--model", str(empty)]) == 2
    assert "empty model file" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 1,\n "m": }')
    assert main(["check", "--model", str(bad)]) == 2
    assert ":2:" in capsys.readouterr().err
    assert main(["check", "--model", str(tmp_path / "missing.json")]) == 2


def test_argparse_rejects_unknown_command():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_build_k(tmp_path):
    out = tmp_path / "k.json"
    assert main(["build-k", "--model", TOY, "--auto", "--out", str(out)]) == 0
    rep = _json(out)
    assert rep["certified_by"] == "K" and rep["check"]["margin"] >= 1e-6
    assert rep["compensator"]["variant"] == "kalman"
    assert main(["build-k", "--model", TOY, "--mu", "0.9", "--out", str(out)]) in (0, 1)
    assert main(["build-k", "--model", TOY, "--mu", "2", "--out", str(out)]) == 2


def test_spectrum_csv_and_classify_from_sweep(tmp_path):
    sw = tmp_path / "sweep.csv"
    assert main(["spectrum", "--model", TIM2, "--out", str(sw)]) == 0
    rows = list(csv.reader(sw.open()))
    assert rows[0] == ["s", "omega_index", "omega_1", "max_re_lambda"]
    assert len(rows) == 1 + 48 * 2
    rebuilt = read_sweep_csv(sw)
    assert rebuilt.abscissa.shape == (48, 2)
    out = tmp_path / "c.json"
    assert main(["classify", "--sweep", str(sw), "--out", str(out)]) == 0
    assert (_json(out)["p"], _json(out)["q"]) == (1, 2)


def test_classify_model_reports_both_for_constraints(tmp_path):
    out = tmp_path / "c.json"
    assert main(["classify", "--model", EM, "--sphere-count", "32", "--out", str(out)]) == 0
    rep = _json(out)
    assert (rep["p"], rep["q"]) == (1, 2)
    assert rep["type"]["fit_diagnostics"]["restricted"] is True
    assert rep["unrestricted"]["classified"] is False


def test_classify_wrong_expectation_exits_one(tmp_path):
    model = tmp_path / "m.json"
    main(["export", "--model", TIM1, "--out", str(model)])
    d = json.loads(model.read_text())
    d["expected"]["type"] = [1, 2]
    model.write_text(json.dumps(d))
    assert main(["classify", "--model", str(model), "--out", str(tmp_path / "c.json")]) == 1


def test_certify(tmp_path):
    out = tmp_path / "cert.json"
    assert main(["certify", "--model", TIM2, "--out", str(out)]) == 0
    rep = _json(out)
    assert rep["certified"] and rep["certificate"]["c"] > 0
    assert rep["config"]["knobs"]["envelope"] == "eta"
    assert main(["certify", "--model", TIM2, "--envelope", "rho", "--out", str(out)]) == 1
    assert _json(out)["certified"] is False


def test_decay_and_plot_are_deterministic(tmp_path):
    d1, d2 = tmp_path / "d1.csv", tmp_path / "d2.csv"
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    argv = ["decay", "--model", TIM2, "--t-max", "1e3", "--t-points", "21"]
    assert main(argv + ["--out", str(d1), "--report", str(r1)]) == 0
    assert main(argv + ["--out", str(d2), "--report", str(r2)]) == 0
    assert d1.read_bytes() == d2.read_bytes()
    rep = _json(r1)
    assert rep["target_slope"] == -0.25
    rows = list(csv.reader(d1.open()))
    assert rows[0] == ["t", "norm", "local_slope"] and len(rows) == 23
    s1, s2 = tmp_path / "a.svg", tmp_path / "b.svg"
    assert main(["plot", "--in", str(d1), "--out", str(s1), "--guide", "-0.25"]) == 0
    assert main(["plot", "--in", str(d1), "--out", str(s2), "--guide", "-0.25"]) == 0
    assert s1.read_bytes() == s2.read_bytes()
    text = s1.read_text()
    assert text.startswith("<svg") or text.startswith("<?xml")
    assert "stroke-dasharray" in text and "1 + t" in text


def test_plot_sweep_and_bad_input(tmp_path):
    sw = tmp_path / "sweep.csv"
    main(["spectrum", "--model", TOY, "--out", str(sw)])
    svg = tmp_path / "s.svg"
    assert main(["plot", "--in", str(sw), "--out", str(svg), "--guide", "2", "--guide", "0"]) == 0
    text = svg.read_text()
    assert "slope 2" in text and "slope 0" in text
    junk = tmp_path / "junk.csv"
    junk.write_text("a,b\n1,2\n")
    assert main(["plot", "--in", str(junk), "--out", str(svg)]) == 2


def test_thread_option(tmp_path, monkeypatch):
    out = tmp_path / "r.json"
    assert main(["--threads", "1", "check", "--model", TOY, "--out", str(out)]) == 0
    assert _json(out)["config"]["threads"] == 1
    monkeypatch.setenv("HYPERDISS_THREADS", "0")
    assert main(["check", "--model", TOY, "--out", str(out)]) == 2


def test_spectrum_unrestricted_flag(tmp_path):
    sw = tmp_path / "sw.csv"
    assert main(["spectrum", "--model", EM, "--unrestricted", "--sphere-count", "8", "--out", str(sw)]) == 0
    data = np.loadtxt(sw, delimiter=",", skiprows=1)
    assert data.shape == (48 * 8, 6)
    assert data[:, -1].max() > -1e-10
