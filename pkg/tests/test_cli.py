import json
import subprocess
import sys

import numpy as np
import pytest

from renyi_lab import io
from renyi_lab.channels import build_channel
from renyi_lab.cli import main
from renyi_lab.operators import BlockAlgebra, Density, Operator


@pytest.fixture
def files(tmp_path, m2, hfix):
    pinch = build_channel(m2, "pinching",
                          projections=[Operator(m2, [np.diag([1.0, 0.0])]),
                                       Operator(m2, [np.diag([0.0, 1.0])])])
    paths = {"h": tmp_path / "h.json", "pinch": tmp_path / "pinch.json",
             "transpose": tmp_path / "t.json", "half": tmp_path / "half.json"}
    io.save_json(paths["h"], io.operator_to_json(hfix))
    io.save_json(paths["half"], io.operator_to_json(Density(m2, [np.eye(2) / 2])))
    io.save_json(paths["pinch"], io.channel_to_json(pinch))
    io.save_json(paths["transpose"], io.channel_to_json(build_channel(m2, "transpose")))
    return {k: str(v) for k, v in paths.items()}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_entropy_command(capsys, files):
    code, out, err = run(capsys, "entropy", "--density", files["half"], "--alpha", "2",
                         "--segal", "--relative", files["h"])
    assert code == 0
    rep = json.loads(out)
    assert rep["value"] == pytest.approx(np.log(2))
    assert rep["segal"] == pytest.approx(-np.log(2))
    assert "S_2(h)" in err


def test_entropy_infinite_relative(capsys, tmp_path, files, m2):
    pure = tmp_path / "pure.json"
    io.save_json(pure, io.operator_to_json(Density(m2, [np.diag([1.0, 0.0])])))
    code, out, _ = run(capsys, "entropy", "--density", files["h"], "--relative", str(pure))
    assert code == 0 and json.loads(out)["relative_entropy"] == "inf"


def test_entropy_text_format(capsys, files):
    code, out, _ = run(capsys, "entropy", "--density", files["h"], "--alpha", "2",
                       "--format", "text")
    assert code == 0 and out.startswith("alpha") and "0.4155154" in out


@pytest.mark.parametrize("argv", [
    ["entropy", "--density", "nope.json", "--alpha", "2"],
    ["entropy", "--density", "{h}", "--alpha", "1"],
    ["entropy", "--density", "{h}"],
    ["entropy", "--alpha", "2"],
    ["verify-suite", "--dims", "2,x"],
    ["convergence-demo", "--density", "{h}", "--alpha", "0.5", "--schedule", "1e2:1e-2"],
    ["convergence-demo", "--density", "{h}", "--alpha", "0.5", "--schedule", "garbage"],
], ids=["missing-file", "alpha-one", "nothing-requested", "missing-arg", "bad-dims",
        "bad-schedule", "garbage-schedule"])
def test_input_errors_exit_2(capsys, files, argv):
    argv = [a.format(**files) for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_channel_classify(capsys, files):
    code, out, err = run(capsys, "channel-classify", "--channel", files["transpose"])
    rep = json.loads(out)
    assert code == 0 and rep["positive"] and not rep["completely_positive"]
    assert rep["jordan_multiplicative"] and "jordan_multiplicative" in err


def test_preservation_command(capsys, files, tmp_path):
    out_path = tmp_path / "report.json"
    code, out, err = run(capsys, "preservation-test", "--channel", files["pinch"],
                         "--density", files["h"], "--alpha", "2", "--output", str(out_path))
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "not-preserved"
    assert rep["delta_s"] == pytest.approx(0.129211731480006, abs=1e-12)
    assert json.loads(out_path.read_text()) == rep
    assert "not-preserved" in err


def test_convergence_demo(capsys, files):
    code, out, err = run(capsys, "convergence-demo", "--density", files["h"], "--alpha", "0.5")
    rep = json.loads(out)
    assert code == 0 and rep["kind"] == "quadrature" and rep["monotone_flag"]
    assert len(rep["values"]) == 4
    code, out, _ = run(capsys, "convergence-demo", "--density", files["h"], "--alpha", "1.5",
                       "--schedule", "trunc:0.3,1", "--format", "text")
    assert code == 0 and "tau(z(h_n))" in out


def test_generate_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(capsys, "generate", "density", "--dims", "2,2", "--seed", "4",
                   "--degenerate", "--output", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert io.load_density(a).algebra == BlockAlgebra((2, 2))
    c = tmp_path / "c.json"
    assert run(capsys, "generate", "channel", "--family", "random_kraus_unital_tp",
               "--dims", "3", "--seed", "1", "--output", str(c))[0] == 0
    assert io.load_channel(c).family == "random_kraus_unital_tp"


def test_verify_suite_clean_run(capsys, tmp_path):
    code, out, err = run(capsys, "verify-suite", "--suite", "monotone", "--instances", "10",
                         "--seed", "3", "--archive-dir", str(tmp_path / "v"))
    rep = json.loads(out)
    assert code == 0 and rep["violations"] == 0 and not (tmp_path / "v").exists()
    assert "0 violations" in err


def test_verify_suite_violation_and_replay(capsys, tmp_path):
    archive = tmp_path / "v"
    code, out, _ = run(capsys, "verify-suite", "--suite", "monotone", "--instances", "3",
                       "--inject-violation", "--archive-dir", str(archive))
    rep = json.loads(out)
    assert code == 1 and rep["violations"] >= 1
    assert len(rep["archived"]) == rep["violations"]
    code, out, err = run(capsys, "replay", "--instance", rep["archived"][0])
    assert code == 1 and json.loads(out)["passed"] is False
    assert "VIOLATION" in err


def test_verify_suite_is_deterministic(capsys):
    argv = ["verify-suite", "--suite", "jensen", "--instances", "4", "--seed", "9",
            "--dims", "2", "--dims", "1,2", "--weights", "1", "--weights", "1,2"]
    first = json.loads(run(capsys, *argv)[1])
    second = json.loads(run(capsys, *argv)[1])
    for r in first["reports"] + second["reports"]:
        r.pop("seconds", None)
    assert first == second
    assert first["config"]["weights"] == [[1.0], [1.0, 2.0]]


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "renyi_lab", "entropy", "--density",
                           files["h"], "--alpha", "3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["trace_h_alpha"] == pytest.approx(0.49)
