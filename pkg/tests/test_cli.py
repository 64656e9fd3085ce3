import json
import os
import warnings
from importlib import resources

import numpy as np
import pytest

from sparsevar.cli import main, read_csv

DATA = resources.files("sparsevar") / "data"

# the bundled series is short, so the selected penalty sits at the grid edge
pytestmark = pytest.mark.filterwarnings("ignore:selected lambda is the smallest")


@pytest.fixture(autouse=True)
def _restore_warning_format():
    saved = warnings.formatwarning
    yield
    warnings.formatwarning = saved


@pytest.fixture(scope="module")
def cv_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cv")
    rc = main(["cv", "--data", str(DATA / "var3_3.csv"), "--config", str(DATA / "var3_3_config.json"),
               "--out", str(out), "--threads", "2"])
    assert rc == 0
    return out


def _run(argv, capsys):
    rc = main(argv)
    cap = capsys.readouterr()
    return rc, cap.out, cap.err


def test_cv_outputs(cv_dir):
    for name in ("report.json", "coefficients.csv", "model.json", "sparsity.svg", "lambda_curve.svg"):
        assert (cv_dir / name).exists()
    text = (cv_dir / "report.json").read_text()
    doc = json.loads(text)
    assert {"optimal_lambda", "oos_msfe", "benchmarks"} <= set(doc)
    assert json.dumps(doc, sort_keys=True, indent=2) + "\n" == text
    assert (cv_dir / "sparsity.svg").read_text().startswith("<svg")
    _, labels = read_csv(str(cv_dir / "coefficients.csv"))
    assert labels[0] == "intercept" and len(labels) == 1 + 3 * 3


def test_fit_and_predict_zero_model(tmp_path, capsys):
    out = tmp_path / "fit"
    rc, _, _ = _run(["fit", "--data", str(DATA / "var3_3.csv"), "--config",
                     str(DATA / "var3_3_config.json"), "--lambda", "1e9,0.01", "--out", str(out)], capsys)
    assert rc == 0
    model = json.loads((out / "model_0.json").read_text())
    assert not np.any(np.array(model["b"])[:, 1:])
    rc, stdout, _ = _run(["predict", "--model", str(out / "model_0.json"), "--n-ahead", "1"], capsys)
    assert rc == 0
    row = [float(x) for x in stdout.strip().splitlines()[1].split(",")]
    np.testing.assert_allclose(row, np.array(model["b"])[:, 0], rtol=0, atol=1e-15)
    assert (out / "coefficients_1.csv").exists()


def test_simulate_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    spec = str(DATA / "var3_3_sim.json")
    for path in (a, b):
        assert main(["simulate", "--spec", spec, "--seed", "5", "--t", "50", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    values, labels = read_csv(str(a))
    assert values.shape == (50, 3) and labels == ["y1", "y2", "y3"]


def test_irf_and_refit(cv_dir, tmp_path, capsys):
    rc, stdout, _ = _run(["irf", "--model", str(cv_dir / "model.json"), "--shock", "y2",
                          "--periods", "6"], capsys)
    assert rc == 0
    lines = stdout.strip().splitlines()
    assert lines[0] == "y1,y2,y3" and len(lines) == 7
    out = tmp_path / "refit.json"
    for method in ("rls", "wls", "ifgls"):
        assert main(["refit", "--model", str(cv_dir / "model.json"), "--data", str(DATA / "var3_3.csv"),
                     "--method", method, "--out", str(out)]) == 0
        rec = json.loads(out.read_text())
        assert rec["refit"] == method
        before = np.array(json.loads((cv_dir / "model.json").read_text())["b"])
        after = np.array(rec["b"])
        assert not np.any(after[:, 1:][before[:, 1:] == 0])


def test_benchmark(capsys):
    rc, stdout, _ = _run(["benchmark", "--data", str(DATA / "var3_3.csv"), "--pmax", "4",
                          "--criterion", "aic"], capsys)
    assert rc == 0
    doc = json.loads(stdout)
    assert doc["criterion"] == "AIC" and 0 <= doc["p"] <= 4


def test_index_column_is_dropped(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("date,a,b\n2001-01,1.0,2.0\n2001-02,3.0,4.5\n")
    values, labels = read_csv(str(path))
    assert labels == ["a", "b"]
    np.testing.assert_array_equal(values, [[1.0, 2.0], [3.0, 4.5]])


def test_exit_codes(tmp_path, capsys):
    rc, _, err = _run(["cv", "--data", str(tmp_path / "missing.csv"), "--config",
                       str(DATA / "var3_3_config.json"), "--out", str(tmp_path)], capsys)
    assert rc == 3 and err.startswith("sparsevar-error code=3 ")
    rc, _, err = _run(["cv"], capsys)
    assert rc == 2 and "code=2" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"p": 1, "colour": "red"}))
    rc, _, err = _run(["cv", "--data", str(DATA / "var3_3.csv"), "--config", str(bad),
                       "--out", str(tmp_path)], capsys)
    assert rc == 2 and "type=UsageError" in err
    nan = tmp_path / "nan.csv"
    nan.write_text("a,b\n1,2\nnan,3\n4,5\n6,7\n")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p": 1}))
    rc, _, err = _run(["fit", "--data", str(nan), "--config", str(cfg), "--lambda", "1",
                       "--out", str(tmp_path / "o")], capsys)
    assert rc == 3 and "NonFinite" in err
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"phi": [[1.2]], "sigma_u": [[1.0]]}))
    rc, _, err = _run(["simulate", "--spec", str(spec), "--t", "5"], capsys)
    assert rc == 4 and "NotStationary" in err


def test_threads_env_does_not_change_output(tmp_path, monkeypatch):
    cfg = str(DATA / "var3_3_config.json")
    monkeypatch.setenv("SPARSEVAR_THREADS", "3")
    assert main(["cv", "--data", str(DATA / "var3_3.csv"), "--config", cfg,
                 "--out", str(tmp_path), "--threads", "1"]) == 0
    monkeypatch.delenv("SPARSEVAR_THREADS")
    assert main(["cv", "--data", str(DATA / "var3_3.csv"), "--config", cfg,
                 "--out", str(tmp_path / "b"), "--threads", "1"]) == 0
    assert (tmp_path / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    assert os.path.exists(tmp_path / "b" / "lambda_curve.svg")
