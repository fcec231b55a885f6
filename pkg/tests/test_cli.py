import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cofx import load_builtin, oracle, simulate, twce, WindowSpec
from cofx.cli import main
from cofx.estimation import graph_of

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_twce_golden(capsys):
    code, out, _ = run(capsys, "twce", "--model", "chain", "--cause", "1", "--effect", "2", "--tau", "1", "--ti", "2")
    assert code == 0
    assert out == (GOLDEN / "twce_chain_tau1_t2.json").read_text()
    assert json.loads(out)["values"] == [[0.7, 0.0], [0.56, 0.7]]


def test_twce_process_a_window_100(capsys):
    code, out, _ = run(capsys, "twce", "--model", "A", "--cause", "1", "--effect", "3", "--tau", "0", "--ti", "100", "--tj", "100")
    assert code == 0
    vals = np.array(json.loads(out)["values"])
    assert vals.shape == (100, 100)
    np.testing.assert_allclose(vals, twce(load_builtin("A"), WindowSpec(1, 3, 0, 100, 100)).values, rtol=1e-14, atol=1e-300)


def test_simulate_is_byte_identical(capsys, tmp_path):
    a = run(capsys, "simulate", "--model", "chain", "--length", "50", "--seed", "3")[1]
    b = run(capsys, "simulate", "--model", "chain", "--length", "50", "--seed", "3")[1]
    assert a == b
    assert a == simulate(load_builtin("chain"), 50, seed=3).to_csv()


def test_fit_round_trip(capsys, tmp_path):
    data = tmp_path / "x.csv"
    data.write_text(simulate(load_builtin("chain"), 5000, seed=1).to_csv())
    graph = tmp_path / "g.json"
    graph.write_text(json.dumps(graph_of(load_builtin("chain")).to_dict()))
    code, out, _ = run(capsys, "fit", "--data", str(data), "--graph", str(graph))
    assert code == 0
    coeffs = {(e["source"], e["target"]): e["coeff"] for e in json.loads(out)["edges"]}
    assert coeffs[(1, 2)] == pytest.approx(0.7, abs=0.05)


def test_cof_variants(capsys, tmp_path):
    base = ["cof", "--model", "A", "--cause", "1", "--effect", "3", "--ti", "16"]
    code, out, _ = run(capsys, *base, "--rank", "2")
    assert code == 0 and len(json.loads(out)["sigmas"]) == 2
    code, out, _ = run(capsys, *base, "--wavelet-scale", "1:1", "--levels", "2")
    doc = json.loads(out)
    assert code == 0 and np.array(doc["omega"]).shape == (8, 8)
    assert doc["constraint_tag"] == "wavelet:haar:1->1"
    cons = tmp_path / "c.json"
    cons.write_text(json.dumps({"impulse": [np.eye(16)[:4].tolist()], "response": [np.eye(16)[8:].tolist()]}))
    code, out, _ = run(capsys, *base, "--constraints", str(cons))
    assert code == 0 and len(json.loads(out)["sigmas"]) == 4
    code, out, _ = run(capsys, *base, "--ssa-top", "3", "--samples", "3000", "--seed", "0")
    assert code == 0 and json.loads(out)["constraint_tag"] == "ssa-restricted"


def test_freq_outputs(capsys, tmp_path):
    code, _, _ = run(capsys, "freq", "--model", "A1", "--cause", "1", "--effect", "2", "--T", "200", "--gc-mode", "both", "--out-dir", str(tmp_path))
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["A1_ce.csv", "A1_gc_paper-literal.csv", "A1_gc_standard.csv"]
    rows = list(csv.DictReader(io.StringIO((tmp_path / "A1_ce.csv").read_text())))
    assert len(rows) == 101 and rows[0]["kind"] == "frequency-causal-effect"


def test_fig6_matches_golden(capsys, tmp_path):
    assert run(capsys, "figures", "fig6", "--out-dir", str(tmp_path))[0] == 0
    got = list(csv.reader(io.StringIO((tmp_path / "fig6_curves.csv").read_text())))
    ref = list(csv.reader(io.StringIO((GOLDEN / "fig6_curves.csv").read_text())))
    assert got[0] == ref[0] and len(got) == len(ref)
    for g, r in zip(got[1:], ref[1:]):
        assert g[2:] == r[2:]
        assert float(g[0]) == float(r[0])
        assert float(g[1]) == pytest.approx(float(r[1]), rel=1e-12, abs=1e-14)


def test_mssa_compare_files(capsys, tmp_path):
    argv = ["mssa-compare", "--model", "A", "--T", "20", "--samples", "4000", "--seed", "2", "--out-dir", str(tmp_path)]
    assert run(capsys, *argv)[0] == 0
    first = (tmp_path / "mssa_compare.csv").read_text()
    assert first.startswith("k,mu_k,lambda_k,cd_k,sigma_k\n") and first.count("\n") == 4
    doc = json.loads((tmp_path / "mssa_compare.json").read_text())
    assert len(doc["vectors"]["mssa"]) == 3
    assert run(capsys, *argv)[0] == 0
    assert (tmp_path / "mssa_compare.csv").read_text() == first


def test_wavelet(capsys):
    code, out, _ = run(capsys, "wavelet", "--T", "4", "--J", "2")
    doc = json.loads(out)
    assert code == 0
    assert doc["blocks"][1] == [[0.5, 0.5, -0.5, -0.5]]


def test_validate_chain(capsys):
    code, out, _ = run(capsys, "validate", "--model", "chain", "--cause", "1", "--effect", "2", "--ti", "2", "--tj", "2", "--seed", "0")
    rep = json.loads(out)
    assert code == 0
    assert rep["max_abs_z"] < 3 and rep["path_max_abs_diff"] == 0.0


def test_validate_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(oracle, "validation_report", lambda *a, **k: {"passed": False, "max_abs_z": 9.0})
    code, _, err = run(capsys, "validate", "--model", "chain", "--cause", "1", "--effect", "2", "--ti", "2", "--seed", "0")
    assert code == 4 and "oracle mismatch" in err


def test_unstable_model_exit_code(capsys, tmp_path):
    path = tmp_path / "u.json"
    path.write_text(json.dumps({"n_processes": 2, "max_lag": 1, "edges": [{"source": 1, "target": 1, "lag": 1, "coeff": 1.1}]}))
    assert run(capsys, "simulate", "--model", str(path), "--length", "5", "--seed", "0")[0] == 3
    assert run(capsys, "twce", "--model", str(path), "--cause", "1", "--effect", "2", "--ti", "2")[0] == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["twce", "--model", "missing.json", "--cause", "1", "--effect", "2", "--ti", "2"],
        ["twce", "--model", "chain", "--cause", "1", "--effect", "1", "--ti", "2"],
        ["twce", "--model", "chain", "--cause", "1", "--effect", "5", "--ti", "2"],
        ["wavelet", "--T", "10", "--J", "2"],
        ["fit", "--data", "nope.csv", "--graph", "nope.json"],
    ],
)
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("cofx: error:")


def test_bad_schema_file(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_processes": 2, "max_lag": 1, "edges": [], "noise_covariance": [[1]]}))
    assert run(capsys, "twce", "--model", str(path), "--cause", "1", "--effect", "2", "--ti", "2")[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--model", "chain", "--length", "5"],
        ["validate", "--model", "chain", "--cause", "1", "--effect", "2", "--ti", "2"],
        ["mssa-compare", "--model", "A", "--T", "10", "--samples", "500"],
        ["cof", "--model", "A", "--cause", "1", "--effect", "3", "--ti", "8", "--ssa-top", "2", "--samples", "500"],
        ["figures", "figA", "--out-dir", "unused", "--samples", "500"],
    ],
)
def test_strict_requires_seed(capsys, argv):
    code, _, err = run(capsys, "--strict", *argv)
    assert code == 2 and "--seed" in err


def test_strict_deterministic_commands_run(capsys, tmp_path):
    assert run(capsys, "--strict", "figures", "fig6", "--out-dir", str(tmp_path), "--T", "16")[0] == 0


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["plot"])
    assert exc.value.code == 2


def test_module_entry_point_and_thread_cap(tmp_path):
    env = {"COFX_THREADS": "1", "PATH": "/usr/bin:/bin"}
    res = subprocess.run(
        [sys.executable, "-m", "cofx", "twce", "--model", "chain", "--cause", "1", "--effect", "2", "--tau", "2", "--ti", "1"],
        capture_output=True, text=True, env=env, check=False,
    )
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["values"] == [[0.91]]
