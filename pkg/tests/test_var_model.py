import json

import numpy as np
import pytest
from hypothesis import given, settings

from cofx import Edge, InstabilityError, SamplePaths, SchemaError, VarModel, parse_model, simulate
from cofx.var_model import (
    builtin_names,
    companion_matrix,
    companion_spectral_radius,
    default_burn_in,
    load_builtin,
    load_model,
)

from conftest import stable_models


def test_phi_convention(chain):
    # Phi(p)[target, source]
    assert chain.phi(1).tolist() == [[0.5, 0.0], [0.7, 0.8]]
    assert chain.coefficients[0].tolist() == [[0.0, 0.0], [0.0, 0.0]]


def test_summary_graph(proc_a):
    g = proc_a.summary_graph()
    assert g[(2, 3)] == (6,)
    assert g[(1, 1)] == (5,)


def test_round_trip(proc_a):
    assert parse_model(proc_a.to_json()) == proc_a


@pytest.mark.parametrize(
    "doc",
    [
        {"n_processes": 2, "max_lag": 1, "edges": [{"source": 3, "target": 1, "lag": 1, "coeff": 0.1}]},
        {"n_processes": 2, "max_lag": 1, "edges": [{"source": 1, "target": 1, "lag": 2, "coeff": 0.1}]},
        {"n_processes": 2, "max_lag": 1, "edges": [{"source": 1, "target": 1, "lag": 0, "coeff": 0.1}]},
        {"n_processes": 2, "max_lag": 1, "edges": [{"source": 1, "target": 1, "lag": 1}]},
        {"n_processes": 2, "max_lag": 1, "edges": [], "noise_variance": [1.0]},
        {"n_processes": 2, "max_lag": 1, "edges": [], "noise_variance": [1.0, 0.0]},
        {"n_processes": 2, "max_lag": 1, "edges": [], "noise_covariance": [[1, 0], [0, 1]]},
        {"n_processes": 2, "max_lag": 1, "edges": [], "colour": "red"},
        {
            "n_processes": 2,
            "max_lag": 1,
            "edges": [
                {"source": 1, "target": 2, "lag": 1, "coeff": 0.1},
                {"source": 1, "target": 2, "lag": 1, "coeff": 0.2},
            ],
        },
    ],
)
def test_schema_rejects(doc):
    with pytest.raises(SchemaError):
        parse_model(json.dumps(doc))


def test_bad_json():
    with pytest.raises(SchemaError):
        parse_model("{not json")


def test_builtins_are_stable():
    names = builtin_names()
    assert {"chain", "A", "B", "A1", "A2", "B1", "B2", "C1", "C2"} <= set(names)
    for name in names:
        assert companion_spectral_radius(load_builtin(name)) < 1


def test_load_model_by_path_and_name(tmp_path, chain):
    path = tmp_path / "m.json"
    path.write_text(chain.to_json())
    assert load_model(path) == chain
    assert load_model("chain") == chain
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "missing.json")


def test_companion_var1_equals_eigs(chain):
    assert companion_spectral_radius(chain) == pytest.approx(0.8, abs=1e-14)


def test_companion_ar2_roots():
    # x_t = 0.5 x_{t-1} - 0.8 x_{t-2}: roots of z^2 - 0.5 z + 0.8
    m = VarModel(1, 2, (Edge(1, 1, 1, 0.5), Edge(1, 1, 2, -0.8)))
    assert companion_matrix(m).tolist() == [[0.5, -0.8], [1.0, 0.0]]
    assert companion_spectral_radius(m) == pytest.approx(np.sqrt(0.8), abs=1e-14)


def test_unstable_rejected():
    m = VarModel(1, 1, (Edge(1, 1, 1, 1.0),))
    with pytest.raises(InstabilityError):
        simulate(m, 10, seed=0)
    assert simulate(m, 10, seed=0, burn_in=0, allow_unstable=True).length == 10


def test_default_burn_in(chain):
    # 10 * tau_max * ceil(1 / (1 - rho))
    assert default_burn_in(chain) == 50


def test_simulate_without_edges_is_raw_noise():
    m = VarModel(2, 1, (), (1.0, 4.0))
    x = simulate(m, 50, seed=7, burn_in=0).values
    ref = np.random.Generator(np.random.PCG64(7)).standard_normal((50, 2)) * [1.0, 2.0]
    np.testing.assert_array_equal(x, ref.T)


def test_simulate_recursion(chain):
    x = simulate(chain, 30, seed=3, burn_in=0).values
    eta = np.random.Generator(np.random.PCG64(3)).standard_normal((30, 2)).T
    ref = np.zeros((2, 30))
    prev = np.zeros(2)
    for t in range(30):
        prev = chain.phi(1) @ prev + eta[:, t]
        ref[:, t] = prev
    np.testing.assert_allclose(x, ref, rtol=0, atol=1e-14)


def test_simulate_stationary_covariance(chain):
    # Lyapunov: vec(S) = (I - A kron A)^-1 vec(Q)
    a = chain.phi(1)
    s = np.linalg.solve(np.eye(4) - np.kron(a, a), np.eye(2).ravel()).reshape(2, 2)
    x = simulate(chain, 200_000, seed=11).values
    np.testing.assert_allclose(np.cov(x), s, rtol=0.03)


def test_simulate_deterministic(proc_a):
    a = simulate(proc_a, 500, seed=5)
    b = simulate(proc_a, 500, seed=5)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, simulate(proc_a, 500, seed=6).values)
    assert not a.values.flags.writeable


def test_csv_round_trip(chain):
    s = simulate(chain, 20, seed=1)
    text = s.to_csv()
    assert text.splitlines()[0] == "t,x1,x2"
    np.testing.assert_array_equal(SamplePaths.from_csv(text).values, s.values)
    with pytest.raises(SchemaError):
        SamplePaths.from_csv("time,a,b\n0,1,2\n")


@settings(max_examples=30, deadline=None)
@given(stable_models())
def test_to_dict_round_trip(model):
    assert parse_model(model.to_dict()) == model
