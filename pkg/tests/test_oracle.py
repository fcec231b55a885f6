import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cofx import EffectMatrix, WindowSpec, twce
from cofx import oracle
from cofx.oracle import (
    enumerate_proper_path_sum,
    iter_proper_paths,
    mc_interventional_twce,
    path_oracle_matrix,
    validation_report,
)

from conftest import stable_models


def test_chain_paths_by_hand(chain):
    spec = WindowSpec(1, 2, tau=2)
    paths = sorted(iter_proper_paths(chain, spec, 1, 1), key=lambda p: p.weight)
    assert [p.nodes for p in paths] == [
        ((1, -2), (1, -1), (2, 0)),
        ((1, -2), (2, -1), (2, 0)),
    ]
    assert [p.weight for p in paths] == pytest.approx([0.35, 0.56], abs=1e-15)
    assert enumerate_proper_path_sum(chain, spec, 1, 1) == pytest.approx(0.91, abs=1e-15)


def test_window_blocks_improper_path(chain):
    spec = WindowSpec(1, 2, tau=1, t_cause=2, t_effect=1)
    paths = list(iter_proper_paths(chain, spec, 1, 1))
    assert len(paths) == 1
    assert paths[0].nodes == ((1, -2), (2, -1), (2, 0))
    assert enumerate_proper_path_sum(chain, spec, 1, 1) == pytest.approx(0.56, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(stable_models(max_lag=2), st.integers(0, 2), st.integers(1, 3), st.integers(1, 3))
def test_memoized_sum_matches_plain_dfs(model, tau, ti, tj):
    spec = WindowSpec(1, 2, tau, ti, tj)
    lo, hi = spec.source_time(1), spec.source_time(ti)
    for k in range(1, ti + 1):
        for l in range(1, tj + 1):
            total = 0.0
            for path in iter_proper_paths(model, spec, k, l):
                times = [t for _, t in path.nodes]
                assert all(a < b for a, b in zip(times, times[1:]))
                assert not any(p == 1 and lo <= t <= hi for p, t in path.nodes[1:])
                total += path.weight
            assert enumerate_proper_path_sum(model, spec, k, l) == pytest.approx(total, abs=1e-12)


def test_enumeration_bounds(chain):
    with pytest.raises(ValueError):
        enumerate_proper_path_sum(chain, WindowSpec(1, 2, 10, 12, 12), 1, 1)
    with pytest.raises(IndexError):
        enumerate_proper_path_sum(chain, WindowSpec(1, 2, 0, 2, 2), 3, 1)


def test_mc_chain_matches(chain):
    spec = WindowSpec(1, 2, 1, 3, 3)
    est, se = mc_interventional_twce(chain, spec, step=0.5, replicates=200, seed=3)
    assert isinstance(est, EffectMatrix)
    np.testing.assert_allclose(est.values, twce(chain, spec).values, rtol=0, atol=1e-12)
    assert se.max() < 1e-10


def test_mc_process_a(proc_a):
    spec = WindowSpec(1, 3, 0, 10, 10)
    est, se = mc_interventional_twce(proc_a, spec, replicates=100, seed=1)
    np.testing.assert_allclose(est.values, twce(proc_a, spec).values, rtol=0, atol=1e-10)
    assert se.max() < 1e-10


def test_mc_non_unit_noise(chain):
    noisy = type(chain)(2, 1, chain.edges, (4.0, 0.25))
    spec = WindowSpec(1, 2, 2, 2, 2)
    est, _ = mc_interventional_twce(noisy, spec, replicates=50, seed=0)
    np.testing.assert_allclose(est.values, twce(noisy, spec).values, atol=1e-12)


def test_mc_argument_checks(chain):
    spec = WindowSpec(1, 2)
    with pytest.raises(ValueError):
        mc_interventional_twce(chain, spec, step=0.0)
    with pytest.raises(ValueError):
        mc_interventional_twce(chain, spec, replicates=1)


def test_validation_report(chain):
    rep = validation_report(chain, WindowSpec(1, 2, 1, 2, 2), replicates=100, seed=0)
    assert rep["passed"]
    assert rep["path_max_abs_diff"] <= 1e-12
    assert len(rep["entries"]) == 4
    assert json.loads(oracle.report_json(rep))["seed"] == 0


def test_validation_flags_wrong_matrix(chain, monkeypatch):
    real = oracle.twce

    def off(model, spec):
        eff = real(model, spec)
        return EffectMatrix(spec, eff.values + 1e-6)

    monkeypatch.setattr(oracle, "twce", off)
    rep = validation_report(chain, WindowSpec(1, 2, 1, 2, 2), replicates=100, seed=0)
    assert not rep["passed"]
    assert rep["max_abs_z"] > 3
