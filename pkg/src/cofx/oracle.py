"""Ground-truth engines for checking effect matrices.

Two routes that do not share code with :mod:`cofx.effects`:

* exhaustive enumeration of proper causal paths in the time-series graph
  (exact, small instances only), and
* Monte-Carlo finite differences under simulated interventions with common
  noise draws (statistical, any instance).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .effects import EffectMatrix, WindowSpec, twce
from .errors import InstabilityError, SchemaError
from .var_model import VarModel, companion_spectral_radius, default_burn_in

__all__ = [
    "PathRecord",
    "MAX_SPAN",
    "MAX_PROCESSES",
    "iter_proper_paths",
    "enumerate_proper_path_sum",
    "path_oracle_matrix",
    "mc_interventional_twce",
    "validation_report",
]

MAX_SPAN = 32
MAX_PROCESSES = 4
# below this the paired differences carry only floating-point rounding
SE_FLOOR = 1e-12


@dataclass(frozen=True)
class PathRecord:
    nodes: tuple[tuple[int, int], ...]  # (process, time), 1-based processes
    weight: float


def _out_edges(model: VarModel) -> dict[int, list[tuple[int, int, float]]]:
    out: dict[int, list[tuple[int, int, float]]] = {}
    for e in model.edges:
        if e.coeff != 0.0:
            out.setdefault(e.source, []).append((e.target, e.lag, e.coeff))
    return out


def _check_bounds(model: VarModel, spec: WindowSpec) -> None:
    if spec.tau + spec.t_cause + spec.t_effect > MAX_SPAN or model.n_processes > MAX_PROCESSES:
        raise ValueError(
            f"exhaustive enumeration limited to tau + T_i + T_j <= {MAX_SPAN} "
            f"and N <= {MAX_PROCESSES}"
        )
    if max(spec.cause, spec.effect) > model.n_processes:
        raise SchemaError("window spec references a process outside the model")


def _intervened(spec: WindowSpec):
    lo, hi = spec.source_time(1), spec.source_time(spec.t_cause)
    return lambda proc, t: proc == spec.cause and lo <= t <= hi


def iter_proper_paths(model: VarModel, spec: WindowSpec, k: int, l: int) -> Iterator[PathRecord]:
    """Yield every proper causal path from cause node ``k`` to effect node ``l``.

    Plain depth-first search without memoization; exponential, use on tiny cases.
    """
    _check_bounds(model, spec)
    out = _out_edges(model)
    blocked = _intervened(spec)
    start = (spec.cause, spec.source_time(k))
    target = (spec.effect, spec.target_time(l))

    def walk(path, weight):
        proc, t = path[-1]
        if (proc, t) == target:
            yield PathRecord(tuple(path), weight)
            return
        for child, lag, coeff in out.get(proc, ()):
            tc = t + lag
            if tc > target[1] or blocked(child, tc):
                continue
            path.append((child, tc))
            yield from walk(path, weight * coeff)
            path.pop()

    yield from walk([start], 1.0)


def enumerate_proper_path_sum(model: VarModel, spec: WindowSpec, k: int, l: int) -> float:
    """Sum of weights of proper causal paths from cause node ``k`` to effect node ``l``.

    The intervened set is the whole cause window. Suffix sums are memoized on
    ``(process, time)`` so the search stays polynomial.
    """
    _check_bounds(model, spec)
    if not (1 <= k <= spec.t_cause and 1 <= l <= spec.t_effect):
        raise IndexError("window index out of range")
    out = _out_edges(model)
    blocked = _intervened(spec)
    target_proc, target_t = spec.effect, spec.target_time(l)

    @lru_cache(maxsize=None)
    def suffix(proc: int, t: int) -> float:
        if proc == target_proc and t == target_t:
            return 1.0
        total = 0.0
        for child, lag, coeff in out.get(proc, ()):
            tc = t + lag
            if tc > target_t or blocked(child, tc):
                continue
            total += coeff * suffix(child, tc)
        return total

    return suffix(spec.cause, spec.source_time(k))


def path_oracle_matrix(model: VarModel, spec: WindowSpec) -> np.ndarray:
    return np.array(
        [
            [enumerate_proper_path_sum(model, spec, k, l) for k in range(1, spec.t_cause + 1)]
            for l in range(1, spec.t_effect + 1)
        ]
    )


def mc_interventional_twce(
    model: VarModel,
    spec: WindowSpec,
    step: float = 1.0,
    replicates: int = 1000,
    seed: int = 0,
    burn_in: int | None = None,
) -> tuple[EffectMatrix, np.ndarray]:
    """Finite-difference estimate of the effect matrix under simulated interventions.

    For every replicate the process is run ``T_i + 1`` times on the same noise
    draws: once with the cause window clamped to zero and once per column with
    the window clamped to ``step * e_k``. Returns the mean paired difference
    divided by ``step`` and its standard error.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if replicates < 2:
        raise ValueError("need at least two replicates")
    rho = companion_spectral_radius(model)
    if rho >= 1:
        raise InstabilityError(f"model is not stable (spectral radius {rho:.6g})")
    if max(spec.cause, spec.effect) > model.n_processes:
        raise SchemaError("window spec references a process outside the model")
    if burn_in is None:
        burn_in = min(default_burn_in(model), 2000)

    n, p = model.n_processes, model.max_lag
    phi = model.coefficients
    lags = [lag for lag in range(1, p + 1) if np.any(phi[lag])]
    i, j = spec.cause - 1, spec.effect - 1
    t_start = spec.source_time(1) - burn_in
    t_stop = max(spec.target_time(spec.t_effect), spec.source_time(spec.t_cause))
    n_steps = t_stop - t_start + 1
    n_runs = spec.t_cause + 1  # run 0 is the zero baseline

    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.standard_normal((n_steps, replicates, n)) * np.sqrt(model.noise_variance)

    # ring buffer of the last p states, each (run, replicate, process)
    hist = np.zeros((p, n_runs, replicates, n))
    clamp = np.zeros((n_runs, spec.t_cause))
    clamp[1:, :] = step * np.eye(spec.t_cause)
    effect_rows = {}
    for s in range(n_steps):
        t = t_start + s
        acc = np.broadcast_to(noise[s], (n_runs, replicates, n)).copy()
        for lag in lags:
            acc += hist[(s - lag) % p] @ phi[lag].T
        pos = t - spec.source_time(1)
        if 0 <= pos < spec.t_cause:
            acc[:, :, i] = clamp[:, pos][:, None]
        hist[s % p] = acc
        if spec.target_time(1) <= t <= spec.target_time(spec.t_effect):
            effect_rows[t - spec.target_time(1)] = acc[:, :, j]

    est = np.zeros((spec.t_effect, spec.t_cause))
    se = np.zeros_like(est)
    for l in range(spec.t_effect):
        vals = effect_rows[l]
        diffs = (vals[1:] - vals[0][None, :]) / step  # (T_i, R)
        est[l] = diffs.mean(axis=1)
        se[l] = diffs.std(axis=1, ddof=1) / np.sqrt(replicates)
    return EffectMatrix(spec, est), se


def validation_report(
    model: VarModel,
    spec: WindowSpec,
    replicates: int = 1000,
    seed: int = 0,
    step: float = 1.0,
    with_paths: bool | None = None,
) -> dict:
    """Compare :func:`cofx.effects.twce` with the interventional and path oracles."""
    analytic = twce(model, spec).values
    mc, se = mc_interventional_twce(model, spec, step=step, replicates=replicates, seed=seed)
    z = np.abs(analytic - mc.values) / np.maximum(se, SE_FLOOR)
    report = {
        "spec": spec.to_dict(),
        "replicates": replicates,
        "seed": seed,
        "se_floor": SE_FLOOR,
        "entries": [
            {
                "l": l + 1,
                "k": k + 1,
                "analytic": float(analytic[l, k]),
                "oracle": float(mc.values[l, k]),
                "se": float(se[l, k]),
                "z": float(z[l, k]),
            }
            for l in range(spec.t_effect)
            for k in range(spec.t_cause)
        ],
        "max_abs_z": float(z.max()) if z.size else 0.0,
    }
    if with_paths is None:
        with_paths = (
            spec.tau + spec.t_cause + spec.t_effect <= MAX_SPAN
            and model.n_processes <= MAX_PROCESSES
        )
    if with_paths:
        paths = path_oracle_matrix(model, spec)
        report["path_max_abs_diff"] = float(np.abs(paths - analytic).max())
    report["passed"] = report["max_abs_z"] < 3 and report.get("path_max_abs_diff", 0.0) <= 1e-12
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2)
