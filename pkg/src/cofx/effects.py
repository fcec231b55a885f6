"""Time-windowed causal effect (TWCE) matrices of VAR processes.

For a cause process ``i`` and an effect process ``j`` the cause window holds the
nodes ``X^i(t - tau - T_i + k)``, ``k = 1..T_i`` and the effect window the nodes
``X^j(t - T_j + l)``, ``l = 1..T_j``. Entry ``(l, k)`` of the effect matrix is the
derivative of ``E[X^j(t - T_j + l)]`` with respect to the value assigned to the
``k``-th cause node under a joint intervention on the whole cause window.

For a linear VAR this is the sum of path weights over causal paths that leave
the cause window only through their starting node. We compute it by forward
sensitivity propagation: seed a unit sensitivity at the source node, push it
through the coefficient matrices and clamp process ``i`` to zero at every other
cause-window time (those nodes are held fixed by the intervention). The
baseline intervention value does not enter, so it is fixed to zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import InstabilityError, SchemaError, UndefinedDiscrepancyError
from .var_model import VarModel, companion_spectral_radius

__all__ = [
    "WindowSpec",
    "EffectMatrix",
    "UNIT_TOL",
    "total_effects",
    "twce",
    "twce_columnwise",
    "causal_response",
    "causal_effect",
    "filtered_causal_effect",
    "causal_discrepancy",
    "pseudo_inverse_impulse",
]

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class WindowSpec:
    """Cause window ``X^cause(t - tau, t_cause)`` and effect window ``X^effect(t, t_effect)``."""

    cause: int
    effect: int
    tau: int = 0
    t_cause: int = 1
    t_effect: int = 1

    def __post_init__(self):
        if self.cause == self.effect:
            raise SchemaError("cause and effect processes must differ")
        if self.cause < 1 or self.effect < 1:
            raise SchemaError("process indices are 1-based")
        if self.tau < 0:
            raise SchemaError("tau must be >= 0")
        if self.t_cause < 1 or self.t_effect < 1:
            raise SchemaError("window lengths must be >= 1")

    def source_time(self, k: int) -> int:
        """Time of the k-th cause node (1-based ``k``) relative to ``t = 0``."""
        return -self.tau - self.t_cause + k

    def target_time(self, l: int) -> int:
        return -self.t_effect + l

    def lag_gap(self, l: int, k: int) -> int:
        """``T_i - k + tau - T_j + l``: how far the effect node lies after the cause node."""
        return self.t_cause - k + self.tau - self.t_effect + l

    def to_dict(self) -> dict[str, int]:
        return {
            "cause": self.cause,
            "effect": self.effect,
            "tau": self.tau,
            "t_cause": self.t_cause,
            "t_effect": self.t_effect,
        }


@dataclass(frozen=True)
class EffectMatrix:
    spec: WindowSpec
    values: np.ndarray  # (t_effect, t_cause)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.spec.t_effect, self.spec.t_cause):
            raise SchemaError(
                f"values have shape {values.shape}, "
                f"expected {(self.spec.t_effect, self.spec.t_cause)}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_dict(self) -> dict[str, Any]:
        return {"spec": self.spec.to_dict(), "values": self.values.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc) -> "EffectMatrix":
        return cls(WindowSpec(**doc["spec"]), np.asarray(doc["values"], dtype=float))


def _check_model(model: VarModel, spec: WindowSpec | None = None) -> None:
    rho = companion_spectral_radius(model)
    if rho >= 1:
        raise InstabilityError(f"model is not stable (spectral radius {rho:.6g})")
    if spec is not None and max(spec.cause, spec.effect) > model.n_processes:
        raise SchemaError(f"window spec references a process outside 1..{model.n_processes}")


def total_effects(model: VarModel, max_p: int, decomposition: str = "last") -> list[np.ndarray]:
    """Total lag-p effect matrices ``mu(0..max_p)``.

    ``mu(p)[l, k]`` is the total effect of ``X^k(t)`` on ``X^l(t + p)``. The
    ``"last"`` decomposition is ``mu(p) = sum_k mu(p - k) Phi(k)`` (split by the
    last hop), ``"first"`` is ``sum_k Phi(k) mu(p - k)`` (split by the first).
    Both sum over the same paths.
    """
    if max_p < 0:
        raise ValueError("max_p must be >= 0")
    if decomposition not in ("first", "last"):
        raise ValueError("decomposition must be 'first' or 'last'")
    phi = model.coefficients
    mu = [np.eye(model.n_processes)]
    for p in range(1, max_p + 1):
        acc = np.zeros_like(mu[0])
        for k in range(1, min(p, model.max_lag) + 1):
            if decomposition == "last":
                acc += mu[p - k] @ phi[k]
            else:
                acc += phi[k] @ mu[p - k]
        mu.append(acc)
    return mu


def twce_columnwise(model: VarModel, spec: WindowSpec) -> EffectMatrix:
    """Reference implementation: one propagation run per cause-window node."""
    _check_model(model, spec)
    phi = model.coefficients
    n, p_max = model.n_processes, model.max_lag
    i, j = spec.cause - 1, spec.effect - 1
    window_lo, window_hi = spec.source_time(1), spec.source_time(spec.t_cause)
    t_end = spec.target_time(spec.t_effect)
    out = np.zeros((spec.t_effect, spec.t_cause))
    for k in range(1, spec.t_cause + 1):
        s = spec.source_time(k)
        if t_end <= s:
            continue
        steps = t_end - s + 1
        x = np.zeros((steps, n))
        x[0, i] = 1.0
        for step in range(1, steps):
            t = s + step
            acc = np.zeros(n)
            for lag in range(1, min(step, p_max) + 1):
                acc += phi[lag] @ x[step - lag]
            if window_lo <= t <= window_hi:
                acc[i] = 0.0
            x[step] = acc
        for l in range(1, spec.t_effect + 1):
            if spec.lag_gap(l, k) > 0:
                out[l - 1, k - 1] = x[spec.target_time(l) - s, j]
    return EffectMatrix(spec, out)


def twce(model: VarModel, spec: WindowSpec) -> EffectMatrix:
    """Time-windowed causal effect matrix of ``spec.cause -> spec.effect``.

    All columns are propagated together: the state is an ``N x T_i`` block whose
    k-th column is the sensitivity to the k-th cause node. Column k is seeded
    at its own source time and clamped at the other cause-window times.
    """
    _check_model(model, spec)
    phi = model.coefficients
    n, p_max = model.n_processes, model.max_lag
    i, j = spec.cause - 1, spec.effect - 1
    t_i = spec.t_cause
    t0 = spec.source_time(1)
    t_end = spec.target_time(spec.t_effect)
    out = np.zeros((spec.t_effect, t_i))
    if t_end <= t0:
        return EffectMatrix(spec, out)

    steps = t_end - t0 + 1
    x = np.zeros((steps, n, t_i))
    active = [lag for lag in range(1, p_max + 1) if np.any(phi[lag])]
    for step in range(steps):
        acc = np.zeros((n, t_i))
        for lag in active:
            if lag > step:
                break
            acc += phi[lag] @ x[step - lag]
        if step < t_i:
            # cause window node at this time: held fixed except in its own column
            acc[i, :] = 0.0
            acc[i, step] = 1.0
        x[step] = acc

    l_idx = np.arange(1, spec.t_effect + 1)
    k_idx = np.arange(1, t_i + 1)
    gap = spec.lag_gap(l_idx[:, None], k_idx[None, :])
    # effect nodes before the cause window are masked by the gap anyway
    rows = np.maximum(spec.target_time(l_idx) - t0, 0)
    vals = x[rows, j, :]
    out = np.where(gap > 0, vals, 0.0)
    return EffectMatrix(spec, out)


def _as_vector(signal, size: int, name: str) -> np.ndarray:
    vec = np.asarray(signal, dtype=float).reshape(-1)
    if vec.shape[0] != size:
        raise ValueError(f"{name} has length {vec.shape[0]}, expected {size}")
    return vec


def _require_unit(vec: np.ndarray, name: str) -> None:
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"{name} must have unit euclidean norm (got {norm:.12g})")


def causal_response(eff: EffectMatrix, u) -> np.ndarray:
    """Causal response ``DLambda @ u``; its norm is the causal effect."""
    return eff.values @ _as_vector(u, eff.spec.t_cause, "impulse")


def causal_effect(eff: EffectMatrix, u) -> float:
    return float(np.linalg.norm(causal_response(eff, u)))


def filtered_causal_effect(eff: EffectMatrix, u, v) -> float:
    """``v^T DLambda u`` for unit-norm impulse ``u`` and response ``v``."""
    u = _as_vector(u, eff.spec.t_cause, "impulse")
    v = _as_vector(v, eff.spec.t_effect, "response")
    _require_unit(u, "impulse")
    _require_unit(v, "response")
    return float(v @ eff.values @ u)


def causal_discrepancy(eff: EffectMatrix, u, v) -> float:
    """Fraction of the response energy of ``u`` not captured along ``v``.

    Returns ``||(v^T R) v - R||^2 / ||R||^2`` with ``R = DLambda u``.
    """
    u = _as_vector(u, eff.spec.t_cause, "impulse")
    v = _as_vector(v, eff.spec.t_effect, "response")
    _require_unit(u, "impulse")
    _require_unit(v, "response")
    response = eff.values @ u
    energy = float(response @ response)
    if energy == 0.0:
        raise UndefinedDiscrepancyError("impulse has zero causal response")
    fce = float(v @ response)
    resid = fce * v - response
    cd = float(resid @ resid) / energy
    return min(max(cd, 0.0), 1.0)


def pseudo_inverse_impulse(eff: EffectMatrix, v) -> np.ndarray:
    """Minimum-norm impulse whose causal response is closest to ``v``."""
    v = _as_vector(v, eff.spec.t_effect, "response")
    return np.linalg.pinv(eff.values) @ v
