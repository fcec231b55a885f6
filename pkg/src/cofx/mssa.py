"""Multivariate singular spectrum analysis and its comparison with COFs.

The lagged covariance matrix is estimated from the trajectory (embedding)
matrix of the demeaned series: row ``m`` of the trajectory matrix stacks the
windows ``(x_i[m], .., x_i[m + T - 1])`` of every process ``i``, and
``C = Y^T Y / K`` with ``K = L - T + 1`` rows. This estimator is positive
semidefinite by construction.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .cof import compute_cofs
from .effects import EffectMatrix, WindowSpec, twce
from .errors import SchemaError, UndefinedDiscrepancyError
from .var_model import SamplePaths, VarModel, simulate

__all__ = [
    "MssaDecomposition",
    "lagged_covariance",
    "lagged_covariance_matrix",
    "mssa_decompose",
    "MssaCofRow",
    "mssa_cof_report",
    "report_csv",
    "report_json",
]

_CHUNK = 8192


def lagged_covariance_matrix(values: np.ndarray, window: int) -> np.ndarray:
    """Trajectory-matrix covariance estimate for an ``N x L`` array."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, length = values.shape
    if window < 1:
        raise ValueError("window must be >= 1")
    if length < 2 * window:
        raise ValueError(f"need at least {2 * window} samples for window {window}, got {length}")
    centered = values - values.mean(axis=1, keepdims=True)
    rows = length - window + 1
    cov = np.zeros((n * window, n * window))
    offsets = np.arange(window)
    for start in range(0, rows, _CHUNK):
        stop = min(rows, start + _CHUNK)
        idx = np.arange(start, stop)[:, None] + offsets[None, :]
        # (rows, N*T) block of the trajectory matrix, grouped by process
        traj = centered[:, idx].transpose(1, 0, 2).reshape(stop - start, n * window)
        cov += traj.T @ traj
    cov /= rows
    return 0.5 * (cov + cov.T)


def lagged_covariance(data: SamplePaths, window: int) -> np.ndarray:
    """``(N*T) x (N*T)`` matrix with block ``(i, j)`` entry ``(r, s)`` ~ Cov(X^i(t-T+r), X^j(t-T+s))."""
    return lagged_covariance_matrix(data.values, window)


@dataclass(frozen=True)
class MssaDecomposition:
    window: int
    n_processes: int
    modes: np.ndarray  # (N*T, N*T), orthogonal
    eigenvalues: np.ndarray  # non-increasing

    def pattern(self, process: int, k: int, normalize: bool = False) -> np.ndarray:
        """Sub-pattern ``e_{process,k}`` (both 1-based) of the k-th combined mode."""
        lo = (process - 1) * self.window
        vec = self.modes[lo : lo + self.window, k - 1].copy()
        if normalize:
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec /= norm
        return vec


def mssa_decompose(cov: np.ndarray, window: int | None = None) -> MssaDecomposition:
    """Eigendecomposition of a symmetric lagged covariance, strongest mode first.

    Each mode's largest-magnitude entry is made positive; equal eigenvalues are
    ordered lexicographically by their (descending) mode vectors.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise SchemaError("covariance must be square")
    scale = max(np.abs(cov).max(initial=0.0), 1.0)
    if np.abs(cov - cov.T).max(initial=0.0) > 1e-12 * scale:
        raise SchemaError("covariance must be symmetric")
    vals, vecs = np.linalg.eigh(cov)
    for c in range(vecs.shape[1]):
        if vecs[np.argmax(np.abs(vecs[:, c])), c] < 0:
            vecs[:, c] *= -1
    top = vals.max(initial=0.0)
    ref = top if top > 0 else 1.0
    order = sorted(
        range(len(vals)),
        key=lambda c: (-round(vals[c] / ref, 12), tuple(-np.round(vecs[:, c], 12))),
    )
    size = cov.shape[0]
    window = window or size
    if size % window:
        raise ValueError("window does not divide the covariance dimension")
    return MssaDecomposition(window, size // window, vecs[:, order], np.sort(vals)[::-1])


@dataclass(frozen=True)
class MssaCofRow:
    k: int
    mu: float  # causal effect of the mSSA impulse
    lam: float  # filtered effect along the paired mSSA response pattern
    cd: float  # causal discrepancy of the mSSA pair (nan if undefined)
    sigma: float  # k-th COF singular value


def mssa_cof_report(
    model: VarModel,
    spec: WindowSpec,
    n_modes: int,
    samples: int,
    seed: int,
    burn_in: int | None = None,
    with_vectors: bool = False,
):
    """Compare the first ``n_modes`` mSSA pattern pairs with the COF pairs.

    The cause/effect sub-patterns of each combined mSSA mode are normalized to
    unit length and used as impulse/response. Returns a list of
    :class:`MssaCofRow`; with ``with_vectors`` also a dict of the mode vectors.
    """
    if spec.t_cause != spec.t_effect:
        raise ValueError("mSSA comparison needs equal cause and effect windows")
    if n_modes < 0:
        raise ValueError("n_modes must be >= 0")
    window = spec.t_cause
    eff = twce(model, spec)
    if n_modes == 0:
        return ([], {}) if with_vectors else []
    data = simulate(model, samples, seed, burn_in)
    dec = mssa_decompose(lagged_covariance(data, window), window)
    cofs = compute_cofs(eff)

    rows, vectors = [], {"mssa": [], "cof": []}
    for k in range(1, n_modes + 1):
        e_cause = dec.pattern(spec.cause, k, normalize=True)
        e_effect = dec.pattern(spec.effect, k, normalize=True)
        row, vec = _compare(eff, e_cause, e_effect, k, cofs)
        rows.append(row)
        vectors["mssa"].append(vec)
        if k <= cofs.rank:
            u, v, s = cofs.pair(k)
            vectors["cof"].append({"k": k, "impulse": u, "response": s * v, "sigma": s})
    if with_vectors:
        return rows, vectors
    return rows


def _compare(eff: EffectMatrix, e_cause, e_effect, k: int, cofs):
    response = eff.values @ e_cause
    mu = float(np.linalg.norm(response))
    lam = float(e_effect @ response)
    if mu > 0:
        cd = float(np.sum((lam * e_effect - response) ** 2)) / mu**2
    else:
        cd = float("nan")
    sigma = float(cofs.sigmas[k - 1]) if k <= cofs.rank else float("nan")
    vec = {
        "k": k,
        "impulse": e_cause,
        "pattern": e_effect,
        "response": response,
        "projected_response": lam * e_effect,
    }
    return MssaCofRow(k, mu, lam, cd, sigma), vec


def pair_discrepancy(eff: EffectMatrix, e_cause, e_effect) -> float:
    """Causal discrepancy for an mSSA pair; raises when the response vanishes."""
    row, _ = _compare(eff, e_cause, e_effect, 1, compute_cofs(eff, rank=1))
    if np.isnan(row.cd):
        raise UndefinedDiscrepancyError("impulse has zero causal response")
    return row.cd


def report_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("k,mu_k,lambda_k,cd_k,sigma_k\n")
    for r in rows:
        buf.write(f"{r.k},{r.mu:.15g},{r.lam:.15g},{r.cd:.15g},{r.sigma:.15g}\n")
    return buf.getvalue()


def report_json(rows, vectors) -> str:
    def conv(obj):
        if isinstance(obj, np.ndarray):
            return [float(f"{x:.15g}") for x in obj]
        if isinstance(obj, float):
            return None if np.isnan(obj) else float(f"{obj:.15g}")
        if isinstance(obj, dict):
            return {k: conv(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [conv(v) for v in obj]
        return obj

    doc = {
        "rows": [
            {"k": r.k, "mu_k": r.mu, "lambda_k": r.lam, "cd_k": r.cd, "sigma_k": r.sigma}
            for r in rows
        ],
        "vectors": vectors,
    }
    return json.dumps(conv(doc), indent=1)
