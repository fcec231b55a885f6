"""Fourier and wavelet views of effect matrices, and frequency-domain Granger causality.

DFT convention: forward kernel ``exp(-2j*pi*k*n/T)``; ``F / sqrt(T)`` is unitary.
The Fourier effect matrix is ``(1/T) F DLambda F^H``; the magnitudes of its
diagonal are the frequency causal effects at ``omega_k = 2*pi*k/T`` for
``k = 0..T'`` (``T' = floor(T/2)``).

Wavelet matrices use the periodized pyramid algorithm with Haar or
Daubechies-4 filters. Columns of the scale-``j`` block are the synthesis
vectors of the level-``j`` wavelet coefficients; the last block holds the
level-``J`` scaling vectors.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .cof import CofSet, ProjectionBasis, constrained_cofs
from .effects import EffectMatrix
from .errors import SchemaError
from .var_model import VarModel

__all__ = [
    "SpectralCurve",
    "WaveletBasis",
    "FILTERS",
    "frequency_grid",
    "dft_matrix",
    "ftwc",
    "frequency_causal_effects",
    "transfer_function",
    "frequency_granger",
    "wavelet_matrix",
    "scale_effects",
    "curves_csv",
]

_SQ3 = np.sqrt(3.0)
FILTERS = {
    "haar": np.array([1.0, 1.0]) / np.sqrt(2.0),
    "d4": np.array([1 + _SQ3, 3 + _SQ3, 3 - _SQ3, 1 - _SQ3]) / (4 * np.sqrt(2.0)),
}


def frequency_grid(T: int) -> np.ndarray:
    """``omega_k = 2*pi*k/T`` for ``k = 0..floor(T/2)``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return 2 * np.pi * np.arange(T // 2 + 1) / T


@dataclass(frozen=True)
class SpectralCurve:
    frequencies: np.ndarray
    values: np.ndarray
    kind: str  # "frequency-causal-effect" | "frequency-granger"
    mode: str = ""
    model: str = ""

    def __post_init__(self):
        freqs = np.array(self.frequencies, dtype=float)
        vals = np.array(self.values, dtype=float)
        if freqs.shape != vals.shape:
            raise ValueError("frequencies and values must have the same length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("curve values must be finite")
        freqs.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "values", vals)

    def to_csv(self, header: bool = True) -> str:
        return curves_csv([self], header=header)


def curves_csv(curves, header: bool = True) -> str:
    buf = io.StringIO()
    if header:
        buf.write("omega,value,kind,model,mode\n")
    for c in curves:
        for w, v in zip(c.frequencies, c.values):
            buf.write(f"{w:.15g},{v:.15g},{c.kind},{c.model},{c.mode}\n")
    return buf.getvalue()


def dft_matrix(T: int) -> np.ndarray:
    n = np.arange(T)
    return np.exp(-2j * np.pi * np.outer(n, n) / T)


def _square_lag0(eff: EffectMatrix) -> int:
    if eff.spec.t_cause != eff.spec.t_effect:
        raise SchemaError("Fourier effects need equal cause and effect windows")
    if eff.spec.tau != 0:
        raise SchemaError("Fourier effects are defined for tau = 0")
    return eff.spec.t_cause


def ftwc(eff: EffectMatrix) -> np.ndarray:
    """Effect matrix in the Fourier basis, ``(1/T) F DLambda F^H``."""
    T = _square_lag0(eff)
    F = dft_matrix(T)
    return (F @ eff.values @ F.conj().T) / T


def frequency_causal_effects(eff: EffectMatrix, model_name: str = "") -> SpectralCurve:
    T = _square_lag0(eff)
    # diagonal of (1/T) F L F^H without forming the full product
    F = dft_matrix(T)
    diag = np.einsum("kn,nm,km->k", F, eff.values, F.conj()) / T
    half = T // 2 + 1
    return SpectralCurve(
        frequency_grid(T), np.abs(diag[:half]), "frequency-causal-effect", "", model_name
    )


def _lag_polynomial(model: VarModel, omega: float) -> np.ndarray:
    phi = model.coefficients
    lags = np.arange(phi.shape[0])
    weights = np.exp(-1j * omega * lags)
    weights[0] = 0.0
    return np.eye(model.n_processes) - np.tensordot(weights, phi, axes=1)


def transfer_function(model: VarModel, omega: float) -> np.ndarray:
    """``H(omega) = (I - sum_p exp(-i omega p) Phi(p))^{-1}``."""
    a = _lag_polynomial(model, omega)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError(
            f"lag polynomial is singular at omega={omega:.6g} (condition number {cond:.3g})"
        )
    return np.linalg.solve(a, np.eye(model.n_processes, dtype=complex))


def frequency_granger(
    model: VarModel,
    cause: int,
    effect: int,
    grid=None,
    mode: str = "standard",
    model_name: str = "",
) -> SpectralCurve:
    """Spectral Granger causality of ``cause -> effect`` on a frequency grid.

    ``S = H diag(noise) H^H``. In ``standard`` mode the measure is
    ``log(S_jj / (S_jj - var_i |H_ji|^2))``, the log ratio of the effect's
    spectrum to its part not driven by the cause innovations; for a bivariate
    model this is ``log(S_jj / (var_j |H_jj|^2))``. ``paper-literal`` mode
    evaluates ``log(S_jj / |H_ii|^2)``.
    """
    if mode not in ("standard", "paper-literal"):
        raise ValueError("mode must be 'standard' or 'paper-literal'")
    if cause == effect:
        raise SchemaError("cause and effect must differ")
    i, j = cause - 1, effect - 1
    grid = frequency_grid(200) if grid is None else np.asarray(grid, dtype=float)
    noise = np.asarray(model.noise_variance)
    vals = np.empty(grid.shape[0])
    for n, w in enumerate(grid):
        h = transfer_function(model, w)
        s_jj = float(np.real(np.sum(noise * np.abs(h[j, :]) ** 2)))
        if mode == "standard":
            intrinsic = s_jj - noise[i] * abs(h[j, i]) ** 2
            vals[n] = np.log(s_jj / intrinsic)
        else:
            vals[n] = np.log(s_jj / abs(h[i, i]) ** 2)
    if mode == "standard":
        vals = np.where(np.abs(vals) < 1e-15, 0.0, vals)
    return SpectralCurve(grid, vals, "frequency-granger", mode, model_name)


@dataclass(frozen=True)
class WaveletBasis:
    total_length: int
    levels: int
    filter_name: str
    matrix: np.ndarray  # (T, T), columns grouped W_1 | .. | W_J | V_J

    @property
    def scale_blocks(self) -> list[np.ndarray]:
        """``[W_1, .., W_J, V_J]``; ``W_j`` has ``T / 2**j`` columns."""
        blocks, lo = [], 0
        for j in range(1, self.levels + 1):
            width = self.total_length >> j
            blocks.append(self.matrix[:, lo : lo + width])
            lo += width
        blocks.append(self.matrix[:, lo:])
        return blocks

    def block(self, scale: int) -> np.ndarray:
        """Scale ``1..J`` gives ``W_scale``; ``J + 1`` gives the smooth block ``V_J``."""
        if not 1 <= scale <= self.levels + 1:
            raise ValueError(f"scale must lie in 1..{self.levels + 1}")
        return self.scale_blocks[scale - 1]


def _analysis_rows(filt: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Periodized scaling/wavelet analysis operators of shape ``(m/2, m)``."""
    g = filt
    h = np.array([(-1) ** n * g[len(g) - 1 - n] for n in range(len(g))])
    G = np.zeros((m // 2, m))
    H = np.zeros((m // 2, m))
    for t in range(m // 2):
        for n in range(len(g)):
            col = (2 * t + n) % m
            G[t, col] += g[n]
            H[t, col] += h[n]
    return G, H


def wavelet_matrix(T: int, J: int, filter: str = "haar") -> WaveletBasis:
    """Orthogonal ``T x T`` multiresolution matrix ``(W_1 .. W_J V_J)``."""
    if filter not in FILTERS:
        raise SchemaError(f"unknown wavelet filter {filter!r}; choose from {sorted(FILTERS)}")
    if J < 1 or T % (1 << J):
        raise SchemaError(f"T={T} must be a multiple of 2**J with J >= 1 (J={J})")
    filt = FILTERS[filter]
    rows = []
    smooth = np.eye(T)  # maps the signal to the current scaling coefficients
    m = T
    for _ in range(J):
        G, H = _analysis_rows(filt, m)
        rows.append(H @ smooth)
        smooth = G @ smooth
        m //= 2
    rows.append(smooth)
    W = np.vstack(rows).T
    return WaveletBasis(T, J, filter, W)


def scale_effects(
    eff: EffectMatrix, basis: WaveletBasis, s_in: int, s_out: int
) -> tuple[np.ndarray, CofSet]:
    """Inter/intra-scale effect block ``W_out^T DLambda W_in`` and its COFs."""
    T = basis.total_length
    if eff.values.shape != (T, T):
        raise SchemaError(f"effect matrix must be {T} x {T} to match the wavelet basis")
    w_in, w_out = basis.block(s_in), basis.block(s_out)
    omega = w_out.T @ eff.values @ w_in
    cofs = constrained_cofs(
        eff,
        ProjectionBasis(w_in, "impulse"),
        ProjectionBasis(w_out, "response"),
        tag=f"wavelet:{basis.filter_name}:{s_in}->{s_out}",
    )
    return omega, cofs
