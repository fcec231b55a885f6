"""Causal Orthogonal Functions: SVD-based impulse/response pairs of an effect matrix.

Unconstrained COFs are the singular vectors of ``DLambda``. The constrained
variants first restrict impulses and responses to subspaces given by
orthonormal bases, take the SVD of the restricted matrix and map the singular
vectors back to signal space.

Sign convention: every response ``v_l`` has its largest-magnitude entry
positive; ``u_l`` follows from ``DLambda u_l = sigma_l v_l``. Singular values
below ``1e-12 * sigma_1`` are set to exactly zero. Within a degenerate group
of singular values only the spanned subspace is meaningful.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .effects import EffectMatrix
from .errors import SchemaError

__all__ = [
    "CofSet",
    "ProjectionBasis",
    "compute_cofs",
    "constrained_cofs",
    "jointly_constrained_cofs",
    "ssa_restricted_cofs",
    "ssa_basis",
    "svd_pairs",
]

ORTHO_TOL = 1e-10
RELATIVE_CUTOFF = 1e-12


@dataclass(frozen=True)
class CofSet:
    impulses: np.ndarray  # (T_i, r)
    responses: np.ndarray  # (T_j, r)
    sigmas: np.ndarray  # (r,)
    constraint_tag: str = "unconstrained"

    def __post_init__(self):
        for name in ("impulses", "responses", "sigmas"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def rank(self) -> int:
        return self.sigmas.shape[0]

    def pair(self, l: int) -> tuple[np.ndarray, np.ndarray, float]:
        """``(u_l, v_l, sigma_l)`` for 1-based ``l``."""
        return self.impulses[:, l - 1], self.responses[:, l - 1], float(self.sigmas[l - 1])

    def to_dict(self) -> dict:
        return {
            "sigmas": self.sigmas.tolist(),
            "impulses": self.impulses.T.tolist(),
            "responses": self.responses.T.tolist(),
            "constraint_tag": self.constraint_tag,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class ProjectionBasis:
    columns: np.ndarray  # (d, m), orthonormal columns
    side: str = "impulse"

    def __post_init__(self):
        cols = np.array(self.columns, dtype=float)
        if cols.ndim == 1:
            cols = cols[:, None]
        if cols.ndim != 2 or cols.shape[1] > cols.shape[0]:
            raise SchemaError("basis must be a d x m matrix with m <= d")
        if self.side not in ("impulse", "response"):
            raise SchemaError("side must be 'impulse' or 'response'")
        gram = cols.T @ cols
        if np.abs(gram - np.eye(cols.shape[1])).max(initial=0.0) > ORTHO_TOL:
            raise SchemaError("basis columns are not orthonormal")
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T

    @classmethod
    def from_span(cls, vectors, side: str = "impulse") -> "ProjectionBasis":
        """Orthonormalize arbitrary spanning vectors (columns)."""
        q, r = np.linalg.qr(np.atleast_2d(np.asarray(vectors, dtype=float).T).T)
        keep = np.abs(np.diag(r)) > 1e-12 * max(1.0, np.abs(r).max(initial=0.0))
        return cls(q[:, keep], side)


def svd_pairs(mat: np.ndarray, rank: int | None = None):
    """SVD with the package sign/tie conventions. Returns ``(U, V, sigma)``."""
    mat = np.asarray(mat, dtype=float)
    full = min(mat.shape)
    rank = full if rank is None else rank
    if not 0 <= rank <= full:
        raise ValueError(f"rank must lie in 0..{full}")
    if full == 0:
        return np.zeros((mat.shape[1], 0)), np.zeros((mat.shape[0], 0)), np.zeros(0)
    left, sig, right_t = np.linalg.svd(mat, full_matrices=False)
    right = right_t.T
    if sig[0] > 0:
        sig = np.where(sig < RELATIVE_CUTOFF * sig[0], 0.0, sig)
    else:
        sig = np.zeros_like(sig)

    for c in range(full):
        col = left[:, c]
        pivot = np.argmax(np.abs(col))
        if col[pivot] < 0:
            left[:, c] = -col
            right[:, c] = -right[:, c]

    # ties (equal to 12 relative digits): order lexicographically by v, descending
    scale = sig[0] if sig[0] > 0 else 1.0
    order = sorted(
        range(full),
        key=lambda c: (-round(sig[c] / scale, 12), tuple(-np.round(left[:, c], 12))),
    )
    order = np.array(order[:rank], dtype=int)
    # rounding-level swaps inside a tie group must not break the ordering of sigma
    return right[:, order], left[:, order], np.sort(sig)[::-1][:rank]


def _orient(u: np.ndarray, v: np.ndarray):
    """Flip pairs so each response's largest-magnitude entry is positive."""
    u, v = u.copy(), v.copy()
    for c in range(v.shape[1]):
        if v[np.argmax(np.abs(v[:, c])), c] < 0:
            u[:, c] *= -1
            v[:, c] *= -1
    return u, v


def _values(eff) -> np.ndarray:
    return eff.values if isinstance(eff, EffectMatrix) else np.asarray(eff, dtype=float)


def compute_cofs(eff: EffectMatrix, rank: int | None = None) -> CofSet:
    """Top ``rank`` COF pairs of the effect matrix (default: all ``min(T_i, T_j)``)."""
    u, v, s = svd_pairs(_values(eff), rank)
    return CofSet(u, v, s, "unconstrained")


def _check_basis(basis: ProjectionBasis, rows: int, what: str) -> None:
    if not isinstance(basis, ProjectionBasis):
        raise TypeError(f"{what} must be a ProjectionBasis")
    if basis.dim != rows:
        raise SchemaError(f"{what} has {basis.dim} rows, expected {rows}")


def constrained_cofs(
    eff: EffectMatrix, p: ProjectionBasis, q: ProjectionBasis, tag: str = "projected"
) -> CofSet:
    """COFs with impulses in ``span(p)`` and responses in ``span(q)``.

    ``p`` acts on the impulse (cause window) space and ``q`` on the response
    (effect window) space: SVD of ``q^T DLambda p``, back-mapped as
    ``U = p U'``, ``V = q V'``.
    """
    vals = _values(eff)
    _check_basis(p, vals.shape[1], "impulse basis")
    _check_basis(q, vals.shape[0], "response basis")
    restricted = q.columns.T @ vals @ p.columns
    u, v, s = svd_pairs(restricted)
    u, v = _orient(p.columns @ u, q.columns @ v)
    return CofSet(u, v, s, tag)


def jointly_constrained_cofs(
    eff: EffectMatrix,
    ps: Sequence[ProjectionBasis],
    qs: Sequence[ProjectionBasis],
    tag: str = "jointly-projected",
) -> CofSet:
    """COFs subject to several impulse-side and response-side conditions.

    With ``ps = [P1, .., Pn]`` and ``qs = [Q1, .., Qm]`` the restricted matrix is

        Qm^T (Q_{m-1} Q_{m-1}^T) .. (Q1 Q1^T) DLambda (P1 P1^T) .. (P_{n-1} P_{n-1}^T) Pn

    i.e. earlier bases act as projectors closest to ``DLambda`` and the last
    basis on each side supplies the coordinates. Singular vectors are mapped
    back through the last bases, ``U = Pn U''`` and ``V = Qm V''``.
    """
    if not ps or not qs:
        raise ValueError("need at least one basis per side")
    vals = _values(eff)
    for b in ps:
        _check_basis(b, vals.shape[1], "impulse basis")
    for b in qs:
        _check_basis(b, vals.shape[0], "response basis")
    left = np.eye(vals.shape[0])
    for b in qs[:-1]:
        left = b.projector @ left
    right = np.eye(vals.shape[1])
    for b in ps[:-1]:
        right = right @ b.projector
    restricted = qs[-1].columns.T @ left @ vals @ right @ ps[-1].columns
    u, v, s = svd_pairs(restricted)
    u, v = _orient(ps[-1].columns @ u, qs[-1].columns @ v)
    return CofSet(u, v, s, tag)


def ssa_basis(data_row: np.ndarray, window: int, n_modes: int, side: str = "impulse"):
    """Top ``n_modes`` SSA eigenvectors of one series' lagged covariance, as a basis."""
    from .mssa import lagged_covariance_matrix, mssa_decompose

    cov = lagged_covariance_matrix(np.atleast_2d(data_row), window)
    dec = mssa_decompose(cov)
    return ProjectionBasis(dec.modes[:, :n_modes], side)


def ssa_restricted_cofs(
    eff: EffectMatrix, e_cause: ProjectionBasis, e_effect: ProjectionBasis
) -> CofSet:
    """COFs living in the dominant SSA subspaces of the cause and effect series.

    ``e_cause`` spans the impulse space (SSA modes of the cause process),
    ``e_effect`` the response space.
    """
    return constrained_cofs(eff, e_cause, e_effect, tag="ssa-restricted")
