"""Fit VAR coefficients on a known time-series graph and derive estimated COFs."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .cof import CofSet, compute_cofs
from .effects import EffectMatrix, WindowSpec, causal_discrepancy, twce
from .errors import SchemaError, UndefinedDiscrepancyError
from .var_model import Edge, SamplePaths, VarModel

__all__ = ["Graph", "fit_var", "estimated_cofs", "cof_diagnostics", "graph_of"]

MIN_SAMPLES_PER_PARAMETER = 10


class Graph:
    """Coefficient-free link structure: ``(source, target, lag)`` triples, 1-based."""

    def __init__(self, n_processes: int, max_lag: int, links: Iterable[tuple[int, int, int]]):
        links = tuple(sorted({tuple(int(x) for x in link) for link in links}))
        # reuse model validation for ranges
        VarModel(n_processes, max_lag, tuple(Edge(s, t, lag, 0.0) for s, t, lag in links))
        self.n_processes = n_processes
        self.max_lag = max_lag
        self.links = links

    @classmethod
    def from_dict(cls, doc) -> "Graph":
        try:
            links = [(e["source"], e["target"], e["lag"]) for e in doc["edges"]]
            return cls(int(doc["n_processes"]), int(doc["max_lag"]), links)
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"invalid graph document: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "n_processes": self.n_processes,
            "max_lag": self.max_lag,
            "edges": [{"source": s, "target": t, "lag": lag} for s, t, lag in self.links],
        }

    def parents(self, target: int) -> list[tuple[int, int]]:
        return [(s, lag) for s, t, lag in self.links if t == target]


def graph_of(model: VarModel) -> Graph:
    return Graph(model.n_processes, model.max_lag, [(e.source, e.target, e.lag) for e in model.edges])


def fit_var(data: SamplePaths, graph: Graph) -> VarModel:
    """Least-squares fit of each process on its graph parents (no intercept).

    The noise variance of each process is its residual variance with a
    degrees-of-freedom correction for the fitted coefficients.
    """
    x = data.values
    n, length = x.shape
    if n != graph.n_processes:
        raise SchemaError(f"data has {n} processes, graph has {graph.n_processes}")
    p = graph.max_lag
    rows = length - p
    n_params = len(graph.links)
    if rows < MIN_SAMPLES_PER_PARAMETER * max(n_params, 1):
        raise ValueError(
            f"insufficient samples: {rows} usable rows for {n_params} parameters "
            f"(need {MIN_SAMPLES_PER_PARAMETER} per parameter)"
        )
    edges, noise = [], []
    for target in range(1, n + 1):
        y = x[target - 1, p:]
        parents = graph.parents(target)
        if parents:
            design = np.column_stack([x[s - 1, p - lag : length - lag] for s, lag in parents])
            if np.linalg.matrix_rank(design) < design.shape[1]:
                raise np.linalg.LinAlgError(f"rank-deficient regressors for process {target}")
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            resid = y - design @ coef
            edges.extend(Edge(s, target, lag, float(c)) for (s, lag), c in zip(parents, coef))
        else:
            resid = y
        noise.append(float(resid @ resid) / (rows - len(parents)))
    return VarModel(n, p, tuple(edges), tuple(noise))


def cof_diagnostics(cofs: CofSet, true_eff: EffectMatrix) -> list[float | None]:
    """Causal discrepancy of every estimated pair, evaluated on the true effect matrix.

    ``None`` where the true response to the impulse vanishes.
    """
    out = []
    for l in range(1, cofs.rank + 1):
        u, v, _ = cofs.pair(l)
        try:
            out.append(causal_discrepancy(true_eff, u, v))
        except UndefinedDiscrepancyError:
            out.append(None)
    return out


def estimated_cofs(
    data: SamplePaths,
    graph: Graph,
    spec: WindowSpec,
    true_model: VarModel | None = None,
    rank: int | None = None,
) -> tuple[CofSet, dict]:
    """Fit the VAR, evaluate its effect matrix and return its COFs plus diagnostics."""
    fitted = fit_var(data, graph)
    eff = twce(fitted, spec)
    cofs = compute_cofs(eff, rank)
    diagnostics: dict = {"fitted_model": fitted, "effect_matrix": eff}
    if true_model is not None:
        true_eff = twce(true_model, spec)
        diagnostics["true_sigmas"] = compute_cofs(true_eff, rank).sigmas
        diagnostics["cd"] = cof_diagnostics(cofs, true_eff)
    return cofs, diagnostics
