"""Stationary linear VAR processes with sparse, lag-annotated coefficients.

A model is stored as a set of edges ``source -> target`` at a given lag. The
dense view follows the usual convention ``Phi[p][target, source] = coeff``,
so that

    X(t) = sum_p Phi(p) X(t - p) + eta(t),     eta(t) ~ N(0, diag(noise_variance)).

Process indices are 1-based in every public interface (documents, edges,
window specs); dense arrays are 0-based internally.

Sampling uses numpy's ``PCG64`` bit generator with ``Generator.standard_normal``
(ziggurat). Both are platform independent for a given seed, which keeps
golden CSV files stable.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import jsonschema
import numpy as np

from .errors import InstabilityError, SchemaError

__all__ = [
    "Edge",
    "VarModel",
    "SamplePaths",
    "MODEL_SCHEMA",
    "parse_model",
    "load_model",
    "load_builtin",
    "builtin_names",
    "companion_matrix",
    "companion_spectral_radius",
    "default_burn_in",
    "simulate",
]

MODEL_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["n_processes", "max_lag", "edges"],
    "additionalProperties": False,
    "properties": {
        "n_processes": {"type": "integer", "minimum": 1},
        "max_lag": {"type": "integer", "minimum": 1},
        "noise_variance": {"type": "array", "items": {"type": "number"}},
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "target", "lag", "coeff"],
                "additionalProperties": False,
                "properties": {
                    "source": {"type": "integer"},
                    "target": {"type": "integer"},
                    "lag": {"type": "integer"},
                    "coeff": {"type": "number"},
                },
            },
        },
        # metadata, ignored by the numerics
        "name": {"type": "string"},
        "note": {"type": "string"},
        "interpreted": {"type": "boolean"},
    },
}


@dataclass(frozen=True, order=True)
class Edge:
    """Lagged link ``source -> target``; ``coeff`` is ``Phi(lag)[target, source]``."""

    source: int
    target: int
    lag: int
    coeff: float = 0.0


@dataclass(frozen=True)
class VarModel:
    n_processes: int
    max_lag: int
    edges: tuple[Edge, ...] = ()
    noise_variance: tuple[float, ...] = ()
    name: str = ""
    interpreted: bool = False

    def __post_init__(self):
        n, tau_max = self.n_processes, self.max_lag
        if n < 1:
            raise SchemaError("n_processes must be >= 1")
        if tau_max < 1:
            raise SchemaError("max_lag must be >= 1")
        edges = tuple(sorted(self.edges, key=lambda e: (e.lag, e.target, e.source)))
        seen = set()
        for e in edges:
            if not (1 <= e.source <= n and 1 <= e.target <= n):
                raise SchemaError(f"edge {e} references a process outside 1..{n}")
            if not 1 <= e.lag <= tau_max:
                raise SchemaError(f"edge {e} has lag outside 1..{tau_max}")
            if not math.isfinite(e.coeff):
                raise SchemaError(f"edge {e} has a non-finite coefficient")
            key = (e.source, e.target, e.lag)
            if key in seen:
                raise SchemaError(f"duplicate edge {key}")
            seen.add(key)
        noise = tuple(float(v) for v in self.noise_variance) or (1.0,) * n
        if len(noise) != n:
            raise SchemaError(f"noise_variance has {len(noise)} entries, expected {n}")
        if any(not (v > 0 and math.isfinite(v)) for v in noise):
            raise SchemaError("noise variances must be positive and finite")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "noise_variance", noise)

    @property
    def coefficients(self) -> np.ndarray:
        """Dense stack of shape ``(max_lag + 1, N, N)``; index 0 is the zero matrix."""
        phi = np.zeros((self.max_lag + 1, self.n_processes, self.n_processes))
        for e in self.edges:
            phi[e.lag, e.target - 1, e.source - 1] = e.coeff
        return phi

    def phi(self, p: int) -> np.ndarray:
        """``Phi(p)``, zero outside ``1..max_lag``."""
        if p < 1 or p > self.max_lag:
            return np.zeros((self.n_processes, self.n_processes))
        return self.coefficients[p]

    @classmethod
    def from_coefficients(cls, phi: np.ndarray, noise_variance=None, **meta) -> "VarModel":
        """Build from a dense ``(max_lag + 1, N, N)`` stack (index 0 ignored)."""
        phi = np.asarray(phi, dtype=float)
        edges = [
            Edge(source=s + 1, target=t + 1, lag=p, coeff=float(phi[p, t, s]))
            for p in range(1, phi.shape[0])
            for t in range(phi.shape[1])
            for s in range(phi.shape[2])
            if phi[p, t, s] != 0.0
        ]
        return cls(
            n_processes=phi.shape[1],
            max_lag=phi.shape[0] - 1,
            edges=tuple(edges),
            noise_variance=tuple(noise_variance or ()),
            **meta,
        )

    def summary_graph(self) -> dict[tuple[int, int], tuple[int, ...]]:
        """Map ``(source, target)`` to the lags at which the link is present."""
        graph: dict[tuple[int, int], list[int]] = {}
        for e in self.edges:
            if e.coeff != 0.0:
                graph.setdefault((e.source, e.target), []).append(e.lag)
        return {k: tuple(sorted(v)) for k, v in sorted(graph.items())}

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {}
        if self.name:
            doc["name"] = self.name
        if self.interpreted:
            doc["interpreted"] = True
        doc.update(
            n_processes=self.n_processes,
            max_lag=self.max_lag,
            noise_variance=list(self.noise_variance),
            edges=[
                {"source": e.source, "target": e.target, "lag": e.lag, "coeff": e.coeff}
                for e in self.edges
            ],
        )
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def parse_model(text: str | Mapping[str, Any]) -> VarModel:
    """Parse and validate a model document (JSON text or an already-decoded mapping)."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    else:
        doc = dict(text)
    if isinstance(doc, dict) and "noise_covariance" in doc:
        raise SchemaError("general noise covariance is not supported; use noise_variance")
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"schema violation: {exc.message}") from exc
    edges = tuple(
        Edge(int(e["source"]), int(e["target"]), int(e["lag"]), float(e["coeff"]))
        for e in doc["edges"]
    )
    return VarModel(
        n_processes=doc["n_processes"],
        max_lag=doc["max_lag"],
        edges=edges,
        noise_variance=tuple(doc.get("noise_variance", ())),
        name=doc.get("name", ""),
        interpreted=doc.get("interpreted", False),
    )


def load_model(path) -> VarModel:
    """Load a model from a file path, or a built-in model name such as ``"A"``."""
    text = None
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        if str(path) in builtin_names():
            return load_builtin(str(path))
        raise
    return parse_model(text)


def builtin_names() -> list[str]:
    pkg = resources.files("cofx") / "data" / "models"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_builtin(name: str) -> VarModel:
    """Models shipped with the package: ``A``, ``B``, ``A1`` .. ``C2``, ``chain``."""
    res = resources.files("cofx") / "data" / "models" / f"{name}.json"
    if not res.is_file():
        raise KeyError(f"no built-in model {name!r}; available: {builtin_names()}")
    return parse_model(res.read_text(encoding="utf-8"))


def companion_matrix(model: VarModel) -> np.ndarray:
    n, p = model.n_processes, model.max_lag
    phi = model.coefficients
    comp = np.zeros((n * p, n * p))
    for lag in range(1, p + 1):
        comp[:n, (lag - 1) * n : lag * n] = phi[lag]
    if p > 1:
        comp[n:, : n * (p - 1)] = np.eye(n * (p - 1))
    return comp


def companion_spectral_radius(model: VarModel) -> float:
    """Spectral radius of the companion matrix; the model is stable iff this is < 1."""
    eig = np.linalg.eigvals(companion_matrix(model))
    return float(np.max(np.abs(eig))) if eig.size else 0.0


def default_burn_in(model: VarModel) -> int:
    rho = companion_spectral_radius(model)
    if rho >= 1:
        return 100_000
    # round first so 1 / (1 - 0.8) = 5.000000000000001 does not bump the ceiling
    return int(min(100_000, 10 * model.max_lag * math.ceil(round(1.0 / (1.0 - rho), 9))))


@dataclass(frozen=True)
class SamplePaths:
    values: np.ndarray  # (N, L)
    seed: int = 0
    burn_in: int = 0
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be an N x L matrix")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_processes(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ",".join(f"x{i + 1}" for i in range(self.n_processes))
        buf.write(f"t,{cols}\n")
        for t in range(self.length):
            row = ",".join(f"{v:.17g}" for v in self.values[:, t])
            buf.write(f"{t},{row}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SamplePaths":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        header = lines[0].split(",")
        if header[0] != "t" or any(h != f"x{k}" for k, h in enumerate(header[1:], 1)):
            raise SchemaError(f"unexpected CSV header {lines[0]!r}")
        rows = np.array([[float(x) for x in ln.split(",")[1:]] for ln in lines[1:]])
        return cls(values=rows.T)


def simulate(
    model: VarModel,
    length: int,
    seed: int,
    burn_in: int | None = None,
    allow_unstable: bool = False,
) -> SamplePaths:
    """Draw a sample path of ``length`` steps after discarding ``burn_in`` steps.

    The result is a pure function of ``(model, length, seed, burn_in)``.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    rho = companion_spectral_radius(model)
    if rho >= 1 and not allow_unstable:
        raise InstabilityError(f"model is not stable (spectral radius {rho:.6g})")
    if burn_in is None:
        burn_in = default_burn_in(model)
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")

    n, p = model.n_processes, model.max_lag
    rng = np.random.Generator(np.random.PCG64(seed))
    total = burn_in + length
    noise = rng.standard_normal((total, n)) * np.sqrt(np.asarray(model.noise_variance))

    phi = model.coefficients
    x = np.zeros((total + p, n))
    active = [lag for lag in range(1, p + 1) if np.any(phi[lag])]
    for t in range(p, total + p):
        acc = noise[t - p].copy()
        for lag in active:
            acc += phi[lag] @ x[t - lag]
        x[t] = acc
    return SamplePaths(values=x[p + burn_in :].T, seed=seed, burn_in=burn_in)

