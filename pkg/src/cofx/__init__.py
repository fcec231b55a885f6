"""Time-windowed causal effects, Causal Orthogonal Functions and their spectral views for VAR processes."""

from .cof import (
    CofSet,
    ProjectionBasis,
    compute_cofs,
    constrained_cofs,
    jointly_constrained_cofs,
    ssa_restricted_cofs,
)
from .effects import (
    EffectMatrix,
    WindowSpec,
    causal_discrepancy,
    causal_response,
    filtered_causal_effect,
    pseudo_inverse_impulse,
    total_effects,
    twce,
)
from .errors import CofxError, InstabilityError, SchemaError, ValidationError
from .var_model import (
    Edge,
    SamplePaths,
    VarModel,
    companion_spectral_radius,
    load_builtin,
    load_model,
    parse_model,
    simulate,
)

__version__ = "0.1.0"
