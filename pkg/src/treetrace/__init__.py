"""Sobolev traces on weighted p-adic metric trees."""

from .errors import (
    AmbiguityError,
    ConfigError,
    ContinuityError,
    DepthError,
    ParameterError,
    RegimeError,
    SupportError,
    TreeTraceError,
)
from .tree import (
    EdgeId,
    TreeParams,
    TreePoint,
    TreeTopology,
    children,
    coordinate_map,
    coordinate_map_inverse,
    geometric_tree,
    parent,
    perturbed_tree,
    subtree_contains,
)
from .treefunc import (
    TreeFunction,
    from_callable,
    from_radial,
    norms,
    random_tree_function,
    transport,
    transport_report,
    vertex_values,
)
from .harmonic import (
    RAD,
    SymmetryIndex,
    F_infty,
    analyze,
    basis_function,
    basis_gram,
    enumerate_indices,
    gate,
    harmonic_profile,
    sigma,
    synth,
)
from .multiscale import (
    Cell,
    Decomposition,
    diagnostics,
    hypercube_decomposition,
    interval_decomposition,
)
from .approx import (
    PiecewiseConstantFn,
    SampledFn,
    approx_norm,
    besov_norm,
    detail_Qn,
    gagliardo_seminorm,
    modulus_of_smoothness,
    project_Pn,
)
from .trace import (
    TraceCoefficients,
    gamma,
    identify,
    identify_inverse,
    lift,
    tau,
    tau_perturbed,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
