"""
symdiv - group-invariant divergence estimation

Wasserstein-1, MMD and Lipschitz-regularized alpha-divergence estimators
for distributions invariant under a finite group action, plus the benchmark
samplers and the experiment harness that measures their error curves.
"""

__version__ = "0.1.0"
SPEC_REVISION = "1"

from .errors import (  # noqa: E402
    ArgumentError,
    DomainError,
    FitError,
    PartialResultsError,
    ResourceError,
    SolverError,
    SymdivError,
    UnsupportedOperationError,
)
from .groups import GroupAction, check_assumption_a1, orbit, project_fundamental  # noqa: E402
from .measures import EmpiricalMeasure, from_samples, project, symmetrize  # noqa: E402
from .w1 import W1Config, estimate_w1, w1_1d, w1_exact, w1_invariant, w1_quotient  # noqa: E402
from .mmd import KernelSpec, c_big, estimate_c_sigma_k, mmd_invariant, mmd_plugin  # noqa: E402
from .falpha import AlphaConfig, bound_constants, dalpha_invariant  # noqa: E402
