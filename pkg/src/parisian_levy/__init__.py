"""Scale functions, Parisian fluctuation identities and a Monte Carlo oracle for spectrally negative Levy processes."""

from .errors import (
    ConfigurationError,
    ConstructionError,
    DomainError,
    ModelFileError,
    ParisianLevyError,
    PreconditionError,
    RepeatedRootError,
    UnsupportedOperationError,
)
from .identities import (
    REGISTRY,
    IdentityRequest,
    IdentityValue,
    Meaning,
    barrier_sweep,
    evaluate,
    evaluate_limit_consistency,
    value_of,
)
from .kernels import KernelSet, ParisianScales, eval_limits
from .levy_model import LevyModel, ModelKind, Phase, classify_variation, dump_model, load_model, parse_model, phi, psi
from .scale_functions import ScaleFunctions, ScaleTable, build_scale_table
from .simulator import Functional, Process, SimConfig, SimResult, estimate_resolvent_check, simulate_batch, simulate_many

__version__ = "0.1.0"
