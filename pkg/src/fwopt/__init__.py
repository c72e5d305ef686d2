"""Stochastic Frank-Wolfe optimizer family over norm balls.

Sign-momentum and orthogonalized-momentum updates with weight decay are exact
instances of the Frank-Wolfe step over l-inf and spectral balls; this package
implements the whole family (plain, clipped, variance-reduced), the parameter
mappings between the forms, theorem-derived schedules, and a deterministic
experiment harness.
"""

from .config import ExperimentConfig, load_config, parse_kv, serialize_kv
from .constraints import ConstraintSet, GapReport, L2Ball, LinfBall, SpectralBall, fw_gap
from .equivalence import EquivalenceReport, run_equivalence
from .metrics import (
    QuantileBand,
    RunTrace,
    average_gap,
    average_grad_norm,
    quantile_band,
    rate_slope,
)
from .optimizers import (
    LionParams,
    LionState,
    MuonParams,
    MuonState,
    Preset,
    ProblemConstants,
    SfwParams,
    SfwState,
    lion_step,
    map_lion_to_sfw,
    map_muon_to_sfw,
    muon_step,
    preset,
    sfw_step,
)
from .problems import (
    ConvexQuadratic,
    GaussianNoise,
    GradOracle,
    IsotropicQuadratic,
    LeastSquares,
    MatrixQuadratic,
    NoNoise,
    ParetoNoise,
    SharedSample,
    clip,
    constant_batches,
    full_horizon_batches,
    grad_true,
    warm_start_batches,
)
from .runner import execute_experiment, run_lion, run_muon, run_sfw
from .tensor import (
    SvdResult,
    as_point,
    inner,
    norm,
    polar_factor_exact,
    polar_factor_newton_schulz,
    svd_thin,
)

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_kv",
    "serialize_kv",
    "EquivalenceReport",
    "run_equivalence",
    "execute_experiment",
    "run_lion",
    "run_muon",
    "run_sfw",
    "ConstraintSet",
    "GapReport",
    "L2Ball",
    "LinfBall",
    "SpectralBall",
    "fw_gap",
    "QuantileBand",
    "RunTrace",
    "average_gap",
    "average_grad_norm",
    "quantile_band",
    "rate_slope",
    "LionParams",
    "LionState",
    "MuonParams",
    "MuonState",
    "Preset",
    "ProblemConstants",
    "SfwParams",
    "SfwState",
    "lion_step",
    "map_lion_to_sfw",
    "map_muon_to_sfw",
    "muon_step",
    "preset",
    "sfw_step",
    "ConvexQuadratic",
    "GaussianNoise",
    "GradOracle",
    "IsotropicQuadratic",
    "LeastSquares",
    "MatrixQuadratic",
    "NoNoise",
    "ParetoNoise",
    "SharedSample",
    "clip",
    "constant_batches",
    "full_horizon_batches",
    "grad_true",
    "warm_start_batches",
    "SvdResult",
    "as_point",
    "inner",
    "norm",
    "polar_factor_exact",
    "polar_factor_newton_schulz",
    "svd_thin",
]
