"""Nonparametric test for a constant beta between two high-frequency price series."""

from .errors import BetaConstError, ConfigError, DegenerateInputError, InputError, ParseError
from .inference import (
    TestConfig,
    TestOutcome,
    alternative_limit,
    run_test,
    scaled_alternative,
    suggest_block_size,
)
from .mc import McDesign, McReport, run_mc
from .sim import BetaFunction, CIRBeta, CIRParams, ConstantBeta, JumpSpec, SimConfig, simulate
from .stats import DenominatorGuard, ObservationGrid, TruncationSpec, pooled_beta

__version__ = "0.1.0"
