"""fraclan: simulation and likelihood asymptotics for SDEs driven by
additive fractional Brownian noise with H > 1/2.

Subpackages by theme: exact fBm sampling and the Wiener<->fBm coupling
(:mod:`fraclan.fbm`), fractional calculus on grids (:mod:`fraclan.fraccalc`),
the drift catalogue and Euler solver (:mod:`fraclan.sde`), Girsanov
log-densities and the likelihood-ratio decomposition
(:mod:`fraclan.likelihood`), information-matrix estimation
(:mod:`fraclan.gamma`), and the batch experiment CLI (:mod:`fraclan.cli`).
"""

from .errors import (
    BlowUpError,
    BracketError,
    ConfigError,
    DegenerateVarianceError,
    DissipativityViolation,
    EmbeddingError,
    FraclanError,
    HurstRangeError,
    NotPositiveDefiniteError,
    OracleCapError,
    QuadratureConvergenceError,
    TailToleranceError,
    TruncationError,
)
from .grids import Hurst, TimeGrid
from .rng import replica_stream, replica_streams

__version__ = "0.1.0"

__all__ = [
    "Hurst",
    "TimeGrid",
    "replica_stream",
    "replica_streams",
    "FraclanError",
    "HurstRangeError",
    "EmbeddingError",
    "OracleCapError",
    "NotPositiveDefiniteError",
    "TruncationError",
    "BlowUpError",
    "DissipativityViolation",
    "TailToleranceError",
    "QuadratureConvergenceError",
    "BracketError",
    "ConfigError",
    "DegenerateVarianceError",
    "__version__",
]
