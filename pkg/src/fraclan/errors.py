"""Typed exceptions shared across the toolkit."""


class FraclanError(Exception):
    """Base class for all toolkit errors."""


class HurstRangeError(FraclanError):
    """Hurst parameter outside the admissible range for the requested operation."""


class EmbeddingError(FraclanError):
    """Circulant embedding produced negative eigenvalues beyond tolerance."""


class OracleCapError(FraclanError):
    """Dense-factorization oracle sampler called above its size cap."""


class NotPositiveDefiniteError(FraclanError):
    """Dense covariance matrix failed to factor (signals a covariance bug)."""


class TruncationError(FraclanError):
    """Left-tail truncation too small for the requested tolerance."""


class BlowUpError(FraclanError):
    """Euler iterate exceeded the overflow cap; the step index is reported."""


class DissipativityViolation(FraclanError):
    """A sampled point pair violated the declared one-sided Lipschitz bound."""


class TailToleranceError(FraclanError):
    """Quadrature tail contribution cannot be bounded below the declared tolerance."""


class QuadratureConvergenceError(FraclanError):
    """Successive quadrature refinements disagree beyond tolerance."""


class BracketError(FraclanError):
    """Optimizer pre-scan found no interior maximum in the search bracket."""


class ConfigError(FraclanError):
    """Invalid, missing or unknown experiment configuration key."""


class DegenerateVarianceError(FraclanError):
    """Reference variance for a distributional test is not positive."""
