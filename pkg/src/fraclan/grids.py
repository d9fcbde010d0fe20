"""Time grids and the Hurst parameter domain type."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HurstRangeError


@dataclass(frozen=True)
class Hurst:
    """Hurst index of fractional Brownian motion.

    Any value in (0, 1) is a valid fBm index, but every SDE / likelihood
    operation in this toolkit assumes long-range dependence and requires
    H > 1/2.  Those operations call :meth:`require_long_memory`.
    """

    value: float

    def __post_init__(self) -> None:
        if not (0.0 < self.value < 1.0):
            raise HurstRangeError(f"Hurst index must lie in (0, 1), got {self.value}")

    def require_long_memory(self) -> None:
        if self.value <= 0.5:
            raise HurstRangeError(
                f"operation requires H > 1/2, got H = {self.value}"
            )

    @property
    def alpha(self) -> float:
        """The fractional order H - 1/2 used throughout the likelihood theory."""
        return self.value - 0.5


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < t_1 < ... < t_n = tau."""

    horizon: float
    n_steps: int
    step: float = field(init=False)

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        object.__setattr__(self, "step", self.horizon / self.n_steps)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    @property
    def n_points(self) -> int:
        return self.n_steps + 1

    def with_horizon(self, horizon: float) -> "TimeGrid":
        """Grid with the same step but a different horizon (rounded to a step multiple)."""
        n = int(round(horizon / self.step))
        return TimeGrid(n * self.step, n)
