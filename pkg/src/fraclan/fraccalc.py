"""Numerical fractional calculus on uniform grids.

Implements the Marchaud derivative

    D^a f(t) = c_a * integral_0^inf (f(t) - f(t-r)) r^{-1-a} dr,
    c_a = a / Gamma(1 - a),

for orders a in (0, 1), together with left/right Riemann-Liouville
integrals.  The normalization c_a is the one making D^a a left inverse
of the fractional integral I^a.

All quadratures are product-integration rules that treat the data as
piecewise linear on each cell, which handles the r -> 0 singularity of
the Marchaud kernel exactly for such data.  Input functions carry a
constant extension f(t) = f_left for t <= 0; the part of the Marchaud
integral over r >= t then has the closed form
(f(t) - f_left) * t^{-a} / a (see :func:`tail_term`).

Everything operates on value arrays of shape (n+1,) or batched
(m, n+1); row 0 of the grid corresponds to t = 0 and D^a f(0) = 0 by
convention (both split integrals vanish there).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as _gamma

from .grids import TimeGrid

__all__ = [
    "AlphaOrder",
    "SampledFunction",
    "c_alpha",
    "marchaud_derivative",
    "marchaud_derivative_values",
    "rl_integral_left",
    "rl_integral_left_values",
    "rl_integral_right",
    "rl_integral_right_values",
    "tail_term",
]


@dataclass(frozen=True)
class AlphaOrder:
    """Fractional order in (0, 1)."""

    value: float

    def __post_init__(self) -> None:
        if not (0.0 < self.value < 1.0):
            raise ValueError(f"fractional order must lie in (0, 1), got {self.value}")


@dataclass(frozen=True)
class SampledFunction:
    """Scalar function sampled on a uniform grid, with constant left extension."""

    grid: TimeGrid
    values: np.ndarray
    left_extension: float = 0.0

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"values must have length {self.grid.n_points}, got shape {v.shape}"
            )
        object.__setattr__(self, "values", v)


def c_alpha(a: float) -> float:
    """Marchaud normalization a / Gamma(1 - a), the left inverse convention."""
    return a / _gamma(1.0 - a)


@lru_cache(maxsize=32)
def _marchaud_weights(n_points: int, dt: float, a: float):
    """Product-integration weights for the interior Marchaud integral.

    For f piecewise linear on cells of width dt, the integral

        integral_0^{t_k} (f(t_k) - f(t_k - r)) r^{-1-a} dr

    equals  f_k * csum_k - sum_{j<=k} om_{k-j} f_j + q_{k-1} (f_k - f_0)
    with the returned arrays (om, q, csum).  The final summand is the
    exact contribution of the last cell [t_{k-1}, t_k], where the kernel
    moment would otherwise diverge; the convolution term is evaluated by
    FFT by the caller.
    """
    j = np.arange(n_points, dtype=float)
    r0 = j * dt
    r1 = (j + 1.0) * dt
    # m0_j = integral over cell j of r^{-1-a} dr, m1_j = integral of r^{-a}
    m0 = np.empty(n_points)
    m0[0] = 0.0  # first cell handled through q
    m0[1:] = (r0[1:] ** -a - r1[1:] ** -a) / a
    m1 = (r1 ** (1.0 - a) - r0 ** (1.0 - a)) / (1.0 - a)
    q = np.empty(n_points)
    q[0] = m1[0] / dt
    q[1:] = (m1[1:] - r0[1:] * m0[1:]) / dt
    om = np.zeros(n_points)
    om[1:] = (m0[1:] - q[1:]) + q[:-1]
    csum = np.concatenate([[0.0], np.cumsum(om)[:-1]])
    return om, q, csum


def _fft_causal_convolution(f: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    n = f.shape[-1]
    size = 1
    while size < 2 * n:
        size *= 2
    out = np.fft.irfft(
        np.fft.rfft(f, size, axis=-1) * np.fft.rfft(kernel, size), size, axis=-1
    )
    return out[..., :n]


def marchaud_derivative_values(
    f: np.ndarray, dt: float, a: float, f_left: float | np.ndarray = None
) -> np.ndarray:
    """Marchaud derivative of sampled values (batched over leading axes).

    ``f_left`` is the constant extension for t <= 0; by default the value
    at t = 0 is used (the "frozen at the start" convention).
    """
    f = np.asarray(f, dtype=float)
    squeeze = f.ndim == 1
    if squeeze:
        f = f[None, :]
    n_points = f.shape[-1]
    if f_left is None:
        f_left = f[..., 0]
    f_left = np.broadcast_to(np.asarray(f_left, dtype=float), f.shape[:-1])

    om, q, csum = _marchaud_weights(n_points, dt, a)
    # convolve the recentred path so that constants are annihilated exactly
    g = f - f[..., :1]
    conv = _fft_causal_convolution(g, om)
    interior = g * csum - conv
    q_prev = np.concatenate([[0.0], q[:-1]])
    last_cell = q_prev * g
    t = np.arange(n_points) * dt
    tail = np.zeros_like(f)
    tail[..., 1:] = (f[..., 1:] - f_left[..., None]) * (t[1:] ** -a) / a

    out = c_alpha(a) * (interior + last_cell + tail)
    out[..., 0] = 0.0
    return out[0] if squeeze else out


def marchaud_derivative(f: SampledFunction, a: AlphaOrder) -> SampledFunction:
    """Marchaud derivative D^a_+ of a sampled function with constant left extension."""
    vals = marchaud_derivative_values(
        f.values, f.grid.step, a.value, f_left=f.left_extension
    )
    return SampledFunction(f.grid, vals, left_extension=0.0)


def tail_term(f_t: np.ndarray, f_left: np.ndarray, t: float, a: float) -> np.ndarray:
    """Exact Marchaud tail  c_a * (f_t - f_left) * t^{-a} / a  over [t, inf).

    Returns zero at t = 0 by the grid-origin convention.
    """
    f_t = np.asarray(f_t, dtype=float)
    f_left = np.asarray(f_left, dtype=float)
    if t == 0.0:
        return np.zeros_like(f_t)
    return c_alpha(a) * (f_t - f_left) * t ** (-a) / a


@lru_cache(maxsize=32)
def _rl_weights(n_points: int, a: float):
    # Product-trapezoid weights (exact for piecewise-linear data):
    # I^a f(t_k) = dt^a / Gamma(a+2) * [ w0_k f_0 + sum_{j>=1} core_{k-j} f_j ]
    j = np.arange(n_points, dtype=float)
    core = np.zeros(n_points)
    core[0] = 1.0
    jj = j[1:]
    core[1:] = (jj + 1.0) ** (a + 1.0) - 2.0 * jj ** (a + 1.0) + (jj - 1.0) ** (a + 1.0)
    w0 = np.zeros(n_points)
    k = j[1:]
    w0[1:] = (k - 1.0) ** (a + 1.0) - k ** a * (k - a - 1.0)
    return core, w0


def rl_integral_left_values(f: np.ndarray, dt: float, a: float) -> np.ndarray:
    """Left Riemann-Liouville integral I^a_{0+} f on the grid (a in (0, 1])."""
    if not (0.0 < a <= 1.0):
        raise ValueError(f"integral order must lie in (0, 1], got {a}")
    f = np.asarray(f, dtype=float)
    squeeze = f.ndim == 1
    if squeeze:
        f = f[None, :]
    n_points = f.shape[-1]
    core, w0 = _rl_weights(n_points, a)
    conv = _fft_causal_convolution(f, core)
    out = (conv + (w0 - core) * f[..., :1]) * dt ** a / _gamma(a + 2.0)
    out[..., 0] = 0.0
    return out[0] if squeeze else out


def rl_integral_left(f: SampledFunction, a: AlphaOrder) -> SampledFunction:
    vals = rl_integral_left_values(f.values, f.grid.step, a.value)
    return SampledFunction(f.grid, vals, left_extension=0.0)


def rl_integral_right_values(f: np.ndarray, dt: float, a: float) -> np.ndarray:
    """Right Riemann-Liouville integral I^a_{tau-} f, by reflection of the left rule."""
    f = np.asarray(f, dtype=float)
    return rl_integral_left_values(f[..., ::-1], dt, a)[..., ::-1]


def rl_integral_right(f: SampledFunction, a: AlphaOrder) -> SampledFunction:
    vals = rl_integral_right_values(f.values, f.grid.step, a.value)
    return SampledFunction(f.grid, vals, left_extension=0.0)
