"""Drift catalogue, Euler scheme, stationary burn-in and ergodic averaging."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BlowUpError, DissipativityViolation
from .fbm import CoupledDriver
from .grids import TimeGrid

try:
    from . import _core
except ImportError:  # compiled extension unavailable; pure-Python kernels take over
    _core = None

__all__ = [
    "DriftModel",
    "SdeConfig",
    "SolutionPath",
    "fou_drift",
    "tanh_drift",
    "tanh_scale_drift",
    "drift_by_name",
    "euler_solve",
    "euler_solve_shifted",
    "euler_solve_batch",
    "check_dissipativity",
    "stationary_path",
    "ergodic_average",
    "default_burn_in",
    "OVERFLOW_CAP",
    "core_backend",
]

OVERFLOW_CAP = 1e8


@dataclass(frozen=True)
class DriftModel:
    """Parametric drift b(x; theta) with its Jacobians and declared constants.

    ``b`` maps (x, theta) -> R^d with x of shape (..., d); ``bhat`` is the
    theta-Jacobian with output shape (..., d, q); ``bx`` the x-Jacobian with
    output shape (..., d, d).  ``dissipativity`` returns the declared
    one-sided Lipschitz constant alpha(theta) > 0.
    """

    name: str
    d: int
    q: int
    b: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bhat: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bx: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dissipativity: Callable[[np.ndarray], float]
    growth_constant: float = 1.0
    validate_theta: Callable[[np.ndarray], None] = field(default=lambda theta: None)

    def check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.q,):
            raise ValueError(f"{self.name}: theta must have shape ({self.q},)")
        self.validate_theta(theta)
        return theta


def fou_drift(d: int = 1) -> DriftModel:
    """Fractional Ornstein-Uhlenbeck drift b(x; theta) = -theta x (diagonal in d > 1)."""

    def b(x, theta):
        return -theta[0] * x

    def bhat(x, theta):
        return -x[..., :, None]

    def bx(x, theta):
        eye = np.eye(d)
        return np.broadcast_to(-theta[0] * eye, x.shape + (d,))

    def validate(theta):
        if theta[0] <= 0:
            raise ValueError(f"fou drift requires theta > 0, got {theta[0]}")

    return DriftModel(
        name="fou",
        d=d,
        q=1,
        b=b,
        bhat=bhat,
        bx=bx,
        dissipativity=lambda theta: float(theta[0]),
        validate_theta=validate,
    )


def tanh_drift(d: int = 1) -> DriftModel:
    """b(x; theta1, theta2) = -theta1 x + theta2 tanh(x), componentwise.

    Dissipative with alpha = theta1 - theta2 (since 0 < d/dx tanh <= 1);
    construction requires theta1 > theta2 > 0.
    """

    def b(x, theta):
        return -theta[0] * x + theta[1] * np.tanh(x)

    def bhat(x, theta):
        return np.stack([-x, np.tanh(x)], axis=-1)

    def bx(x, theta):
        diag = -theta[0] + theta[1] / np.cosh(x) ** 2
        out = np.zeros(x.shape + (d,))
        idx = np.arange(d)
        out[..., idx, idx] = diag
        return out

    def validate(theta):
        if not (theta[0] > theta[1] > 0):
            raise ValueError(
                f"tanh drift requires theta1 > theta2 > 0, got {tuple(theta)}"
            )

    return DriftModel(
        name="tanh",
        d=d,
        q=2,
        b=b,
        bhat=bhat,
        bx=bx,
        dissipativity=lambda theta: float(theta[0] - theta[1]),
        validate_theta=validate,
    )


def tanh_scale_drift(d: int = 1) -> DriftModel:
    """b(x; theta1, theta2) = -theta1 x + tanh(theta2 x), componentwise.

    Unlike the catalogue pair above this drift is genuinely nonlinear in
    theta, so the Taylor remainder terms of the likelihood-ratio
    decomposition are nonzero.  Dissipative with alpha = theta1 - theta2
    for theta1 > theta2 > 0.
    """

    def b(x, theta):
        return -theta[0] * x + np.tanh(theta[1] * x)

    def bhat(x, theta):
        return np.stack([-x, x / np.cosh(theta[1] * x) ** 2], axis=-1)

    def bx(x, theta):
        diag = -theta[0] + theta[1] / np.cosh(theta[1] * x) ** 2
        out = np.zeros(x.shape + (d,))
        idx = np.arange(d)
        out[..., idx, idx] = diag
        return out

    def validate(theta):
        if not (theta[0] > theta[1] > 0):
            raise ValueError(
                f"tanh_scale drift requires theta1 > theta2 > 0, got {tuple(theta)}"
            )

    return DriftModel(
        name="tanh_scale",
        d=d,
        q=2,
        b=b,
        bhat=bhat,
        bx=bx,
        dissipativity=lambda theta: float(theta[0] - theta[1]),
        validate_theta=validate,
    )


_CATALOGUE = {"fou": fou_drift, "tanh": tanh_drift, "tanh_scale": tanh_scale_drift}


def drift_by_name(name: str, d: int = 1) -> DriftModel:
    try:
        return _CATALOGUE[name](d)
    except KeyError:
        raise ValueError(f"unknown drift '{name}' (choose from {sorted(_CATALOGUE)})")


@dataclass(frozen=True)
class SdeConfig:
    y0: np.ndarray
    sigma: np.ndarray
    theta: np.ndarray
    grid: TimeGrid
    condition_cap: float = 1e8

    def __post_init__(self) -> None:
        y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if sigma.shape[0] != sigma.shape[1] or sigma.shape[0] != y0.shape[0]:
            raise ValueError("sigma must be a d x d matrix matching y0")
        if np.linalg.cond(sigma) > self.condition_cap:
            raise ValueError("sigma condition number exceeds the configured cap")
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "theta", theta)

    @property
    def d(self) -> int:
        return self.y0.shape[0]


@dataclass(frozen=True)
class SolutionPath:
    grid: TimeGrid
    y: np.ndarray  # (n_points, d)
    driver: CoupledDriver | None = None


def core_backend() -> str:
    """Which Euler backend is active: 'cython' or 'python'."""
    return "python" if _core is None else "cython"


def _euler_python(out: np.ndarray, dbs: np.ndarray, drift: DriftModel,
                  theta: np.ndarray, dt: float, cap: float) -> int:
    # out: (m, n+1, d) with out[:, 0] preset; dbs: (m, n, d) sigma-scaled increments.
    y = out[:, 0, :].copy()
    n = dbs.shape[1]
    for k in range(n):
        y = y + drift.b(y, theta) * dt + dbs[:, k, :]
        if np.any(np.abs(y) > cap):
            return k
        out[:, k + 1, :] = y
    return -1


def euler_solve_batch(
    cfg: SdeConfig,
    drift: DriftModel,
    db: np.ndarray,
    use_core: bool | None = None,
) -> np.ndarray:
    """Euler recursion for a batch of replicas.

    ``db`` holds raw driver increments of shape (m, n) for d = 1 or
    (m, n, d); returns paths of shape (m, n+1, d).  The compiled kernel
    is used automatically for the scalar catalogue drifts.
    """
    theta = drift.check_theta(cfg.theta)
    d = cfg.d
    if drift.d != d:
        raise ValueError("drift dimension does not match config")
    db = np.asarray(db, dtype=float)
    if db.ndim == 2:
        db = db[:, :, None]
    m, n, _ = db.shape
    dbs = db @ cfg.sigma.T
    out = np.empty((m, n + 1, d))
    out[:, 0, :] = cfg.y0
    dt = cfg.grid.step

    if use_core is None:
        use_core = _core is not None
    bad = -1
    if use_core and _core is not None and d == 1 and drift.name in _CATALOGUE:
        flat = np.ascontiguousarray(out[:, :, 0])
        dflat = np.ascontiguousarray(dbs[:, :, 0])
        if drift.name == "fou":
            bad = _core.euler_fou(flat, dflat, theta[0], dt, OVERFLOW_CAP)
        elif drift.name == "tanh":
            bad = _core.euler_tanh(flat, dflat, theta[0], theta[1], dt, OVERFLOW_CAP)
        else:
            bad = _core.euler_tanh_scale(flat, dflat, theta[0], theta[1], dt, OVERFLOW_CAP)
        out[:, :, 0] = flat
    else:
        bad = _euler_python(out, dbs, drift, theta, dt, OVERFLOW_CAP)
    if bad >= 0:
        raise BlowUpError(
            f"Euler iterate exceeded {OVERFLOW_CAP:g} at step {bad} "
            f"(step size {dt:g} too large for drift '{drift.name}'?)"
        )
    return out


def euler_solve(cfg: SdeConfig, drift: DriftModel, driver: CoupledDriver) -> SolutionPath:
    """Y_{k+1} = Y_k + b(Y_k; theta) dt + sigma (B_{k+1} - B_k); deterministic given the driver."""
    if driver.grid.n_steps != cfg.grid.n_steps:
        raise ValueError("driver grid does not match config grid")
    b = np.atleast_2d(driver.b)
    db = np.diff(b, axis=-1)
    if cfg.d == 1 and db.ndim == 2:
        y = euler_solve_batch(cfg, drift, db)
    else:
        y = euler_solve_batch(cfg, drift, db.reshape(1, -1, cfg.d))
    return SolutionPath(cfg.grid, y[0], driver)


def euler_solve_shifted(
    cfg: SdeConfig, drift: DriftModel, driver: CoupledDriver, h_path: np.ndarray
) -> SolutionPath:
    """Euler recursion driven by the increments of B + h (h_0 = 0)."""
    h_path = np.asarray(h_path, dtype=float)
    if abs(float(np.atleast_1d(h_path[..., 0])[0])) > 0:
        raise ValueError("shift path must start at 0")
    b = np.atleast_2d(driver.b) + np.atleast_2d(h_path)
    db = np.diff(b, axis=-1)
    y = euler_solve_batch(cfg, drift, db.reshape(1, -1, cfg.d))
    return SolutionPath(cfg.grid, y[0], driver)


def check_dissipativity(
    drift: DriftModel,
    theta: np.ndarray,
    sample_box: float,
    n_pairs: int,
    rng: np.random.Generator,
    tolerance: float = 1e-6,
) -> float:
    """Audit <b(x)-b(y), x-y> <= -alpha |x-y|^2 on random point pairs.

    Returns the empirical minimum of -<b(x)-b(y), x-y>/|x-y|^2; raises
    :class:`DissipativityViolation` naming the worst pair when the
    estimate falls below the declared constant minus ``tolerance``.
    """
    theta = drift.check_theta(theta)
    x = rng.uniform(-sample_box, sample_box, size=(n_pairs, drift.d))
    y = rng.uniform(-sample_box, sample_box, size=(n_pairs, drift.d))
    keep = np.linalg.norm(x - y, axis=1) > 1e-12
    x, y = x[keep], y[keep]
    num = -np.sum((drift.b(x, theta) - drift.b(y, theta)) * (x - y), axis=1)
    den = np.sum((x - y) ** 2, axis=1)
    ratios = num / den
    worst = int(np.argmin(ratios))
    estimate = float(ratios[worst])
    declared = drift.dissipativity(theta)
    if estimate < declared - tolerance:
        raise DissipativityViolation(
            f"drift '{drift.name}' violates dissipativity: ratio {estimate:.6g} "
            f"< declared {declared:.6g} at x={x[worst]}, y={y[worst]}"
        )
    return estimate


def default_burn_in(drift: DriftModel, theta: np.ndarray) -> float:
    """Burn-in horizon 20 / alpha, long enough that e^{-alpha t} bias is negligible."""
    return 20.0 / drift.dissipativity(drift.check_theta(theta))


def stationary_path(
    cfg: SdeConfig,
    drift: DriftModel,
    driver_extended: CoupledDriver,
    burn_in: float,
) -> SolutionPath:
    """Solve from -burn_in and return the restriction to [0, tau].

    Exponential forgetting of the initial condition makes the output an
    approximation of the stationary solution with bias O(e^{-alpha burn_in}).
    """
    n_burn = int(round(burn_in / cfg.grid.step))
    if driver_extended.grid.n_steps != cfg.grid.n_steps + n_burn:
        raise ValueError("extended driver must cover [-burn_in, tau]")
    full_cfg = SdeConfig(cfg.y0, cfg.sigma, cfg.theta, driver_extended.grid)
    full = euler_solve(full_cfg, drift, driver_extended)
    return SolutionPath(cfg.grid, full.y[n_burn:], driver_extended)


def ergodic_average(f: Callable[[np.ndarray], np.ndarray], path: SolutionPath) -> float:
    """Trapezoidal time-average (1/tau) integral_0^tau f(Y_t) dt."""
    values = np.asarray(f(path.y), dtype=float)
    return float(np.trapezoid(values, dx=path.grid.step) / path.grid.horizon)
