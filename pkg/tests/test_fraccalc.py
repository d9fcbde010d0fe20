"""Fractional-calculus operator tests against closed-form oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma as G

from fraclan.fraccalc import (
    AlphaOrder,
    SampledFunction,
    c_alpha,
    marchaud_derivative,
    marchaud_derivative_values,
    rl_integral_left_values,
    rl_integral_right_values,
    tail_term,
)
from fraclan.grids import TimeGrid


def test_c_alpha_normalization():
    # a / Gamma(1 - a); spot values
    assert c_alpha(0.5) == pytest.approx(0.5 / G(0.5))
    assert c_alpha(0.2) == pytest.approx(0.2 / G(0.8))


@pytest.mark.parametrize("a", [0.1, 0.2, 0.45])
@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
def test_marchaud_power_law_oracle(a, p):
    """D^a t^p = Gamma(p+1)/Gamma(p+1-a) t^{p-a} (with zero left extension)."""
    n = 4096
    t = np.linspace(0.0, 1.0, n + 1)
    out = marchaud_derivative_values(t**p, 1.0 / n, a, f_left=0.0)
    exact = G(p + 1.0) / G(p + 1.0 - a) * t ** (p - a)
    err = np.max(np.abs(out - exact)[n // 8 :])
    print(f"a={a} p={p}: max err {err:.3e}")
    assert err < 5e-4


def test_marchaud_of_constant_is_zero():
    out = marchaud_derivative_values(np.full(257, 3.7), 0.01, 0.2, f_left=3.7)
    # cancellation between the convolution and its exact complement leaves
    # only rounding noise
    assert np.max(np.abs(out)) < 1e-11


def test_roundtrip_derivative_of_integral():
    # left-inverse property on a smooth function
    n = 4096
    t = np.linspace(0.0, 1.0, n + 1)
    f = np.sin(t)
    for a in (0.1, 0.25, 0.45):
        back = marchaud_derivative_values(
            rl_integral_left_values(f, 1.0 / n, a), 1.0 / n, a, f_left=0.0
        )
        err = np.max(np.abs(back - f)[1:])
        print(f"roundtrip a={a}: {err:.3e}")
        assert err <= 1e-3


def test_roundtrip_error_halves_on_refinement():
    a = 0.25
    errs = []
    for n in (2048, 4096, 8192):
        t = np.linspace(0.0, 1.0, n + 1)
        f = np.sin(t)
        back = marchaud_derivative_values(
            rl_integral_left_values(f, 1.0 / n, a), 1.0 / n, a, f_left=0.0
        )
        errs.append(np.max(np.abs(back - f)[1:]))
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    print("refinement ratios:", ratios)
    # first order: doubling n should (at least nearly) halve the error
    assert all(r >= 1.95 for r in ratios)


def test_rl_integral_power_oracle():
    # I^a t^p = Gamma(p+1)/Gamma(p+1+a) t^{p+a}
    n, a, p = 2048, 0.3, 2.0
    t = np.linspace(0.0, 1.0, n + 1)
    out = rl_integral_left_values(t**p, 1.0 / n, a)
    exact = G(p + 1.0) / G(p + 1.0 + a) * t ** (p + a)
    assert np.max(np.abs(out - exact)) < 1e-6


def test_right_integral_is_reflection():
    n = 512
    rng = np.random.default_rng(5)
    f = rng.standard_normal(n + 1)
    left = rl_integral_left_values(f[::-1], 1.0 / n, 0.4)[::-1]
    right = rl_integral_right_values(f, 1.0 / n, 0.4)
    np.testing.assert_array_equal(left, right)


def test_batched_matches_loop():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((7, 129))
    batched = marchaud_derivative_values(f, 0.01, 0.2)
    rows = np.stack([marchaud_derivative_values(f[i], 0.01, 0.2) for i in range(7)])
    np.testing.assert_allclose(batched, rows, rtol=0, atol=1e-14)


def test_tail_term_closed_form():
    out = tail_term(np.array([2.0]), np.array([0.5]), t=3.0, a=0.2)
    assert out[0] == pytest.approx(c_alpha(0.2) * 1.5 * 3.0**-0.2 / 0.2)
    assert tail_term(np.array([2.0]), np.array([0.5]), t=0.0, a=0.2)[0] == 0.0


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=8, max_size=40),
    st.lists(st.floats(-5, 5), min_size=8, max_size=40),
    st.floats(0.05, 0.9),
)
def test_marchaud_linearity(xs, ys, a):
    n = min(len(xs), len(ys))
    f = np.asarray(xs[:n])
    g = np.asarray(ys[:n])
    lhs = marchaud_derivative_values(2.0 * f - 3.0 * g, 0.1, a, f_left=0.0)
    rhs = 2.0 * marchaud_derivative_values(f, 0.1, a, f_left=0.0) - 3.0 * marchaud_derivative_values(
        g, 0.1, a, f_left=0.0
    )
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.max(np.abs(rhs))))


def test_sampled_function_wrappers():
    grid = TimeGrid(horizon=1.0, n_steps=64)
    f = SampledFunction(grid, np.sin(grid.times), left_extension=0.0)
    d = marchaud_derivative(f, AlphaOrder(0.2))
    assert d.grid is grid and d.values[0] == 0.0
    with pytest.raises(ValueError):
        SampledFunction(grid, np.zeros(10))
    with pytest.raises(ValueError):
        AlphaOrder(1.0)
    with pytest.raises(ValueError):
        rl_integral_left_values(np.zeros(5), 0.1, 1.5)
