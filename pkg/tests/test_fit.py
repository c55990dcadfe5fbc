import math

import numpy as np
import pytest

from lerwlab.fit import loglog_fit, ols

from oracles import power_law_samples


def test_exact_power_law_recovered():
    pts = [(n, 2.5 * n**-0.8) for n in (2, 4, 8, 16, 32)]
    fit = loglog_fit(pts)
    assert fit.slope == pytest.approx(-0.8, abs=1e-12)
    assert math.exp(fit.intercept) == pytest.approx(2.5, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-10)


def test_two_points_interpolate_with_nan_stderr():
    fit = loglog_fit([(2, 8), (4, 64)])
    assert fit.slope == pytest.approx(3.0)
    assert math.isnan(fit.slope_stderr)


def test_validation():
    with pytest.raises(ValueError):
        loglog_fit([(2, 4)])
    with pytest.raises(ValueError):
        loglog_fit([(2, -1), (3, 4)])
    with pytest.raises(ValueError):
        loglog_fit([(0, 1), (3, 4)])


def test_noisy_recovery_within_tolerance():
    rng = np.random.default_rng(7)
    ns = [8, 16, 32, 64, 128, 256]
    pts = power_law_samples(rng, slope=1.25, intercept=0.4, ns=ns, noise=0.01)
    fit = loglog_fit(pts)
    assert fit.slope == pytest.approx(1.25, abs=0.05)
    assert 0.0 < fit.slope_stderr < 0.05
    assert fit.r_squared > 0.99


def test_ols_residual_orthogonality_and_stderr():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(200, 2))
    design = np.column_stack([np.ones(200), x])
    y = 1.0 + 2.0 * x[:, 0] - 0.5 * x[:, 1] + 0.1 * rng.normal(size=200)
    res = ols(design, y)
    assert res.coefficients == pytest.approx([1.0, 2.0, -0.5], abs=0.05)
    resid = y - design @ res.coefficients
    assert np.abs(design.T @ resid).max() < 1e-9
    assert (res.stderrs > 0).all() and (res.stderrs < 0.05).all()
    assert res.r_squared > 0.99


def test_ols_underdetermined_rejected():
    with pytest.raises(ValueError):
        ols(np.ones((2, 3)), np.zeros(2))
