import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from abcwalk.catalog import load_catalog
from abcwalk.escape import (
    EstimateError,
    fit_displacement_exponent,
    fit_tail_beta,
    lil_statistic,
    stat_matrix,
    tail_profile,
)
from abcwalk.walk import WalkConfig, run_ensemble

NS = [2**j for j in range(4, 15)]


def test_exact_power_laws():
    ns = np.array(NS, dtype=float)
    assert fit_displacement_exponent(NS, ns**0.5).alpha_hat == pytest.approx(0.5, abs=1e-12)
    fit = fit_displacement_exponent(NS, 7 * ns**0.75)
    assert fit.alpha_hat == pytest.approx(0.75, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)


def test_bootstrap_interval_contains_estimate():
    rng = np.random.default_rng(3)
    ns = np.array(NS, dtype=float)
    v = np.abs(rng.normal(size=(200, len(NS)))) * np.sqrt(ns)
    fit = fit_displacement_exponent(NS, v, n_boot=300)
    assert fit.ci_low <= fit.alpha_hat <= fit.ci_high
    assert fit.ci_high - fit.ci_low < 0.1
    assert abs(fit.alpha_hat - 0.5) < 0.05


def test_exponent_errors():
    with pytest.raises(EstimateError):
        fit_displacement_exponent(NS[:4], [1.0] * 4)
    bad = np.ones(len(NS))
    bad[3] = 0.0
    with pytest.raises(EstimateError):
        fit_displacement_exponent(NS, bad)
    with pytest.raises(EstimateError):
        fit_displacement_exponent(NS, -np.ones(len(NS)))


def test_tail_needs_trials():
    with pytest.raises(EstimateError):
        tail_profile(NS, np.ones((99, len(NS))))


def test_constant_statistic_tail():
    ns = np.array(NS, dtype=float)
    v = np.tile(np.sqrt(ns), (150, 1))
    rep = tail_profile(NS, v)
    assert rep.delta_hat == 1.0
    assert 0.95 <= rep.gamma_hat < 1.0
    # step function: all mass strictly above every grid point below 1, none at 1
    assert set(np.unique(rep.exceedance)) <= {0.0, 1.0}


def _tail_matrix(samples):
    # put the samples at the last checkpoint, scaled by n^(1/2)
    n = NS[-1]
    v = np.zeros((len(samples), len(NS)))
    v[:, -1] = np.asarray(samples) * math.sqrt(n)
    return v


def test_gaussian_tail_oracle():
    # the x^-1 prefactor of the gaussian tail pulls the fitted shape to about 1.65,
    # so a large sample is needed to keep sampling spread well inside the band
    rng = np.random.default_rng(0)
    rep = tail_profile(NS, _tail_matrix(np.abs(rng.normal(size=200000))))
    assert 1.6 <= rep.beta_hat <= 2.4


@pytest.mark.parametrize("draw, beta, tol", [
    (lambda r, k: r.rayleigh(size=k), 2.0, 0.2),
    (lambda r, k: r.exponential(size=k), 1.0, 0.1),
    (lambda r, k: r.weibull(3.0, size=k), 3.0, 0.3),
])
def test_tail_shape_oracles(draw, beta, tol):
    # exact stretched-exponential tails: the MLE recovers the shape
    rng = np.random.default_rng(7)
    b, _, _ = fit_tail_beta(draw(rng, 20000))
    assert abs(b - beta) <= tol


def test_tail_fit_degenerate():
    assert all(math.isnan(x) for x in fit_tail_beta(np.ones(50)))


@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=100, max_size=150))
def test_exceedance_monotone_and_bounded(xs):
    rep = tail_profile(NS, _tail_matrix(xs))
    e = rep.exceedance
    assert np.all((0 <= e) & (e <= 1))
    assert np.all(np.diff(e) <= 0)


def test_lil_examples():
    ns = np.array(NS, dtype=float)
    assert np.all(lil_statistic(NS, np.zeros((5, len(NS)))).sups == 0)
    exact = np.tile(np.sqrt(ns * np.log(np.log(ns))), (4, 1))
    assert np.allclose(lil_statistic(NS, exact).sups, 1.0)
    with pytest.raises(EstimateError):
        lil_statistic([4, 8], np.ones((2, 2)))


def test_lil_ignores_small_checkpoints():
    v = np.zeros((1, 3))
    v[0, 0] = 1e6
    assert lil_statistic([8, 16, 32], v).sups[0] == 0


@given(st.floats(0.01, 100), st.integers(0, 1000))
def test_scale_equivariance(c, seed):
    rng = np.random.default_rng(seed)
    v = np.abs(rng.normal(size=(20, len(NS)))) * np.sqrt(NS) + 1
    a = fit_displacement_exponent(NS, v, n_boot=0)
    b = fit_displacement_exponent(NS, c * v, n_boot=0)
    assert b.alpha_hat == pytest.approx(a.alpha_hat, abs=1e-9)
    assert np.allclose(lil_statistic(NS, c * v).sups, c * lil_statistic(NS, v).sups)


def test_stat_matrix_sums_and_errors():
    cat = load_catalog()
    ens = run_ensemble(WalkConfig(cat["sol"].spec, 64, trials=3, mode="none"))
    s = stat_matrix(ens, "normP + d_P")
    assert np.array_equal(s, ens.column("normP").astype(float) + ens.column("d_P").astype(float))
    with pytest.raises(EstimateError):
        stat_matrix(ens, "nope")
    with pytest.raises(EstimateError):
        stat_matrix(ens, "U+")


@pytest.fixture(scope="module")
def small_ensembles():
    cat = load_catalog()
    sol = cat["sol"]
    cfg = dict(n_steps=2**11, trials=60, seed=4)
    return {
        "edp": run_ensemble(WalkConfig(sol.spec, mode="full_edp", reducer=sol.reducer, **cfg)),
        "none": run_ensemble(WalkConfig(sol.spec, mode="none", **cfg)),
    }


def _alpha(ens, stat):
    return fit_displacement_exponent(ens.checkpoints, stat_matrix(ens, stat), n_boot=0).alpha_hat


def test_monotone_coupling(small_ensembles):
    for ens in small_ensembles.values():
        assert np.all(ens.column("U") >= ens.column("L"))
        assert _alpha(ens, "U") >= _alpha(ens, "L") - 0.05


def test_contrast_gap(small_ensembles):
    gap = _alpha(small_ensembles["none"], "normP+d_P") - _alpha(small_ensembles["edp"], "U")
    assert gap >= 0.1
