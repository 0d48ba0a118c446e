import numpy as np
import pytest

from twosource.errors import NonIdentifiable, ValidationError
from twosource.fisher import Measurement, SourceConfig
from twosource.montecarlo import (Counts, ExperimentConfig, LikelihoodModel, covariance_study,
                                  mle, sample)
from twosource.povm import from_angles

PI = np.pi


@pytest.fixture(scope="module")
def meas(gauss_wide):
    return Measurement(gauss_wide, from_angles(PI / 4, PI / 6))


@pytest.fixture(scope="module")
def model(meas):
    return LikelihoodModel(meas)


def test_sample_degenerate():
    assert sample([0.0, 1.0, 0.0], 1000, 1) == Counts(0, 1000, 0)


def test_sample_deterministic():
    assert sample([0.2, 0.3, 0.5], 5000, 7) == sample([0.2, 0.3, 0.5], 5000, 7)
    assert sample([0.2, 0.3, 0.5], 5000, 7) != sample([0.2, 0.3, 0.5], 5000, 8)


def test_sample_frequencies():
    p = np.array([0.25, 0.5, 0.25])
    n = 10**6
    c = np.array(sample(p, n, 42))
    assert c.sum() == n
    assert np.all(np.abs(c / n - p) <= 5 * np.sqrt(p * (1 - p) / n))


def test_mle_expected_counts(meas, model):
    truth = SourceConfig(0.0, 0.5)
    n = 10**6
    counts = Counts(*np.rint(n * meas.probs_at(truth)).astype(int))
    r = mle(counts, model)
    assert r.converged
    assert abs(r.s0_hat_ml - truth.s0) < 2e-3
    assert abs(r.s_hat_ml - truth.s) < 2e-3


def test_mle_no_information(meas, model):
    counts = Counts(0, 10**4, 0)
    try:
        r = mle(counts, model)
    except NonIdentifiable:
        return
    assert not r.converged


def test_mle_flat_surface_raises(model):
    with pytest.raises(NonIdentifiable):
        mle(Counts(0, 0, 0), model)


def test_mle_deterministic(meas, model):
    p = meas.probs(0.0, 0.5)
    a = mle(sample(p, 10**5, 42), model)
    b = mle(sample(p, 10**5, 42), model)
    assert a == b


def test_single_repetition_is_flagged(meas):
    res = covariance_study(ExperimentConfig(10**4, SourceConfig(0.0, 0.5), meas, seed=3,
                                            repetitions=1))
    assert res.empirical_cov is None
    assert res.variance_ratios is None
    assert res.estimates.shape == (1, 2)


def test_config_validation(meas):
    with pytest.raises(ValidationError):
        ExperimentConfig(10, SourceConfig(0.0, 0.5), meas)


def test_consistency(meas, model):
    p = meas.probs(0.0, 0.5)
    truth = np.array([0.0, 0.5])

    def median_error(n):
        errs = []
        for seed in range(50):
            r = mle(sample(p, n, seed), model)
            errs.append(np.linalg.norm([r.s0_hat_ml, r.s_hat_ml] - truth))
        return np.median(errs)

    assert median_error(10**6) < median_error(10**4)


def test_study_is_deterministic(meas):
    cfg = ExperimentConfig(10**5, SourceConfig(0.0, 0.5), meas, seed=11, repetitions=20)
    a, b = covariance_study(cfg), covariance_study(cfg)
    np.testing.assert_array_equal(a.estimates, b.estimates)
    np.testing.assert_array_equal(a.empirical_cov, b.empirical_cov)


@pytest.mark.slow
def test_small_separation_respects_crb(meas):
    # ML is biased near s = 0 and need not attain the bound; only the bound direction is checked
    res = covariance_study(ExperimentConfig(10**6, SourceConfig(0.0, 0.01), meas, seed=5,
                                            repetitions=100))
    se = res.variance_ratio_stderr
    assert np.all(res.variance_ratios >= 1 - 3 * se)
