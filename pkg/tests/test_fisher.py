import numpy as np
import pytest
from scipy.integrate import quad

from twosource.basis import build_derivative_basis, hg_analytic
from twosource.errors import StepTooLarge, TruncationTooSmall, ValidationError, ZeroQfi
from twosource.fisher import (Measurement, SourceConfig, cfi_matrix,
                              cfi_smallsep_closedform, direct_imaging_cfi, fisher_report,
                              outcome_probs, overlap, qfi_centroid_closedform,
                              qfi_centroid_exact, qfi_oracle, regrets)
from twosource.povm import EpsilonPair, PovmCoeffs, epsilons, from_angles
from twosource.psf import Moments

PI = np.pi
BALANCED = from_angles(PI / 4, PI / 6)


def test_source_config():
    src = SourceConfig(0.3, 0.2, 0.25)
    assert src.x0 == pytest.approx(0.05)
    assert src.delta_plus == pytest.approx(0.15)
    assert src.delta_minus == pytest.approx(-0.05)
    assert src.r == pytest.approx(0.25 * (0.2 / 0.05) ** 2)
    assert SourceConfig(0.0, 0.2).r == float("inf")
    with pytest.raises(ValidationError):
        SourceConfig(0.0, -1.0)


def test_probs_coincident_sources(gauss, basis3):
    p = outcome_probs(gauss, basis3, BALANCED, SourceConfig(0.0, 0.0))
    np.testing.assert_allclose(p, [0.0, 0.75, 0.25], atol=1e-14)


def _p1_quadrature(alpha, s):
    # independent path: analytic HG modes and scipy quadrature
    f = lambda x: np.cos(alpha) * hg_analytic(1, 1, x) + np.sin(alpha) * hg_analytic(2, 1, x)  # noqa: E731
    psi = lambda x, d: (2 * np.pi) ** -0.25 * np.exp(-(x - d) ** 2 / 4)  # noqa: E731
    return 0.5 * sum(quad(lambda x: f(x) * psi(x, d), -np.inf, np.inf, epsabs=1e-15)[0] ** 2
                     for d in (s / 2, -s / 2))


@pytest.mark.parametrize("beta", [PI / 12, PI / 3])
def test_p1_against_quadrature(gauss, basis3, beta):
    q = 0.4**2 / 16
    law = np.exp(-q) * (0.5 * q + 0.5 * q * q / 2)
    oracle = _p1_quadrature(PI / 4, 0.4)
    assert oracle == pytest.approx(law, rel=1e-10)
    assert oracle == pytest.approx(4.97500e-3, abs=1e-8)
    p = outcome_probs(gauss, basis3, from_angles(PI / 4, beta), SourceConfig(0.0, 0.4))
    assert p[0] == pytest.approx(oracle, rel=1e-9)


def test_probs_even_in_separation(gauss, basis3):
    m = Measurement(gauss, BALANCED, basis3)
    for s in (0.1, 0.7, 1.5):
        np.testing.assert_allclose(m.probs(0.0, s), m.probs(0.0, -s), atol=1e-15)


def test_probs_complete(gauss, basis3):
    m = Measurement(gauss, BALANCED, basis3)
    for s0 in (-0.3, 0.0, 0.2):
        for s in (0.0, 0.5, 2.0):
            assert m.probs(s0, s).sum() == pytest.approx(1, abs=1e-10)


SMALL = SourceConfig(1e-6, 1e-3)


def test_cfi_small_separation(gauss, basis3):
    F = cfi_matrix(gauss, basis3, BALANCED, SMALL)
    assert F[1, 1] == pytest.approx(0.125, rel=5e-3)
    assert F[0, 0] == pytest.approx(0.5, rel=5e-3)
    e = epsilons(BALANCED)
    bound = 4 * e.eps_s_sq / (4 * SMALL.r + 1 / SMALL.r)
    assert abs(F[0, 1]) <= bound + SMALL.s
    np.testing.assert_array_equal(F, F.T)


def test_cfi_matches_leading_order(gauss, basis3):
    for alpha in (PI / 6, PI / 4, PI / 3):
        c = from_angles(alpha, PI / 6)
        for src in (SMALL, SourceConfig(1e-4, 1e-3)):
            F = cfi_matrix(gauss, basis3, c, src)
            L = cfi_smallsep_closedform(gauss.moments, epsilons(c), src.r)
            assert F[0, 0] == pytest.approx(L[0, 0], rel=1e-2)
            assert F[1, 1] == pytest.approx(L[1, 1], rel=1e-2)


def test_closedform_examples():
    m = Moments(0.25, 0.1875)
    np.testing.assert_allclose(cfi_smallsep_closedform(m, EpsilonPair(0.5, 0.5), float("inf")),
                               np.diag([0.5, 0.125]))
    assert cfi_smallsep_closedform(m, EpsilonPair(0.5, 0.5), 1.0)[0, 1] == pytest.approx(0.4)
    for r in (0.1, 1.0, 100.0, float("inf")):
        assert cfi_smallsep_closedform(m, EpsilonPair(0.0, 0.7), r)[1, 1] == 0.0


def test_cfi_refuses_zero_separation(gauss, basis3):
    with pytest.raises(ValidationError):
        cfi_matrix(gauss, basis3, BALANCED, SourceConfig(0.0, 0.0))


def test_cfi_step_too_large(gauss, basis3):
    with pytest.raises(StepTooLarge):
        cfi_matrix(gauss, basis3, BALANCED, SourceConfig(0.0, 1.5), fd_rel_step=0.3)


def test_overlap(gauss):
    assert overlap(gauss, 0.0) == pytest.approx(1, abs=1e-14)
    oracle = quad(lambda x: np.exp(-(x - 0.5) ** 2 / 4 - (x + 0.5) ** 2 / 4) / np.sqrt(2 * np.pi),
                  -np.inf, np.inf)[0]
    assert overlap(gauss, 1.0) == pytest.approx(oracle, abs=1e-10)
    assert overlap(gauss, 1.0) == pytest.approx(0.882497, abs=1e-6)
    vals = [overlap(gauss, s) for s in np.linspace(0, 3, 31)]
    assert np.all(np.diff(vals) < 0)


def test_centroid_closedform_arithmetic():
    m = Moments(0.25, 0.1875)
    assert qfi_centroid_closedform(m, 1.0) == pytest.approx(1.0)
    assert qfi_centroid_closedform(m, 0.0) == pytest.approx(1.0)
    o2 = np.exp(-0.25)
    assert qfi_centroid_closedform(m, np.sqrt(o2)) == pytest.approx(1 - o2 * (1 - o2))
    assert qfi_centroid_closedform(m, np.sqrt(o2)) == pytest.approx(0.827730, abs=1e-6)


@pytest.mark.parametrize("s", [0.05, 0.3, 1.0, 2.0])
def test_qfi_oracle_matches_exact_centroid_form(gauss, basis10, s):
    Q = qfi_oracle(gauss, basis10, SourceConfig(0.0, s))
    exact = qfi_centroid_exact(gauss, s)
    # Gaussian: 4 p2 - s^2/(4 sigma^4) exp(-s^2 / (4 sigma^2))
    assert exact == pytest.approx(1 - s * s / 4 * np.exp(-s * s / 4), abs=1e-12)
    assert Q[0, 0] == pytest.approx(exact, abs=1e-7)
    assert Q[1, 1] == pytest.approx(0.25, abs=1e-7)
    assert abs(Q[0, 1]) < 1e-8


def test_stated_centroid_form_only_matches_at_small_separation(gauss, basis10):
    def gap(s):
        Q = qfi_oracle(gauss, basis10, SourceConfig(0.0, s))
        return abs(Q[0, 0] - qfi_centroid_closedform(gauss.moments, overlap(gauss, s)))
    assert gap(0.05) < 1e-6
    assert gap(1.0) > 1e-2


def test_qfi_small_separation(gauss, basis10):
    Q = qfi_oracle(gauss, basis10, SourceConfig(0.0, 1e-3))
    assert Q[1, 1] == pytest.approx(0.25, abs=1e-4)
    assert Q[0, 0] == pytest.approx(1.0, abs=1e-6)


def test_qfi_sampled_psf(sech):
    ms = build_derivative_basis(sech, 0.0, 10)
    for s in (0.1, 0.5):
        Q = qfi_oracle(sech, ms, SourceConfig(0.0, s))
        assert Q[1, 1] <= sech.moments.p2 + 1e-6
        assert Q[0, 0] == pytest.approx(qfi_centroid_exact(sech, s), rel=1e-5)


def test_qfi_truncation(gauss):
    ms6 = build_derivative_basis(gauss, 0.0, 6)
    qfi_oracle(gauss, ms6, SourceConfig(0.0, 0.5))
    with pytest.raises(TruncationTooSmall):
        qfi_oracle(gauss, ms6, SourceConfig(0.0, 2.0))
    with pytest.raises(ValidationError):
        qfi_oracle(gauss, build_derivative_basis(gauss, 0.0, 5), SourceConfig(0.0, 0.5))


def test_regrets():
    Q = np.diag([1.0, 0.25])
    assert regrets(Q, Q) == (0.0, 0.0)
    assert regrets(np.zeros((2, 2)), Q) == (1.0, 1.0)
    with pytest.raises(ZeroQfi):
        regrets(Q, np.diag([1.0, 0.0]))


def test_balanced_regrets_at_small_separation(gauss):
    rep = fisher_report(gauss, BALANCED, SMALL)
    assert rep.regrets == pytest.approx((0.5, 0.5), abs=1e-3)
    assert rep.regret_sum == pytest.approx(1, abs=1e-3)
    assert rep.psd_gap > 0


def _direct_oracle(s):
    # F_ss of two Gaussians at +-s/2 by scipy quadrature of the analytic integrand
    def integrand(x):
        a = np.exp(-(x - s / 2) ** 2 / 2) / np.sqrt(2 * np.pi)
        b = np.exp(-(x + s / 2) ** 2 / 2) / np.sqrt(2 * np.pi)
        da = a * (x - s / 2) / 2
        db = -b * (x + s / 2) / 2
        # I = (a + b)/2, dI/ds = (da + db)/2
        return 0.5 * (da + db) ** 2 / (a + b)
    return quad(integrand, -20, 20, epsabs=1e-15, points=[0.0], limit=200)[0]


def test_direct_imaging_rayleigh_curse(gauss):
    fss = []
    for s in (0.2, 0.1, 0.05):
        F = direct_imaging_cfi(gauss, SourceConfig(0.0, s))
        assert F[1, 1] == pytest.approx(_direct_oracle(s), rel=1e-8)
        fss.append(F[1, 1])
    assert fss[0] > fss[1] > fss[2] > 0
    assert fss[2] < 0.05 * 0.25
    F = direct_imaging_cfi(gauss, SourceConfig(0.0, 0.01))
    assert F[0, 0] == pytest.approx(1.0, abs=1e-4)


def test_direct_imaging_well_separated(gauss_wide):
    F = direct_imaging_cfi(gauss_wide, SourceConfig(0.0, 4.0))
    assert F[1, 1] == pytest.approx(0.25, rel=0.05)


S_SCAN = [1e-3, 0.01, 0.1, 0.5, 1.0, 1.5, 2.0]


@pytest.mark.parametrize("s", S_SCAN)
@pytest.mark.parametrize("x0_frac", [0.0, 0.01])
def test_matrix_bound(gauss, basis3, basis10, s, x0_frac):
    src = SourceConfig(s * x0_frac, s)
    Q = qfi_oracle(gauss, basis10, src)
    for beta in (PI / 12, PI / 3):
        F = cfi_matrix(gauss, basis3, from_angles(PI / 4, beta), src)
        assert np.linalg.eigvalsh(Q - F)[0] >= -1e-8
    D = direct_imaging_cfi(gauss, src)
    assert np.linalg.eigvalsh(Q - D)[0] >= -1e-8


@pytest.mark.parametrize("alpha", [PI / 6, PI / 4, PI / 3])
def test_small_separation_ratios(gauss, alpha):
    c = from_angles(alpha, PI / 6)
    rep = fisher_report(gauss, c, SourceConfig(1e-6, 1e-3))
    e = epsilons(c)
    assert rep.F[1, 1] / rep.Q[1, 1] == pytest.approx(e.eps_s_sq, rel=1e-2)
    assert rep.F[0, 0] / rep.Q[0, 0] == pytest.approx(e.eps_s0_sq, rel=1e-2)


def test_beta_irrelevant_at_small_separation(gauss, basis3):
    Fs = np.array([cfi_matrix(gauss, basis3, from_angles(PI / 4, b), SMALL)
                   for b in (PI / 12, PI / 6, PI / 4, PI / 3)])
    for j in range(2):
        d = Fs[:, j, j]
        assert np.ptp(d) / d.mean() < 1e-2


def test_small_beta_wins_at_moderate_separation(gauss, basis3):
    src = SourceConfig(1e-3, 1.0)
    f = [cfi_matrix(gauss, basis3, from_angles(PI / 4, b), src)[1, 1] for b in (PI / 12, PI / 3)]
    assert f[0] > f[1]


def test_measurement_rejects_invalid_povm(gauss):
    with pytest.raises(ValidationError):
        Measurement(gauss, PovmCoeffs(1.0, 0.0, 0.5, 0.8, 0.0))


def test_sampled_psf_cfi(sech):
    c = BALANCED
    rep = fisher_report(sech, c, SourceConfig(1e-6, 1e-3))
    p2 = sech.moments.p2
    assert rep.F[1, 1] == pytest.approx(0.5 * p2, rel=1e-2)
    assert rep.F[0, 0] == pytest.approx(4 * p2 * 0.5, rel=1e-2)
    assert rep.regret_sum == pytest.approx(1, abs=1e-3)
