"""Monte Carlo maximum-likelihood estimation with the three-outcome POVM.

Random numbers come from numpy's PCG64 generator (O'Neill, "PCG: A Family of
Simple Fast Space-Efficient Statistically Good Algorithms for Random Number
Generation", 2014). A stream is keyed by ``(seed, index)`` through
``numpy.random.SeedSequence(seed, spawn_key=(index,))``; single draws use
index 0 and repetition ``i`` of a study uses index ``i``. Counts are drawn
with ``Generator.multinomial``.

The separation is estimated as ``|s|``: with the sources straddling the
alignment guess the probabilities are even in ``s``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .errors import NonIdentifiable, ValidationError
from .fisher import Measurement, SourceConfig, cfi_of, qfi_oracle
from .basis import build_derivative_basis

GRID_POINTS = 41
XTOL = 1e-8


class Counts(NamedTuple):
    n1: int
    n2: int
    n3: int

    @property
    def total(self) -> int:
        return self.n1 + self.n2 + self.n3


def rng(seed: int, index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def sample(p, n: int, seed: int, index: int = 0) -> Counts:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    p = p / p.sum()
    return Counts(*(int(k) for k in rng(seed, index).multinomial(n, p)))


@dataclass(frozen=True)
class Bounds:
    s0_lo: float
    s0_hi: float
    s_lo: float
    s_hi: float

    @classmethod
    def default(cls, width: float, s0_hat: float = 0.0) -> Bounds:
        return cls(s0_hat - width, s0_hat + width, 1e-6 * width, 3 * width)

    def contains(self, s0: float, s: float) -> bool:
        return self.s0_lo <= s0 <= self.s0_hi and self.s_lo <= s <= self.s_hi


@dataclass(frozen=True)
class EstimationResult:
    s0_hat_ml: float
    s_hat_ml: float
    loglik: float
    converged: bool
    empirical_cov: np.ndarray | None = None
    crb: np.ndarray | None = None


class LikelihoodModel:
    """Probabilities on the coarse search grid, cached across data sets."""

    def __init__(self, meas: Measurement, bounds: Bounds | None = None):
        self.meas = meas
        self.bounds = bounds or Bounds.default(meas.psf.width, meas.s0_hat)
        b = self.bounds
        for s0 in (b.s0_lo, b.s0_hi):
            meas.probs(s0, b.s_hi)  # support check at the extreme corners
        self.s0_axis = np.linspace(b.s0_lo, b.s0_hi, GRID_POINTS)
        self.s_axis = np.linspace(b.s_lo, b.s_hi, GRID_POINTS)
        table = np.array([[meas.probs(a, s, check=False) for s in self.s_axis]
                          for a in self.s0_axis])
        self.log_table = np.log(np.clip(table, 1e-300, None))

    def loglik(self, counts: Counts, s0: float, s: float) -> float:
        p = np.clip(self.meas.probs(s0, abs(s), check=False), 1e-300, None)
        return float(np.dot(counts, np.log(p)))


def mle(counts: Counts, model: LikelihoodModel) -> EstimationResult:
    """Grid search over the bounds box followed by Nelder-Mead refinement."""
    n = np.asarray(counts, dtype=float)
    surface = model.log_table @ n
    if np.ptp(surface) <= 1e-12 * max(1.0, np.max(np.abs(surface))):
        raise NonIdentifiable("log-likelihood is flat over the search grid")
    i, j = np.unravel_index(np.argmax(surface), surface.shape)
    x_start = np.array([model.s0_axis[i], model.s_axis[j]])
    b = model.bounds
    scale = np.array([(b.s0_hi - b.s0_lo), (b.s_hi - b.s_lo)]) / (GRID_POINTS - 1)

    def nll(v):
        s0, s = v
        if not (b.s0_lo <= s0 <= b.s0_hi and b.s_lo <= s <= b.s_hi):
            return np.inf
        return -model.loglik(counts, s0, s)

    simplex = np.array([x_start, x_start + [scale[0], 0], x_start + [0, scale[1]]])
    simplex[:, 0] = np.clip(simplex[:, 0], b.s0_lo, b.s0_hi)
    simplex[:, 1] = np.clip(simplex[:, 1], b.s_lo, b.s_hi)
    if np.isfinite(nll(x_start)) and not np.all(np.isfinite([nll(v) for v in simplex])):
        simplex[1:] = x_start - (simplex[1:] - x_start)
    res = minimize(nll, x_start, method="Nelder-Mead",
                   options={"xatol": XTOL, "fatol": 1e-7, "maxiter": 4000,
                            "initial_simplex": simplex})
    s0_ml, s_ml = (float(v) for v in res.x)
    on_edge = (np.isclose(s0_ml, [b.s0_lo, b.s0_hi], rtol=0, atol=10 * XTOL).any()
               or np.isclose(s_ml, [b.s_lo, b.s_hi], rtol=0, atol=10 * XTOL).any())
    converged = bool(res.success) and not on_edge
    return EstimationResult(s0_ml, abs(s_ml), float(-res.fun), converged)


@dataclass(frozen=True)
class ExperimentConfig:
    shots: int
    truth: SourceConfig
    measurement: Measurement
    seed: int = 42
    repetitions: int = 200

    def __post_init__(self):
        if self.shots < 100:
            raise ValidationError(f"need at least 100 shots, got {self.shots}")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be positive")


@dataclass(frozen=True)
class StudyResult:
    estimates: np.ndarray          # (reps, 2): s0_hat, s_hat
    logliks: np.ndarray
    converged: np.ndarray
    fisher: np.ndarray             # per-shot CFI at the truth
    crb: np.ndarray                # F^-1 / N
    qcrb_diag: np.ndarray          # diag(Q)^-1 / N, the per-parameter quantum limits
    empirical_cov: np.ndarray | None
    summary: EstimationResult

    @property
    def variance_ratios(self) -> np.ndarray | None:
        if self.empirical_cov is None:
            return None
        return np.diag(self.empirical_cov) / np.diag(self.crb)

    @property
    def variance_ratio_stderr(self) -> np.ndarray | None:
        """Standard error of the variance ratios, assuming Gaussian estimates."""
        if self.empirical_cov is None:
            return None
        k = len(self.estimates)
        return self.variance_ratios * np.sqrt(2.0 / (k - 1))

    @property
    def excess_min_eigenvalue(self) -> float | None:
        """Smallest eigenvalue of ``empirical_cov - crb``."""
        if self.empirical_cov is None:
            return None
        return float(np.linalg.eigvalsh(self.empirical_cov - self.crb)[0])

    @property
    def excess_stderr(self) -> float | None:
        """Standard error scale for ``excess_min_eigenvalue`` (largest diagonal variance)."""
        if self.empirical_cov is None:
            return None
        k = len(self.estimates)
        return float(np.max(np.diag(self.empirical_cov)) * np.sqrt(2.0 / (k - 1)))


def covariance_study(cfg: ExperimentConfig, bounds: Bounds | None = None,
                     n_qfi_modes: int = 10) -> StudyResult:
    meas = cfg.measurement
    truth = cfg.truth
    model = LikelihoodModel(meas, bounds)
    if not model.bounds.contains(truth.s0, truth.s):
        raise ValidationError("truth lies outside the estimation bounds")
    p = meas.probs_at(truth)
    F = cfi_of(meas, truth)
    Q = qfi_oracle(meas.psf, build_derivative_basis(meas.psf, meas.s0_hat, n_qfi_modes), truth)
    n = cfg.shots

    est = np.empty((cfg.repetitions, 2))
    ll = np.empty(cfg.repetitions)
    conv = np.empty(cfg.repetitions, dtype=bool)
    for i in range(cfg.repetitions):
        r = mle(sample(p, n, cfg.seed, i), model)
        est[i] = r.s0_hat_ml, r.s_hat_ml
        ll[i] = r.loglik
        conv[i] = r.converged

    cov = np.cov(est, rowvar=False) if cfg.repetitions > 1 else None
    crb = np.linalg.inv(F) / n
    mean = est.mean(axis=0)
    summary = EstimationResult(float(mean[0]), float(mean[1]), float(ll.mean()),
                               bool(conv.all()), cov, crb)
    return StudyResult(est, ll, conv, F, crb, 1.0 / (n * np.diag(Q)), cov, summary)
