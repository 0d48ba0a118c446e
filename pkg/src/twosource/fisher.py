"""Outcome probabilities, classical and quantum Fisher information.

Parameters are always ordered (centroid s0, separation s). Probabilities use
exact overlaps with the displaced PSFs; there is no small-separation
expansion anywhere in the numerical path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import ModeSet, build_derivative_basis, overlaps
from .errors import (NegativeProbability, StepTooLarge, TruncationTooSmall, ValidationError,
                     ZeroQfi)
from .povm import EpsilonPair, PovmCoeffs, mode_functions, require_valid
from .psf import Moments, PsfSpec, check_support, derivative_samples, samples

MIN_SEPARATION_REL = 1e-6
QFI_EIG_CUTOFF = 1e-12
QFI_DEFICIT_TOL = 1e-8
RICHARDSON_TOL = 1e-4


@dataclass(frozen=True)
class SourceConfig:
    """True centroid ``s0``, separation ``s`` and the alignment guess ``s0_hat``."""

    s0: float
    s: float
    s0_hat: float = 0.0

    def __post_init__(self):
        if self.s < 0:
            raise ValidationError(f"separation must be nonnegative, got {self.s}")

    @property
    def x0(self) -> float:
        return self.s0 - self.s0_hat

    @property
    def delta_plus(self) -> float:
        return self.x0 + self.s / 2

    @property
    def delta_minus(self) -> float:
        return self.x0 - self.s / 2

    @property
    def r(self) -> float:
        if self.x0 == 0:
            return float("inf")
        return 0.25 * (self.s / self.x0) ** 2

    @property
    def positions(self) -> tuple[float, float]:
        return self.s0 + self.s / 2, self.s0 - self.s / 2


class Measurement:
    """A POVM realized on a PSF, ready for repeated probability evaluation."""

    def __init__(self, psf: PsfSpec, coeffs: PovmCoeffs, ms: ModeSet | None = None,
                 s0_hat: float = 0.0):
        require_valid(coeffs)
        if ms is None:
            ms = build_derivative_basis(psf, s0_hat, 3)
        elif ms.grid != psf.grid:
            raise ValidationError("mode set and PSF live on different grids")
        self.psf = psf
        self.coeffs = coeffs
        self.modes = ms
        f1, f2 = mode_functions(coeffs, ms)
        w = psf.grid.weights
        self._w1 = w * f1
        self._w2 = w * f2

    @property
    def s0_hat(self) -> float:
        return self.modes.center

    def probs(self, s0: float, s: float, check: bool = True) -> np.ndarray:
        """``(p1, p2, p3)`` for sources at ``s0 +- s/2``."""
        pos = (s0 + s / 2, s0 - s / 2)
        if check:
            for d in pos:
                check_support(self.psf, d)
        p1 = p2 = 0.0
        for d in pos:
            psi = samples(self.psf, d)
            p1 += 0.5 * float(self._w1 @ psi) ** 2
            p2 += 0.5 * float(self._w2 @ psi) ** 2
        p3 = 1.0 - p1 - p2
        if p3 < -1e-9:
            raise NegativeProbability(f"p3 = {p3:.3g} < 0 at s0={s0:g}, s={s:g}")
        return np.array([p1, p2, max(p3, 0.0)])

    def probs_at(self, src: SourceConfig) -> np.ndarray:
        if not np.isclose(src.s0_hat, self.s0_hat, rtol=0, atol=1e-15):
            raise ValidationError("source config alignment guess differs from the measurement's")
        return self.probs(src.s0, src.s)


def outcome_probs(psf: PsfSpec, ms: ModeSet, c: PovmCoeffs, src: SourceConfig) -> np.ndarray:
    return Measurement(psf, c, ms).probs_at(src)


def _fd_step(psf: PsfSpec, src: SourceConfig, rel_step: float) -> float:
    h = rel_step * psf.width
    return min(h, src.s / 4)


def _jacobian(fun, s0: float, s: float, h: float) -> np.ndarray:
    """Central differences; rows = outcomes, columns = (s0, s)."""
    d0 = (fun(s0 + h, s) - fun(s0 - h, s)) / (2 * h)
    d1 = (fun(s0, s + h) - fun(s0, s - h)) / (2 * h)
    return np.column_stack([d0, d1])


def _fisher_from(p: np.ndarray, jac: np.ndarray) -> np.ndarray:
    keep = ~((p < 1e-14) & np.all(np.abs(jac) < 1e-12, axis=1))
    p, jac = p[keep], jac[keep]
    if np.any(p <= 1e-300):
        raise NegativeProbability("outcome with zero probability but nonzero derivative")
    F = (jac / p[:, None]).T @ jac
    return 0.5 * (F + F.T)


def cfi_matrix(psf: PsfSpec, ms: ModeSet, c: PovmCoeffs, src: SourceConfig,
               fd_rel_step: float = 1e-4) -> np.ndarray:
    return cfi_of(Measurement(psf, c, ms), src, fd_rel_step)


def cfi_of(meas: Measurement, src: SourceConfig, fd_rel_step: float = 1e-4) -> np.ndarray:
    """Classical Fisher information of a POVM by central finite differences."""
    psf = meas.psf
    if src.s < MIN_SEPARATION_REL * psf.width:
        raise ValidationError(
            f"separation {src.s:g} below the supported minimum {MIN_SEPARATION_REL:g} x width")
    h = _fd_step(psf, src, fd_rel_step)
    for d in src.positions:
        check_support(psf, d + 2 * h)
        check_support(psf, d - 2 * h)
    fun = lambda a, b: meas.probs(a, b, check=False)  # noqa: E731
    p = fun(src.s0, src.s)
    jac = _jacobian(fun, src.s0, src.s, h)
    jac2 = _jacobian(fun, src.s0, src.s, 2 * h)
    rich = (4 * jac - jac2) / 3
    scale = np.max(np.abs(rich))
    if scale > 0 and np.max(np.abs(jac - rich)) > RICHARDSON_TOL * scale + 1e-13:
        raise StepTooLarge(f"finite-difference step {h:g} too coarse (Richardson mismatch)")
    return _fisher_from(p, jac)


def cfi_smallsep_closedform(m: Moments, e: EpsilonPair, r: float) -> np.ndarray:
    """Leading-order CFI of the three-outcome POVM for small separations.

    ``r = (s / x0)^2 / 4``; pass ``inf`` for perfect alignment.
    """
    es, e0 = e.eps_s_sq, e.eps_s0_sq
    if np.isinf(r):
        return np.diag([4 * m.p2 * e0, m.p2 * es])
    f00 = 4 * m.p2 * (e0 + es / (1 + r))
    fss = m.p2 * es * r / (1 + r)
    off = 4 * es / (4 * r + 1 / r) if r > 0 else 0.0
    return np.array([[f00, off], [off, fss]])


def overlap(psf: PsfSpec, s: float) -> float:
    """``<Psi_+|Psi_->`` for sources at ``+-s/2``; depends only on ``s``."""
    check_support(psf, s / 2)
    check_support(psf, -s / 2)
    return psf.grid.inner(samples(psf, s / 2), samples(psf, -s / 2))


def qfi_centroid_closedform(m: Moments, ov: float) -> float:
    """``4 [p2 - |ov|^2 (1 - |ov|^2) / 4]`` as stated for the centroid QFI."""
    if abs(ov) > 1 + 1e-12:
        raise ValidationError(f"|overlap| must not exceed 1, got {ov}")
    o2 = ov * ov
    return 4 * (m.p2 - o2 * (1 - o2) / 4)


def qfi_centroid_exact(psf: PsfSpec, s: float) -> float:
    """Exact centroid QFI, ``4 p2 - 4 (d<Psi_+|Psi_->/ds)^2``.

    Follows from the spectral form of the QFI for the rank-2 state with
    eigenvectors ``Psi_+ +- Psi_-``; ``d ov/ds = int Psi_+ Psi_-'``.
    """
    check_support(psf, s / 2)
    check_support(psf, -s / 2)
    dov = psf.grid.inner(samples(psf, s / 2), derivative_samples(psf, 1, -s / 2))
    return 4 * psf.moments.p2 - 4 * dov * dov


def qfi_oracle(psf: PsfSpec, ms: ModeSet, src: SourceConfig,
               fd_rel_step: float = 1e-4) -> np.ndarray:
    """QFI matrix from the SLD spectral formula in a truncated mode basis."""
    if ms.n_modes < 6:
        raise ValidationError(f"QFI oracle needs at least 6 modes, got {ms.n_modes}")
    if src.s <= 0:
        raise ValidationError("QFI oracle needs a positive separation")
    h = _fd_step(psf, src, fd_rel_step)

    def rho(s0, s):
        cp = overlaps(ms, psf, s0 + s / 2)
        cm = overlaps(ms, psf, s0 - s / 2)
        return 0.5 * (np.outer(cp, cp) + np.outer(cm, cm)), cp, cm

    r0, cp, cm = rho(src.s0, src.s)
    deficit = max(1 - cp @ cp, 1 - cm @ cm)
    if deficit > QFI_DEFICIT_TOL:
        raise TruncationTooSmall(
            f"{ms.n_modes} modes leave {deficit:.3g} of the displaced PSF uncaptured; "
            "increase the number of modes")
    drho = [
        (rho(src.s0 + h, src.s)[0] - rho(src.s0 - h, src.s)[0]) / (2 * h),
        (rho(src.s0, src.s + h)[0] - rho(src.s0, src.s - h)[0]) / (2 * h),
    ]
    lam, vec = np.linalg.eigh(r0)
    lsum = lam[:, None] + lam[None, :]
    mask = lsum > QFI_EIG_CUTOFF
    inv = np.where(mask, 2.0 / np.where(mask, lsum, 1.0), 0.0)
    rot = [vec.T @ d @ vec for d in drho]
    Q = np.empty((2, 2))
    for j in range(2):
        for k in range(2):
            Q[j, k] = np.sum(inv * rot[j] * rot[k].T)
    return 0.5 * (Q + Q.T)


def regrets(F: np.ndarray, Q: np.ndarray) -> tuple[float, float]:
    """Squared information regrets ``1 - F_jj / Q_jj`` clamped to [0, 1]."""
    out = []
    for j in range(2):
        if not Q[j, j] > 0:
            raise ZeroQfi(f"QFI diagonal entry {j} is {Q[j, j]:g}")
        out.append(float(np.clip(1 - F[j, j] / Q[j, j], 0.0, 1.0)))
    return out[0], out[1]


def direct_imaging_cfi(psf: PsfSpec, src: SourceConfig) -> np.ndarray:
    """Fisher information of ideal intensity detection on the image plane."""
    g = psf.grid
    xp, xm = src.positions
    check_support(psf, xp)
    check_support(psf, xm)
    a, b = samples(psf, xp), samples(psf, xm)
    da, db = derivative_samples(psf, 1, xp), derivative_samples(psf, 1, xm)
    intensity = 0.5 * (a * a + b * b)
    # d/dd Psi(x - d)^2 = -2 Psi Psi'
    d_s0 = -(a * da + b * db)
    d_s = -0.5 * (a * da - b * db)
    ok = intensity > 1e-300
    inv = np.where(ok, 1.0 / np.where(ok, intensity, 1.0), 0.0)
    grads = (d_s0, d_s)
    F = np.array([[g.integrate(grads[j] * grads[k] * inv) for k in range(2)] for j in range(2)])
    return 0.5 * (F + F.T)


@dataclass(frozen=True)
class FisherReport:
    F: np.ndarray
    Q: np.ndarray
    regrets: tuple[float, float]
    psd_gap: float
    probs: np.ndarray = field(default=None)

    @cached_property
    def regret_sum(self) -> float:
        return self.regrets[0] + self.regrets[1]


def fisher_report(psf: PsfSpec, c: PovmCoeffs, src: SourceConfig, n_qfi_modes: int = 10,
                  fd_rel_step: float = 1e-4) -> FisherReport:
    meas = Measurement(psf, c, s0_hat=src.s0_hat)
    F = cfi_of(meas, src, fd_rel_step)
    Q = qfi_oracle(psf, build_derivative_basis(psf, src.s0_hat, n_qfi_modes), src, fd_rel_step)
    gap = float(np.linalg.eigvalsh(Q - F)[0])
    return FisherReport(F, Q, regrets(F, Q), gap, meas.probs_at(src))
