"""Orthonormal computational basis built from the PSF and its derivatives.

Mode k (1-based) is Gram-Schmidt applied to ``(-iP)^(k-1) Psi = (-1)^(k-1) Psi^(k-1)``
centered at the alignment guess. This reproduces the three lowest modes

    Phi1 = Psi,   Phi2 = -Psi' / sqrt(p2),   Phi3 = (p2 Psi + Psi'') / sqrt(p4 - p2^2)

including their signs. For a Gaussian PSF these are HG0, HG1 and HG2 in the
usual Hermite sign convention (HG2 negative at the center). Outcome
probabilities do not depend on the mode signs once the POVM coefficients are
flipped along with them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.special import eval_hermite
from scipy.stats import poisson

from .errors import DegenerateBasis, UnsupportedOrder, ValidationError
from .psf import Grid, Moments, PsfSpec, check_support, derivative_samples, samples

HG_MAX_ORDER = 12


@dataclass(frozen=True, eq=False)
class ModeSet:
    modes: np.ndarray = field(repr=False)  # shape (N, n_points)
    center: float
    moments: Moments
    grid: Grid

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    def gram(self) -> np.ndarray:
        w = self.grid.weights
        return (self.modes * w) @ self.modes.T

    def project(self, f: np.ndarray) -> np.ndarray:
        """Coefficients ``<Phi_k|f>`` by trapezoid quadrature."""
        return self.modes @ (self.grid.weights * f)


def build_derivative_basis(psf: PsfSpec, center: float = 0.0, n_modes: int = 3) -> ModeSet:
    if n_modes < 3:
        raise ValidationError(f"need at least 3 modes, got {n_modes}")
    check_support(psf, center)
    g = psf.grid
    moments = psf.moments
    modes = np.empty((n_modes, g.n_points))
    modes[0] = samples(psf, center)
    for k in range(1, n_modes):
        v = (-1) ** k * derivative_samples(psf, k, center)
        v = v / np.sqrt(g.inner(v, v))
        # modified Gram-Schmidt, two passes
        for _ in range(2):
            for j in range(k):
                v = v - g.inner(modes[j], v) * modes[j]
        nrm = np.sqrt(g.inner(v, v))
        if nrm < 1e-10:
            raise DegenerateBasis(f"derivative {k} is linearly dependent on lower orders "
                                  f"(residual {nrm:.3g})")
        modes[k] = v / nrm
    modes.flags.writeable = False
    return ModeSet(modes, float(center), moments, g)


def overlaps(ms: ModeSet, psf: PsfSpec, d: float) -> np.ndarray:
    """``c_k(d) = <Phi_k | Psi_d>`` for the PSF displaced to ``d``."""
    check_support(psf, d)
    return ms.project(samples(psf, d))


def hg_analytic(n: int, sigma: float, x):
    """Hermite-Gauss mode of order ``n`` whose ground mode is the Gaussian PSF."""
    if n < 0 or n > HG_MAX_ORDER:
        raise UnsupportedOrder(f"Hermite-Gauss order must be in [0, {HG_MAX_ORDER}], got {n}")
    x = np.asarray(x, dtype=float)
    norm = 1.0 / np.sqrt(2.0**n * factorial(n) * np.sqrt(2 * np.pi) * sigma)
    return norm * eval_hermite(n, x / (np.sqrt(2) * sigma)) * np.exp(-x * x / (4 * sigma**2))


def coherent_weights(d: float, sigma: float, n_max: int) -> np.ndarray:
    """``|<HG_n|Psi_d>|^2 = e^-Q Q^n / n!`` with ``Q = d^2 / (4 sigma^2)``, n = 0..n_max."""
    return poisson.pmf(np.arange(n_max + 1), d * d / (4 * sigma * sigma))
