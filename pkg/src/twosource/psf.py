"""Amplitude point-spread functions on a uniform 1D grid.

A PSF is either an analytic Gaussian ``(2 pi sigma^2)^(-1/4) exp(-x^2 / 4 sigma^2)``
or a real array of samples. Every integral in the package is a composite
trapezoid rule on the PSF's grid.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import correlate1d
from scipy.special import eval_hermite, ndtr

from .errors import DegeneratePsf, OutOfRange, SupportOverflow, ValidationError

NORM_TOL_ANALYTIC = 1e-8
NORM_TOL_SAMPLED = 1e-6
SYMMETRY_TOL = 1e-6
TAIL_TOL = 1e-10

# 7-point central stencils (sixth order)
_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValidationError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n_points < 64:
            raise ValidationError(f"grid needs at least 64 points, got {self.n_points}")

    @classmethod
    def centered(cls, half_width: float, n_points: int = 4096) -> Grid:
        return cls(-float(half_width), float(half_width), int(n_points))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        w.flags.writeable = False
        return w

    def integrate(self, f: np.ndarray) -> float:
        return float(np.dot(self.weights, f))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.dot(self.weights, f * g))


@dataclass(frozen=True)
class Moments:
    """Even momentum moments ``<P^2>`` and ``<P^4>`` of the PSF state."""

    p2: float
    p4: float

    @property
    def width(self) -> float:
        """Length scale ``1 / (2 sqrt(p2))``; equals sigma for a Gaussian."""
        return 0.5 / np.sqrt(self.p2)


@dataclass(frozen=True, eq=False)
class PsfSpec:
    """A real amplitude PSF. Build with :meth:`gaussian` or :meth:`from_samples`."""

    grid: Grid
    sigma: float | None = None
    amplitudes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if (self.sigma is None) == (self.amplitudes is None):
            raise ValidationError("PsfSpec needs exactly one of sigma or amplitudes")
        if self.sigma is not None and not self.sigma > 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if self.amplitudes is not None:
            a = np.asarray(self.amplitudes, dtype=float)
            if a.shape != (self.grid.n_points,):
                raise ValidationError("amplitudes must have one value per grid point")
            if not np.all(np.isfinite(a)):
                raise ValidationError("amplitudes contain non-finite values")
            a = a.copy()
            a.flags.writeable = False
            object.__setattr__(self, "amplitudes", a)

    @classmethod
    def gaussian(cls, sigma: float = 1.0, grid: Grid | None = None,
                 half_width: float = 8.0, n_points: int = 4096) -> PsfSpec:
        if grid is None:
            grid = Grid.centered(half_width * sigma, n_points)
        return cls(grid=grid, sigma=float(sigma))

    @classmethod
    def from_samples(cls, x, amplitudes, recenter: bool = True) -> PsfSpec:
        """Ingest sampled amplitudes on a uniform grid.

        With ``recenter`` the intensity centroid is moved to x=0 and the
        samples are renormalized to unit power.
        """
        x = np.asarray(x, dtype=float)
        a = np.asarray(amplitudes, dtype=float)
        if x.ndim != 1 or x.shape != a.shape:
            raise ValidationError("x and amplitudes must be 1D arrays of equal length")
        if len(x) < 64:
            raise ValidationError(f"need at least 64 samples, got {len(x)}")
        steps = np.diff(x)
        h = (x[-1] - x[0]) / (len(x) - 1)
        if np.any(steps <= 0):
            raise ValidationError("x must be strictly increasing")
        if np.max(np.abs(steps - h)) > 1e-9 * abs(h):
            raise ValidationError("x must be uniformly spaced")
        grid = Grid(float(x[0]), float(x[-1]), len(x))
        if recenter:
            power = grid.integrate(a * a)
            if not power > 0:
                raise ValidationError("sampled PSF has zero power")
            c = grid.integrate(grid.x * a * a) / power
            a = _spline(grid, a)(grid.x + c)
            a[(grid.x + c < grid.x_min) | (grid.x + c > grid.x_max)] = 0.0
            a = a / np.sqrt(grid.integrate(a * a))
        return cls(grid=grid, amplitudes=a)

    @property
    def kind(self) -> str:
        return "gaussian" if self.sigma is not None else "sampled"

    @cached_property
    def moments(self) -> Moments:
        return momentum_moments(self)

    @property
    def width(self) -> float:
        """sigma for a Gaussian PSF, ``1/(2 sqrt(p2))`` otherwise."""
        return self.sigma if self.sigma is not None else self.moments.width

    @cached_property
    def _spline(self) -> CubicSpline:
        return _spline(self.grid, self.amplitudes)


def _spline(grid: Grid, a: np.ndarray) -> CubicSpline:
    return CubicSpline(grid.x, a, bc_type="natural", extrapolate=False)


def _gaussian(sigma: float, x):
    return (2 * np.pi * sigma**2) ** -0.25 * np.exp(-np.square(x) / (4 * sigma**2))


def evaluate(psf: PsfSpec, x):
    """Amplitude at ``x``; sampled PSFs are cubic-spline interpolated."""
    if psf.sigma is not None:
        return _gaussian(psf.sigma, x)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < psf.grid.x_min) or np.any(xa > psf.grid.x_max):
        raise OutOfRange(f"x outside sampled range [{psf.grid.x_min}, {psf.grid.x_max}]")
    out = psf._spline(xa)
    return float(out) if np.ndim(out) == 0 else out


def samples(psf: PsfSpec, shift: float = 0.0) -> np.ndarray:
    """``Psi(x - shift)`` on the PSF grid, without support checks."""
    if psf.sigma is not None:
        return _gaussian(psf.sigma, psf.grid.x - shift)
    if shift == 0.0:
        return np.array(psf.amplitudes)
    out = psf._spline(psf.grid.x - shift)
    return np.nan_to_num(out, nan=0.0)


def derivative_samples(psf: PsfSpec, order: int, shift: float = 0.0) -> np.ndarray:
    """``d^k Psi / dx^k`` evaluated at ``x - shift`` on the grid.

    Analytic (Hermite polynomials) for a Gaussian, repeated 7-point central
    differences for sampled PSFs.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if psf.sigma is not None:
        s = psf.sigma
        u = (psf.grid.x - shift) / (2 * s)
        return (-1 / (2 * s)) ** order * eval_hermite(order, u) * _gaussian(s, psf.grid.x - shift)
    f = samples(psf, shift)
    h = psf.grid.h
    for _ in range(order // 2):
        f = correlate1d(f, _D2, mode="constant") / h**2
    if order % 2:
        f = correlate1d(f, _D1, mode="constant") / h
    return f


def tail_mass(psf: PsfSpec, d: float) -> float:
    """Power of ``Psi(x - d)`` that falls outside the grid."""
    g = psf.grid
    if psf.sigma is not None:
        s = psf.sigma
        return float(ndtr((g.x_min - d) / s) + ndtr(-(g.x_max - d) / s))
    a2 = psf.amplitudes**2
    if d > 0:
        mask = g.x > g.x_max - d
    elif d < 0:
        mask = g.x < g.x_min - d
    else:
        return 0.0
    return g.integrate(np.where(mask, a2, 0.0))


def check_support(psf: PsfSpec, d: float) -> None:
    t = tail_mass(psf, d)
    if t >= TAIL_TOL:
        raise SupportOverflow(
            f"displacement {d:g} pushes {t:.3g} of the PSF power off the grid "
            f"[{psf.grid.x_min:g}, {psf.grid.x_max:g}]; widen the grid")


def displace(psf: PsfSpec, d: float) -> np.ndarray:
    """Samples of ``Psi(x - d)``; raises SupportOverflow if power leaves the grid."""
    check_support(psf, d)
    return samples(psf, d)


def momentum_moments(psf: PsfSpec) -> Moments:
    """``p2 = int |Psi'|^2`` and ``p4 = int |Psi''|^2`` by quadrature."""
    g = psf.grid
    d1 = derivative_samples(psf, 1)
    d2 = derivative_samples(psf, 2)
    p2 = g.integrate(d1 * d1)
    p4 = g.integrate(d2 * d2)
    if not p2 > 0 or (p4 - p2 * p2) <= 1e-12 * p2 * p2:
        raise DegeneratePsf(f"degenerate PSF moments p2={p2:.6g}, p4={p4:.6g}")
    return Moments(p2, p4)


@dataclass(frozen=True)
class PsfDiagnostics:
    norm_error: float
    asymmetry: float
    tail_mass: float
    violations: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def validate(psf: PsfSpec) -> PsfDiagnostics:
    g = psf.grid
    a = samples(psf)
    norm_error = abs(g.integrate(a * a) - 1.0)
    inside = (-g.x >= g.x_min) & (-g.x <= g.x_max)
    if psf.sigma is not None:
        mirrored = _gaussian(psf.sigma, -g.x[inside])
        norm_tol = NORM_TOL_ANALYTIC
        tail = tail_mass(psf, 0.0)
    else:
        mirrored = psf._spline(-g.x[inside])
        norm_tol = NORM_TOL_SAMPLED
        edge = max(8, g.n_points // 50)
        a2 = a * a
        tail = g.h * (a2[:edge].sum() + a2[-edge:].sum())
    asym = float(np.max(np.abs(a[inside] - mirrored))) if inside.any() else float("inf")

    violations = []
    if norm_error > norm_tol:
        violations.append(f"normalization: |int Psi^2 - 1| = {norm_error:.3g} > {norm_tol:g}")
    if asym > SYMMETRY_TOL:
        violations.append(f"symmetry: max|Psi(x) - Psi(-x)| = {asym:.3g} > {SYMMETRY_TOL:g}")
    if tail > TAIL_TOL:
        violations.append(f"tail: power near/outside grid edge {tail:.3g} > {TAIL_TOL:g}")
    return PsfDiagnostics(norm_error, asym, float(tail), tuple(violations))


def load_psf_csv(path, recenter: bool = True) -> PsfSpec:
    """Read a two-column ``x,amplitude`` CSV (header row optional)."""
    rows = []
    with open(Path(path), newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 0 and not rows:
                    continue  # header
                raise ValidationError(f"{path}: bad row {i + 1}: {row!r}") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    data = np.array(rows)
    return PsfSpec.from_samples(data[:, 0], data[:, 1], recenter=recenter)


def save_psf_csv(path, psf: PsfSpec) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "amplitude"])
        for xi, ai in zip(psf.grid.x, samples(psf)):
            w.writerow([repr(float(xi)), repr(float(ai))])
