"""Three-outcome POVMs on the span of the three lowest basis modes.

Two vectors in the (Phi1, Phi2, Phi3) coordinates define the POVM::

    pi1 = (0,  a2, a3)
    pi2 = (b1, b2, b3)
    Pi1 = |pi1><pi1|,  Pi2 = |pi2><pi2|,  Pi3 = 1 - Pi1 - Pi2

``pi1`` is orthogonal to the PSF itself, so outcome 1 only fires when the
sources are displaced from the alignment guess.

The angle family ``pi1 = (0, cos a, sin a)``,
``pi2 = (cos b, sin a sin b, -cos a sin b)`` saturates the information
tradeoff ``eps_s^2 + eps_s0^2 <= 1``. Note that in this family a larger
``alpha`` tilts ``pi1`` toward Phi3 (the second-derivative mode) and moves
information from the separation to the centroid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import ModeSet
from .errors import AngleOutOfRange, DegenerateB1, InvalidPovm, ValidationError

ANGLE_MARGIN = 1e-6
CONDITION_TOL = 1e-12
EIG_TOL = 1e-10


@dataclass(frozen=True)
class PovmCoeffs:
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float

    @property
    def pi1(self) -> np.ndarray:
        return np.array([0.0, self.a2, self.a3])

    @property
    def pi2(self) -> np.ndarray:
        return np.array([self.b1, self.b2, self.b3])

    @classmethod
    def parse(cls, text: str) -> PovmCoeffs:
        """Parse ``"a2,a3,b1,b2,b3"``."""
        try:
            vals = [float(v) for v in text.split(",")]
        except ValueError:
            raise ValidationError(f"bad coefficient list {text!r}") from None
        if len(vals) != 5:
            raise ValidationError(f"expected 5 coefficients a2,a3,b1,b2,b3, got {len(vals)}")
        return cls(*vals)


@dataclass(frozen=True)
class EpsilonPair:
    eps_s_sq: float
    eps_s0_sq: float

    @property
    def total(self) -> float:
        return self.eps_s_sq + self.eps_s0_sq


def from_angles(alpha: float, beta: float) -> PovmCoeffs:
    hi = np.pi / 2 - ANGLE_MARGIN
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not (ANGLE_MARGIN < v < hi):
            raise AngleOutOfRange(
                f"{name}={v!r} must lie strictly inside (0, pi/2); aligning a POVM "
                "vector with a basis axis breaks the small-separation optimality")
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    return PovmCoeffs(a2=ca, a3=sa, b1=cb, b2=sa * sb, b3=-ca * sb)


def epsilons(c: PovmCoeffs) -> EpsilonPair:
    """Fractions of the separation and centroid quantum information captured."""
    denom = 1.0 - c.b1 * c.b1
    if denom < 1e-12:
        raise DegenerateB1(f"1 - b1^2 = {denom:.3g}: centroid information undefined")
    return EpsilonPair(c.a2 * c.a2, c.b2 * c.b2 / denom)


def condition_value(c: PovmCoeffs) -> float:
    """``a2^2 (1 - b1^2) + b1^2 + b2^2``; Pi3 restricted to span(Phi1, Phi2) is PSD iff <= 1."""
    return c.a2**2 * (1 - c.b1**2) + c.b1**2 + c.b2**2


@dataclass(frozen=True)
class PovmDiagnostics:
    condition: float
    condition_ok: bool
    min_eigenvalue: float
    eigen_ok: bool
    violations: tuple[str, ...]

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def agree(self) -> bool:
        return self.condition_ok == self.eigen_ok

    @property
    def restriction_only(self) -> bool:
        """Closed form passes but the full 3x3 check fails.

        Possible when a3 or b3 is nonzero: the closed form only constrains
        the Phi1-Phi2 block of Pi3. The reverse cannot happen.
        """
        return self.condition_ok and not self.eigen_ok


def validate(c: PovmCoeffs) -> PovmDiagnostics:
    violations = []
    if not (c.a2 > 0 and c.b1 > 0 and c.b2 > 0):
        violations.append(f"signs: need a2, b1, b2 > 0, got a2={c.a2:g}, b1={c.b1:g}, b2={c.b2:g}")
    n1, n2 = np.linalg.norm(c.pi1), np.linalg.norm(c.pi2)
    if n1 > 1 + CONDITION_TOL or n2 > 1 + CONDITION_TOL:
        violations.append(f"norms: |pi1|={n1:.12g}, |pi2|={n2:.12g} must not exceed 1")
    cond = condition_value(c)
    cond_ok = cond <= 1 + CONDITION_TOL
    if not cond_ok:
        violations.append(f"positivity: a2^2(1-b1^2)+b1^2+b2^2 = {cond:.12g} > 1")
    pi3 = np.eye(3) - np.outer(c.pi1, c.pi1) - np.outer(c.pi2, c.pi2)
    lam = float(np.linalg.eigvalsh(pi3)[0])
    eig_ok = lam >= -EIG_TOL
    if not eig_ok:
        violations.append(f"eigenvalue: min eig(Pi3) = {lam:.3g} < 0")
    return PovmDiagnostics(cond, cond_ok, lam, eig_ok, tuple(violations))


def require_valid(c: PovmCoeffs) -> None:
    d = validate(c)
    if not d.valid:
        raise InvalidPovm("invalid POVM: " + "; ".join(d.violations))


def povm_matrices(c: PovmCoeffs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    require_valid(c)
    p1 = np.outer(c.pi1, c.pi1)
    p2 = np.outer(c.pi2, c.pi2)
    return p1, p2, np.eye(3) - p1 - p2


def mode_functions(c: PovmCoeffs, ms: ModeSet) -> tuple[np.ndarray, np.ndarray]:
    """Sampled ``pi1(x)`` and ``pi2(x)``; their norms equal the coefficient norms."""
    if ms.n_modes < 3:
        raise ValidationError("mode set needs at least 3 modes")
    phi = ms.modes[:3]
    return c.pi1 @ phi, c.pi2 @ phi
