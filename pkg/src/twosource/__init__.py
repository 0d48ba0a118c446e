"""Joint centroid and separation estimation for two incoherent point sources
with an optimal three-outcome mode-sorting measurement."""

__version__ = "0.1.0"

from .basis import ModeSet, build_derivative_basis, hg_analytic, overlaps  # noqa: E402
from .fisher import (FisherReport, Measurement, SourceConfig, cfi_matrix,  # noqa: E402
                     cfi_of, cfi_smallsep_closedform, direct_imaging_cfi, fisher_report,
                     outcome_probs, overlap, qfi_centroid_closedform, qfi_centroid_exact,
                     qfi_oracle, regrets)
from .montecarlo import (Bounds, ExperimentConfig, covariance_study,  # noqa: E402
                         mle)
from .povm import PovmCoeffs, epsilons, from_angles, povm_matrices  # noqa: E402
from .psf import Grid, Moments, PsfSpec, momentum_moments  # noqa: E402
