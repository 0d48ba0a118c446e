"""Maximum-likelihood covariance against the Cramer-Rao bound.

Runs the Monte Carlo study for a few repetition counts so the spread of the
variance ratio around 1 can be compared with its standard error.
"""
import argparse
import time

import numpy as np

from twosource import (ExperimentConfig, Measurement, PsfSpec, SourceConfig, covariance_study,
                       from_angles)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--shots", type=int, default=10**6)
    ap.add_argument("--reps", type=int, nargs="+", default=[200, 1000])
    ap.add_argument("--s", type=float, default=0.5)
    args = ap.parse_args()

    psf = PsfSpec.gaussian(1.0, half_width=12, n_points=6144)
    meas = Measurement(psf, from_angles(np.pi / 4, np.pi / 6))
    for reps in args.reps:
        cfg = ExperimentConfig(args.shots, SourceConfig(0.0, args.s), meas, args.seed, reps)
        t0 = time.perf_counter()
        res = covariance_study(cfg)
        ratio, se = res.variance_ratios, res.variance_ratio_stderr
        print(f"reps={reps:5d}  var/CRB s0 {ratio[0]:.3f} +- {se[0]:.3f}  "
              f"s {ratio[1]:.3f} +- {se[1]:.3f}  "
              f"min eig(cov-CRB) {res.excess_min_eigenvalue:+.2e}  "
              f"converged {int(res.converged.sum())}/{reps}  {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
