"""Regret pairs along the saturating angle family at small separation.

Prints alpha, eps_s^2, eps_s0^2, the two regrets and their sum. The sum stays
at 1 because the family sits on the boundary of the tradeoff.
"""
import argparse

import numpy as np

from twosource import (Measurement, PsfSpec, SourceConfig, build_derivative_basis, cfi_of,
                       epsilons, from_angles, qfi_oracle, regrets)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=np.pi / 6)
    ap.add_argument("--s", type=float, default=1e-3)
    args = ap.parse_args()

    psf = PsfSpec.gaussian(1.0)
    ms3 = build_derivative_basis(psf, 0.0, 3)
    src = SourceConfig(args.s * 1e-3, args.s)
    Q = qfi_oracle(psf, build_derivative_basis(psf, 0.0, 10), src)
    print("alpha,eps_s_sq,eps_s0_sq,regret_s0,regret_s,sum")
    for k in range(1, 20):
        alpha = k * np.pi / 40
        c = from_angles(alpha, args.beta)
        e = epsilons(c)
        r = regrets(cfi_of(Measurement(psf, c, ms3), src), Q)
        print(f"{alpha:.6f},{e.eps_s_sq:.6f},{e.eps_s0_sq:.6f},{r[0]:.6f},{r[1]:.6f},"
              f"{sum(r):.6f}")


if __name__ == "__main__":
    main()
