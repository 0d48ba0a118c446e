"""CFI and QFI diagonals against separation for four beta values at alpha = pi/4.

Writes a CSV (default fig2.csv) and, if matplotlib is importable, a PNG next to it.
"""
import argparse

import numpy as np

from twosource import (Measurement, PsfSpec, SourceConfig, build_derivative_basis, cfi_of,
                       from_angles, qfi_oracle)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="fig2.csv")
    ap.add_argument("--points", type=int, default=100)
    args = ap.parse_args()

    psf = PsfSpec.gaussian(1.0)
    ms3, ms10 = build_derivative_basis(psf, 0.0, 3), build_derivative_basis(psf, 0.0, 10)
    betas = np.pi / np.array([12, 6, 4, 3])
    meas = [Measurement(psf, from_angles(np.pi / 4, b), ms3) for b in betas]
    rows = []
    for s in np.linspace(0.01, 2.0, args.points):
        src = SourceConfig(s * 1e-3, s)
        q = np.diag(qfi_oracle(psf, ms10, src))
        for b, m in zip(betas, meas):
            f = np.diag(cfi_of(m, src))
            rows.append((s, b, f[0], f[1], q[0], q[1]))
    data = np.array(rows)
    np.savetxt(args.out, data, delimiter=",", fmt="%.10g",
               header="s,beta,F_s0s0,F_ss,Q_s0s0,Q_ss", comments="")
    print(f"wrote {len(rows)} rows to {args.out}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharex=True)
    for b in betas:
        sel = data[data[:, 1] == b]
        for ax, col in zip(axes, (2, 3)):
            ax.plot(sel[:, 0], sel[:, col], label=f"beta = pi/{round(np.pi / b)}")
    sel = data[data[:, 1] == betas[0]]
    for ax, col, name in zip(axes, (4, 5), ("F_s0s0", "F_ss")):
        ax.plot(sel[:, 0], sel[:, col], "k--", label="QFI")
        ax.set_xlabel("s / sigma")
        ax.set_ylabel(name)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    png = args.out.rsplit(".", 1)[0] + ".png"
    fig.savefig(png, dpi=120)
    print(f"wrote {png}")


if __name__ == "__main__":
    main()
