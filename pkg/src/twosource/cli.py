"""Command-line interface: ``python -m twosource <subcommand>``.

Lengths are read and written in the PSF's own units (units of sigma with the
default ``--sigma 1``); Fisher entries are in 1/length^2. Every CSV starts
with one ``#`` header line recording the version, a hash of the
configuration, the seed and the units.

Exit codes: 0 success, 2 validation failure, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import re
import sys

import numpy as np

from . import __version__
from .basis import build_derivative_basis
from .errors import NumericalError, ValidationError
from .fisher import (Measurement, SourceConfig, cfi_of, cfi_smallsep_closedform,
                     direct_imaging_cfi, overlap, qfi_centroid_closedform, qfi_centroid_exact,
                     qfi_oracle, regrets)
from .montecarlo import Bounds, ExperimentConfig, covariance_study
from .povm import PovmCoeffs, epsilons, from_angles, mode_functions, validate as validate_povm
from .psf import Grid, PsfSpec, load_psf_csv, validate as validate_psf

FIG2_BETAS = "pi/12,pi/6,pi/4,pi/3"
_ANGLE = re.compile(r"^\s*(?P<num>[0-9.]*)\s*\*?\s*pi\s*(?:/\s*(?P<den>[0-9.]+))?\s*$")


def parse_angle(text: str) -> float:
    """Decimal radians or ``pi``, ``pi/6``, ``2pi/3``, ``2*pi/3``."""
    m = _ANGLE.match(text)
    if m:
        num = float(m["num"]) if m["num"] else 1.0
        den = float(m["den"]) if m["den"] else 1.0
        return num * np.pi / den
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}") from None


def parse_angle_list(text: str) -> list[float]:
    return [parse_angle(t) for t in text.split(",") if t.strip()]


def parse_scan(text: str) -> np.ndarray:
    """``lo:hi:n`` -> n evenly spaced values."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"scan must be lo:hi:n, got {text!r}") from None
    if n < 1 or (n > 1 and not lo < hi):
        raise argparse.ArgumentTypeError(f"empty scan range {text!r}")
    return np.linspace(lo, hi, n)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


# ---------------------------------------------------------------- config helpers

def build_psf(args, default_half_width: float = 8.0) -> PsfSpec:
    if args.psf_file:
        return load_psf_csv(args.psf_file)
    half = args.grid_half_width if args.grid_half_width is not None else default_half_width
    grid = Grid.centered(half * args.sigma, args.grid_points)
    return PsfSpec.gaussian(args.sigma, grid=grid)


def build_coeffs(args, default_alpha: float | None = np.pi / 4,
                 default_beta: float = np.pi / 6) -> PovmCoeffs:
    if args.coeffs is not None:
        if args.alpha is not None or args.beta is not None:
            raise ValidationError("give either --alpha/--beta or --coeffs, not both")
        return PovmCoeffs.parse(args.coeffs)
    alpha = args.alpha if args.alpha is not None else default_alpha
    beta = args.beta if args.beta is not None else default_beta
    return from_angles(alpha, beta)


def config_hash(args) -> str:
    cfg = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
           for k, v in sorted(vars(args).items()) if k not in ("out", "func")}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class Output:
    def __init__(self, args, units: str):
        self.args = args
        self.buf = io.StringIO()
        self.writer = csv.writer(self.buf, lineterminator="\n")
        seed = getattr(args, "seed", None)
        self.buf.write(f"# twosource {__version__} cmd={args.command} config={config_hash(args)} "
                       f"seed={seed} units: {units}\n")

    def row(self, *values):
        self.writer.writerow([v if isinstance(v, str) else fmt(v) for v in values])

    def comment(self, text: str):
        self.buf.write(f"# {text}\n")

    def close(self):
        text = self.buf.getvalue()
        if self.args.out:
            with open(self.args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


LENGTH_UNITS = "lengths in PSF units; Fisher entries in 1/length^2"


# ---------------------------------------------------------------- subcommands

def cmd_moments(args) -> int:
    psf = build_psf(args)
    diag = validate_psf(psf)
    out = Output(args, "p2 in 1/length^2, p4 in 1/length^4")
    out.row("quantity", "value")
    status = 0
    try:
        m = psf.moments
        out.row("p2", m.p2)
        out.row("p4", m.p4)
    except NumericalError as exc:
        out.comment(f"error: {exc}")
        status = 3
    out.row("norm_error", diag.norm_error)
    out.row("asymmetry", diag.asymmetry)
    out.row("tail_mass", diag.tail_mass)
    out.row("valid", diag.passed)
    out.close()
    if not diag.passed:
        for v in diag.violations:
            print(f"validation failed: {v}", file=sys.stderr)
        return 2
    return status


def cmd_modes(args) -> int:
    psf = build_psf(args)
    c = build_coeffs(args)
    ms = build_derivative_basis(psf, args.s0_hat, 3)
    pi1, pi2 = mode_functions(c, ms)
    out = Output(args, "x in PSF units, modes in 1/sqrt(length)")
    out.row("x", "pi1", "pi2", "phi1", "phi2", "phi3")
    for row in zip(psf.grid.x, pi1, pi2, *ms.modes[:3]):
        out.row(*row)
    out.close()
    return 0


def cmd_povm_check(args) -> int:
    c = build_coeffs(args)
    d = validate_povm(c)
    out = Output(args, "dimensionless")
    out.row("quantity", "value")
    for name in ("a2", "a3", "b1", "b2", "b3"):
        out.row(name, getattr(c, name))
    try:
        e = epsilons(c)
        out.row("eps_s_sq", e.eps_s_sq)
        out.row("eps_s0_sq", e.eps_s0_sq)
    except NumericalError as exc:
        out.comment(f"epsilons unavailable: {exc}")
    out.row("condition", d.condition)
    out.row("condition_ok", d.condition_ok)
    out.row("min_eigenvalue", d.min_eigenvalue)
    out.row("eigen_ok", d.eigen_ok)
    out.row("agree", d.agree)
    out.row("valid", d.valid)
    out.close()
    if not d.valid:
        for v in d.violations:
            print(f"invalid POVM: {v}", file=sys.stderr)
        return 2
    return 0


def _s_values(args, default):
    if args.scan_s is not None:
        return args.scan_s
    return np.array([args.s if args.s is not None else default])


def cmd_probs(args) -> int:
    psf = build_psf(args)
    meas = Measurement(psf, build_coeffs(args), s0_hat=args.s0_hat)
    out = Output(args, "probabilities")
    out.row("s0", "s", "p1", "p2", "p3")
    for s in _s_values(args, 0.5):
        src = SourceConfig(args.s0, float(s), args.s0_hat)
        out.row(src.s0, src.s, *meas.probs_at(src))
    out.close()
    return 0


def cmd_cfi(args) -> int:
    psf = build_psf(args)
    c = build_coeffs(args)
    meas = Measurement(psf, c, s0_hat=args.s0_hat)
    e = epsilons(c)
    out = Output(args, LENGTH_UNITS)
    out.row("s0", "s", "F_s0s0", "F_s0s", "F_ss", "lead_s0s0", "lead_s0s", "lead_ss",
            "direct_s0s0", "direct_ss")
    for s in _s_values(args, 1e-3):
        src = SourceConfig(args.s0, float(s), args.s0_hat)
        F = cfi_of(meas, src)
        L = cfi_smallsep_closedform(psf.moments, e, src.r)
        D = direct_imaging_cfi(psf, src)
        out.row(src.s0, src.s, F[0, 0], F[0, 1], F[1, 1], L[0, 0], L[0, 1], L[1, 1],
                D[0, 0], D[1, 1])
    out.close()
    return 0


def cmd_qfi(args) -> int:
    psf = build_psf(args)
    ms = build_derivative_basis(psf, args.s0_hat, args.modes)
    out = Output(args, LENGTH_UNITS)
    out.row("s", "Q_s0s0", "Q_s0s", "Q_ss", "Q_s0s0_exact", "Q_s0s0_closedform", "overlap")
    for s in _s_values(args, 1.0):
        src = SourceConfig(args.s0, float(s), args.s0_hat)
        Q = qfi_oracle(psf, ms, src)
        ov = overlap(psf, src.s)
        out.row(src.s, Q[0, 0], Q[0, 1], Q[1, 1], qfi_centroid_exact(psf, src.s),
                qfi_centroid_closedform(psf.moments, ov), ov)
    out.close()
    return 0


def cmd_tradeoff_scan(args) -> int:
    psf = build_psf(args)
    alphas = args.alphas if args.alphas is not None else np.pi / 2 * np.arange(1, 20) / 20
    beta = args.beta if args.beta is not None else np.pi / 6
    s = args.s if args.s is not None else 1e-3 * psf.width
    src = SourceConfig(args.s0_hat + s * 1e-3, s, args.s0_hat)
    ms = build_derivative_basis(psf, args.s0_hat, args.modes)
    Q = qfi_oracle(psf, ms, src)
    rows = []
    for alpha in alphas:
        c = from_angles(alpha, beta)
        e = epsilons(c)
        F = cfi_of(Measurement(psf, c, ms), src)
        r0, rs = regrets(F, Q)
        rows.append((alpha, e.eps_s_sq, e.eps_s0_sq, rs, r0, rs + r0))
    out = Output(args, "dimensionless")
    out.row("alpha", "eps_s_sq", "eps_s0_sq", "regret_s_sq", "regret_s0_sq", "regret_sum")
    for r in sorted(rows):
        out.row(*r)
    out.close()
    return 0


def cmd_fig2(args) -> int:
    psf = build_psf(args)
    alpha = args.alpha if args.alpha is not None else np.pi / 4
    betas = args.betas if args.betas is not None else parse_angle_list(FIG2_BETAS)
    s_values = args.scan_s if args.scan_s is not None else np.linspace(0.01, 2.0, 100) * psf.width
    ms = build_derivative_basis(psf, args.s0_hat, args.modes)
    meas = [(b, Measurement(psf, from_angles(alpha, b), ms)) for b in betas]
    rows = []
    for s in s_values:
        src = SourceConfig(args.s0_hat + float(s) * 1e-3, float(s), args.s0_hat)
        Q = qfi_oracle(psf, ms, src)
        for b, m in meas:
            F = cfi_of(m, src)
            rows.append((src.s, b, F[0, 0], F[1, 1], Q[0, 0], Q[1, 1]))
    out = Output(args, LENGTH_UNITS)
    out.row("s", "beta", "F_s0s0", "F_ss", "Q_s0s0", "Q_ss")
    for r in sorted(rows):
        out.row(*r)
    out.close()
    return 0


def cmd_simulate(args) -> int:
    psf = build_psf(args, default_half_width=12.0)
    meas = Measurement(psf, build_coeffs(args), s0_hat=args.s0_hat)
    s = args.s if args.s is not None else 0.5 * psf.width
    truth = SourceConfig(args.s0, s, args.s0_hat)
    cfg = ExperimentConfig(args.shots, truth, meas, seed=args.seed, repetitions=args.reps)
    res = covariance_study(cfg, Bounds.default(psf.width, args.s0_hat), n_qfi_modes=args.modes)
    out = Output(args, "lengths in PSF units")
    out.row("rep", "s0_hat", "s_hat", "loglik", "converged")
    for i, ((a, b), ll, ok) in enumerate(zip(res.estimates, res.logliks, res.converged)):
        out.row(i, a, b, ll, bool(ok))
    out.comment("summary")
    out.comment(f"mean s0_hat={fmt(res.summary.s0_hat_ml)} s_hat={fmt(res.summary.s_hat_ml)} "
                f"all_converged={int(res.summary.converged)}")
    out.comment(f"crb diag={fmt(res.crb[0, 0])},{fmt(res.crb[1, 1])} "
                f"offdiag={fmt(res.crb[0, 1])}")
    out.comment(f"quantum limits diag={fmt(res.qcrb_diag[0])},{fmt(res.qcrb_diag[1])}")
    if res.empirical_cov is None:
        out.comment("covariance unavailable: a single repetition gives a point estimate only")
    else:
        cov = res.empirical_cov
        out.comment(f"empirical_cov diag={fmt(cov[0, 0])},{fmt(cov[1, 1])} offdiag={fmt(cov[0, 1])}")
        vr, se = res.variance_ratios, res.variance_ratio_stderr
        out.comment(f"variance/crb ratios={fmt(vr[0])},{fmt(vr[1])} stderr={fmt(se[0])},{fmt(se[1])}")
        out.comment(f"min eig(cov - crb)={fmt(res.excess_min_eigenvalue)} "
                    f"stderr={fmt(res.excess_stderr)}")
    out.close()
    return 0


# ---------------------------------------------------------------- parser

def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("PSF")
    g.add_argument("--sigma", type=float, default=1.0, help="Gaussian PSF width (default 1)")
    g.add_argument("--psf-file", help="two-column x,amplitude CSV instead of a Gaussian")
    g.add_argument("--grid-half-width", type=float, default=None,
                   help="grid half-width in units of sigma (default 8; 12 for simulate)")
    g.add_argument("--grid-points", type=int, default=4096)
    g = common.add_argument_group("measurement")
    g.add_argument("--alpha", type=parse_angle, default=None)
    g.add_argument("--beta", type=parse_angle, default=None)
    g.add_argument("--coeffs", default=None, help="raw POVM coefficients a2,a3,b1,b2,b3")
    g = common.add_argument_group("sources")
    g.add_argument("--s", type=float, default=None, help="separation")
    g.add_argument("--s0", type=float, default=0.0, help="centroid")
    g.add_argument("--s0-hat", type=float, default=0.0, help="alignment guess for the centroid")
    g.add_argument("--scan-s", type=parse_scan, default=None, metavar="LO:HI:N")
    g.add_argument("--betas", type=parse_angle_list, default=None)
    g.add_argument("--alphas", type=parse_angle_list, default=None)
    g.add_argument("--modes", type=int, default=10, help="basis size for the QFI oracle")
    g = common.add_argument_group("simulation / output")
    g.add_argument("--shots", type=int, default=10**6)
    g.add_argument("--reps", type=int, default=200)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--out", default=None, help="write CSV here instead of stdout")

    parser = argparse.ArgumentParser(prog="twosource", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in [
        ("moments", cmd_moments, "momentum moments p2, p4 and PSF diagnostics"),
        ("modes", cmd_modes, "sampled measurement modes pi1, pi2 and basis Phi1..3"),
        ("povm-check", cmd_povm_check, "validate POVM coefficients"),
        ("probs", cmd_probs, "outcome probabilities"),
        ("cfi", cmd_cfi, "classical Fisher information of the POVM and direct imaging"),
        ("qfi", cmd_qfi, "quantum Fisher information"),
        ("tradeoff-scan", cmd_tradeoff_scan, "information split and regrets over alpha"),
        ("fig2", cmd_fig2, "CFI and QFI diagonals versus separation for several beta"),
        ("simulate", cmd_simulate, "Monte Carlo maximum-likelihood study"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
