"""Command-line interface: forward runs, inversion, round trips, diagnostics.

Numeric CSV output uses 15 significant digits so independent runs can be
compared byte for byte.  Exit codes: 0 success, 2 assumption violation,
1 computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .errors import AssumptionViolation, ComputationError
from .gridfn import l2_error_mod_constant
from .partial_inverse import algorithm2
from .periodic_inverse import (
    dirichlet_zeros,
    extract_sign_sequence,
    loop_evaluators,
    save_spectral_data,
)
from .quasi_ode import integrate_fundamental_many
from .spectral_forward import (
    LassoProblem,
    Subspectrum,
    check_assumptions,
    enumerate_eigenvalues,
    extract_subspectrum,
    solve_alpha,
    _D,
)

_FMT = "%.15g"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if np.isnan(v) else _FMT % v


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _asymptote(idx, alphas):
    return np.pi * idx.n if idx.j == 0 else abs(2.0 * np.pi * idx.n + alphas[idx.j - 1])


def _eig_rows(eigs, alphas):
    rows = []
    for idx, lam in eigs:
        rho = np.sqrt(lam) if lam > 0 else float("nan")
        a = _asymptote(idx, alphas)
        rows.append((idx.n, idx.j, lam, rho, a, rho - a))
    return rows


def _forward_loop_data(sigma2, n_loop, rtol, atol):
    """nu_n, H(nu_n) and the extracted sign sequence of the true loop."""
    h_at, d_at = loop_evaluators(sigma2, rtol, atol)
    nus = dirichlet_zeros(h_at, n_loop)
    c, _, _, s21 = integrate_fundamental_many(sigma2, nus, rtol, atol)
    H = c - s21
    return nus, H, extract_sign_sequence(H), h_at, d_at


def run_forward(cfg: ExperimentConfig, out: Path):
    s1, s2 = cfg.build_potentials()
    problem = LassoProblem(cfg.m, s1, s2)
    alphas = solve_alpha(cfg.m)
    eigs = enumerate_eigenvalues(problem, cfg.n, cfg.n0, cfg.rtol, cfg.atol)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "alpha.csv",
               ["k", "alpha", "interval_lo", "interval_hi", "residual"],
               [(k + 1, a, k * np.pi / cfg.m, (k + 0.5) * np.pi / cfg.m, _D(cfg.m, a))
                for k, a in enumerate(alphas)])
    _write_csv(out / "eigenvalues.csv",
               ["n", "j", "lambda", "rho", "asymptote", "residual"],
               _eig_rows(eigs, alphas))
    sub = extract_subspectrum(eigs, cfg.k, alphas[cfg.k - 1])
    _write_csv(out / "subspectrum.csv",
               ["n", "j", "lambda", "rho", "asymptote", "residual"],
               _eig_rows(list(sub.entries), alphas))
    nus, H, omegas, h_at, d_at = _forward_loop_data(s2, cfg.n_loop, cfg.rtol, cfg.atol)
    _write_json(out / "omegas.json",
                {"omegas": list(omegas.omegas),
                 "degenerate_indices": list(omegas.degenerate)})
    return problem, alphas, eigs, sub, (nus, H, omegas, h_at, d_at)


def run_subspectrum(cfg: ExperimentConfig, out: Path):
    run_forward(cfg, out)
    print(f"subspectrum for branch k={cfg.k} written to {out / 'subspectrum.csv'}")


def run_check(cfg: ExperimentConfig, out: Path):
    problem, alphas, eigs, sub, (nus, H, omegas, h_at, d_at) = run_forward(cfg, out)
    shifted = _shifted_subspectrum(sub, cfg.shift)
    report = check_assumptions(shifted, h_at, d_at, nus,
                               a1_scale=cfg.a1_scale, a3_tol=cfg.a3_tol)
    payload = {
        "a1_ok": report.a1_ok, "a2_ok": report.a2_ok, "a3_ok": report.a3_ok,
        "min_gap": report.min_gap, "min_lambda": report.min_lambda,
        "min_abs_d_at_nu": report.min_abs_d_at_nu,
        "a3_failing_n": report.a3_failing_n,
        "d_at_nus": report.d_at_nus,
        "shift": cfg.shift,
    }
    _write_json(out / "check.json", payload)
    print(report.summary())
    if not report.all_ok:
        which = "A1" if not report.a1_ok else ("A2" if not report.a2_ok else "A3")
        detail = (f"d(nu_n) = 0 within {cfg.a3_tol} at n in {report.a3_failing_n}"
                  if which == "A3" else report.summary())
        raise AssumptionViolation(which, detail, diagnostics=payload)


def _shifted_subspectrum(sub, shift):
    if shift == 0.0:
        return sub
    entries = tuple((idx, lam + shift) for idx, lam in sub.entries)
    return Subspectrum(k=sub.k, alpha_k=sub.alpha_k, entries=entries,
                       n_max=sub.n_max, n0_max=sub.n0_max)


def _invert_common(cfg: ExperimentConfig, out: Path):
    t0 = time.perf_counter()
    problem, alphas, eigs, sub, (nus, H, omegas, h_at, d_at) = run_forward(cfg, out)
    t_forward = time.perf_counter() - t0

    report = check_assumptions(_shifted_subspectrum(sub, cfg.shift), h_at, d_at, nus,
                               a1_scale=cfg.a1_scale, a3_tol=cfg.a3_tol)
    if not (report.a1_ok and report.a2_ok):
        which = "A1" if not report.a1_ok else "A2"
        raise AssumptionViolation(which, report.summary())
    if not report.a3_ok and not cfg.allow_degenerate_signs:
        raise AssumptionViolation(
            "A3", f"d(nu_n) = 0 within {cfg.a3_tol} at n in {report.a3_failing_n}; "
            "set numerics.allow_degenerate_signs to proceed with H collapsed to 0",
            diagnostics={"failing_n": report.a3_failing_n})

    t0 = time.perf_counter()
    sigma2_rec, details, data = algorithm2(
        problem.sigma1, sub, omegas,
        n_loop=cfg.n_loop, kn_grid=cfg.kn_grid, cond_max=cfg.cond_max,
        a3_tol=cfg.a3_tol, enforce_a3=not cfg.allow_degenerate_signs,
        radicand_tol=cfg.radicand_tol, gl_grid=cfg.gl_grid,
        gl_nystrom=cfg.gl_nystrom, rtol=cfg.rtol, atol=cfg.atol,
        return_details=True)
    t_inverse = time.perf_counter() - t0
    save_spectral_data(out / "spectral_data.json", data)
    _write_json(out / "reconstruction.json", {
        "K": [float(v) for v in details.K.values],
        "N": [float(v) for v in details.N.values],
        "residual_norm": details.residual_norm,
        "gram_condition": details.gram_condition,
        "recovered_sigma2": [float(v) for v in sigma2_rec.values],
    })
    return problem, sigma2_rec, details, report, {"forward_s": t_forward, "inverse_s": t_inverse}


def run_invert(cfg: ExperimentConfig, out: Path):
    _, sigma2_rec, details, _, timings = _invert_common(cfg, out)
    print(f"reconstruction written to {out / 'reconstruction.json'} "
          f"(gram condition {details.gram_condition:.6g}, "
          f"residual {details.residual_norm:.3g}, "
          f"inverse stage {timings['inverse_s']:.2f}s)")


def run_roundtrip(cfg: ExperimentConfig, out: Path):
    problem, sigma2_rec, details, report, timings = _invert_common(cfg, out)
    err = l2_error_mod_constant(sigma2_rec, problem.sigma2)
    payload = {
        "l2_error_mod_constant": err,
        "residual_norm": details.residual_norm,
        "gram_condition": details.gram_condition,
        "assumptions": {
            "a1_ok": report.a1_ok, "a2_ok": report.a2_ok, "a3_ok": report.a3_ok,
            "a3_failing_n": report.a3_failing_n,
        },
        "timings": timings,
    }
    _write_json(out / "roundtrip.json", payload)
    print(f"roundtrip L2 error (mod constant) = {err:.6g}")
    return payload


def run_alpha(cfg: ExperimentConfig, out: Path):
    alphas = solve_alpha(cfg.m)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "alpha.csv",
               ["k", "alpha", "interval_lo", "interval_hi", "residual"],
               [(k + 1, a, k * np.pi / cfg.m, (k + 0.5) * np.pi / cfg.m, _D(cfg.m, a))
                for k, a in enumerate(alphas)])
    for k, a in enumerate(alphas, start=1):
        print(f"alpha_{k} = {_FMT % a}")


def emit_plot_data(m: int, out: Path, points: int = 2000, pole_tol: float = 1e-3):
    """CSV of (rho, tan(rho m), -sin(rho)/(2cos(rho)-2)) on (0, pi), with
    NaN masking at the tangent poles and at the rho -> 0 blow-up."""
    out.mkdir(parents=True, exist_ok=True)
    rho = np.linspace(0.0, np.pi, points + 2)[1:-1]
    tan_col = np.tan(rho * m)
    # poles of tan(rho m) at rho m = pi/2 + j*pi
    dist = np.abs((rho * m - np.pi / 2) % np.pi)
    dist = np.minimum(dist, np.pi - dist) / m
    tan_col[dist < pole_tol] = np.nan
    denom = 2.0 * np.cos(rho) - 2.0
    ratio = -np.sin(rho) / denom
    ratio[rho < pole_tol] = np.nan
    _write_csv(out / "plotdata.csv", ["rho", "tan_rho_m", "neg_sin_ratio"],
               zip(rho, tan_col, ratio))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lassospec",
        description="Forward and partial inverse spectral problems on a lasso graph")
    parser.add_argument("command",
                        choices=["forward", "subspectrum", "invert", "roundtrip",
                                 "alpha", "plotdata", "check"])
    parser.add_argument("--config", required=True, help="TOML experiment config")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--n", type=int, default=None, help="override truncation N")
    parser.add_argument("--k", type=int, default=None, help="override branch index")
    parser.add_argument("--shift", type=float, default=None,
                        help="uniform spectrum shift for assumption checks")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.n is not None:
            cfg.n = cfg.n0 = cfg.n_loop = args.n
        if args.k is not None:
            cfg.k = args.k
        if args.shift is not None:
            cfg.shift = args.shift
        cfg.validate()
        out = Path(args.out if args.out is not None else cfg.out_dir)

        if args.command == "forward":
            run_forward(cfg, out)
            print(f"forward outputs written to {out}")
        elif args.command == "subspectrum":
            run_subspectrum(cfg, out)
        elif args.command == "invert":
            run_invert(cfg, out)
        elif args.command == "roundtrip":
            run_roundtrip(cfg, out)
        elif args.command == "alpha":
            run_alpha(cfg, out)
        elif args.command == "plotdata":
            emit_plot_data(cfg.m, out)
            print(f"plot data written to {out / 'plotdata.csv'}")
        elif args.command == "check":
            run_check(cfg, out)
        return 0
    except AssumptionViolation as exc:
        print(f"assumption violation: {exc}", file=sys.stderr)
        return 2
    except (ComputationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
