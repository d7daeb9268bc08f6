"""Periodic inverse problem on the loop.

Given h(lam) = S2(1, lam), d(lam) = S2^[1](1, lam) + C2(1, lam) - 2 and
the sign sequence Omega, the loop potential is recovered in five steps:

  1. the Dirichlet spectrum {nu_n} as the zeros of h,
  2. H(nu_n) = omega_n * sqrt(d(nu_n) * (d(nu_n) + 4)),
  3. S2^[1](1, nu_n) = (d(nu_n) + 2 - H(nu_n)) / 2,
  4. norming constants beta_n = h'(nu_n) * S2^[1](1, nu_n),
  5. a Gelfand-Levitan reconstruction from {nu_n, beta_n}.

On the radicand in step 2: combining the Wronskian identity with the
definitions gives H^2 - (d+2)^2 = -4*(1 + C2^[1]*h), so at a zero of h
H^2 = (d+2)^2 - 4 = d*(d+4).  The step-consistency tests adjudicate this
form against direct integration.

Step 5 is implemented for the regular subclass (loop potential with
square-integrable derivative) via the classical Gelfand-Levitan integral
equation and is the swappable backend for singular-potential theories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._bisect import batched_sign_change_roots
from .errors import (
    AssumptionViolation,
    IllConditionedError,
    MultipleZeroError,
    SpectralDataInconsistencyError,
    StageError,
)
from .gridfn import GridFunction
from .quasi_ode import integrate_fundamental_many
from .spectral_forward import SignSequence

__all__ = [
    "PeriodicSpectralData",
    "loop_evaluators",
    "loop_dirichlet_spectrum",
    "dirichlet_zeros",
    "compute_H_at_nu",
    "compute_s21_at_nu",
    "h_derivative",
    "compute_norming_constants",
    "forward_spectral_data",
    "extract_sign_sequence",
    "gl_reconstruct",
    "algorithm1",
    "save_spectral_data",
    "load_spectral_data",
]

# |H| below this floor cannot be given a meaningful sign from double
# precision endpoint data; such omegas are stored as +1 and flagged.
OMEGA_RESOLUTION_FLOOR = 1e-7


@dataclass(frozen=True)
class PeriodicSpectralData:
    """Dirichlet eigenvalues of the loop with the Algorithm-1 intermediates."""

    nus: tuple
    H_vals: tuple
    s21_vals: tuple
    betas: tuple
    omegas: SignSequence

    def validate(self):
        nus = np.asarray(self.nus)
        if np.any(np.diff(nus) <= 0):
            raise ValueError("nus must be strictly increasing")
        if any(b <= 0 for b in self.betas):
            raise SpectralDataInconsistencyError("norming constants must be positive")
        for H, w in zip(self.H_vals, self.omegas.omegas):
            if H * w < -OMEGA_RESOLUTION_FLOOR:
                raise SpectralDataInconsistencyError("sign sequence inconsistent with H values")
        return self


def loop_evaluators(sigma2: GridFunction, rtol: float = 1e-10, atol: float = 1e-10):
    """Direct-integration evaluators (h_at, d_at) for the loop potential.

    Both accept a scalar or an array of lam values.
    """
    def h_at(lam):
        _, _, s, _ = integrate_fundamental_many(sigma2, np.atleast_1d(lam), rtol, atol)
        return float(s[0]) if np.isscalar(lam) else s

    def d_at(lam):
        c, _, _, s1 = integrate_fundamental_many(sigma2, np.atleast_1d(lam), rtol, atol)
        out = s1 + c - 2.0
        return float(out[0]) if np.isscalar(lam) else out

    return h_at, d_at


def dirichlet_zeros(h_at, N: int, polish_tol: float = 1e-10):
    """First N zeros nu_n of h, bracketed around (pi n)^2 in rho.

    h_at must accept an array of lam values.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    if N == 0:
        return []
    centers = np.pi * np.arange(1, N + 1, dtype=float)

    def f(rho):
        return np.asarray(h_at(rho * rho), dtype=float)

    roots, fvals = batched_sign_change_roots(f, centers, w_init=1.2,
                                             w_cap=0.49 * np.pi, iters=52)
    if np.any(np.abs(fvals) > polish_tol):
        i = int(np.argmax(np.abs(fvals)))
        raise SpectralDataInconsistencyError(
            f"|h(nu_{i+1})| = {abs(fvals[i]):.3g} above polish tolerance {polish_tol}")
    return [float(r * r) for r in roots]


def loop_dirichlet_spectrum(sigma2: GridFunction, N: int, rtol: float = 1e-10,
                            atol: float = 1e-10, polish_tol: float = 1e-10):
    """Dirichlet eigenvalues of the loop potential by direct integration."""
    h_at, _ = loop_evaluators(sigma2, rtol, atol)
    return dirichlet_zeros(h_at, N, polish_tol)


def compute_H_at_nu(d_val: float, omega: int, radicand_tol: float = 0.0) -> float:
    """H(nu_n) = omega * sqrt(d * (d + 4)) at a zero of h.

    A radicand within radicand_tol of zero is collapsed to H = 0 (the
    no-ambiguity case where nu_n sits at a gap endpoint); a radicand more
    negative than that signals inconsistent spectral data.
    """
    if omega not in (-1, 1):
        raise ValueError("omega must be -1 or +1")
    rad = d_val * (d_val + 4.0)
    if rad < -radicand_tol:
        raise SpectralDataInconsistencyError(
            f"negative radicand d*(d+4) = {rad:.6g} (d = {d_val:.6g})")
    if abs(rad) <= radicand_tol:
        return 0.0
    return omega * np.sqrt(rad)


def compute_s21_at_nu(d_val: float, H_val: float) -> float:
    """S2^[1](1, nu_n) = (d(nu_n) + 2 - H(nu_n)) / 2."""
    return (d_val + 2.0 - H_val) / 2.0


def h_derivative(h_at, nu: float, rel_step: float = 1e-3, min_deriv: float = 1e-12) -> float:
    """dh/dlam at a simple zero nu, by Richardson-extrapolated central
    differences with the step scaled to max(1, |nu|)."""
    s = rel_step * max(1.0, abs(nu))
    d1 = (float(h_at(nu + s)) - float(h_at(nu - s))) / (2.0 * s)
    d2 = (float(h_at(nu + s / 2)) - float(h_at(nu - s / 2))) / s
    deriv = (4.0 * d2 - d1) / 3.0
    if abs(deriv) < min_deriv:
        raise MultipleZeroError(f"|h'({nu:.6g})| = {abs(deriv):.3g} below {min_deriv}")
    return deriv


def compute_norming_constants(data: PeriodicSpectralData, h_at):
    """beta_n = h'(nu_n) * S2^[1](1, nu_n); all must come out positive."""
    if not data.s21_vals:
        raise ValueError("s21_vals not populated")
    betas = []
    for nu, s21 in zip(data.nus, data.s21_vals):
        b = h_derivative(h_at, nu) * s21
        if b <= 0:
            raise SpectralDataInconsistencyError(
                f"nonpositive norming constant beta = {b:.6g} at nu = {nu:.6g}")
        betas.append(b)
    return betas


def extract_sign_sequence(H_vals, floor: float = OMEGA_RESOLUTION_FLOOR) -> SignSequence:
    """omega_n = sign H(nu_n); values under the floor get +1 and are flagged."""
    omegas, degenerate = [], []
    for n, H in enumerate(H_vals, start=1):
        if abs(H) < floor:
            omegas.append(1)
            degenerate.append(n)
        else:
            omegas.append(1 if H > 0 else -1)
    return SignSequence(omegas=tuple(omegas), degenerate=tuple(degenerate))


def forward_spectral_data(sigma2: GridFunction, N: int, rtol: float = 1e-10,
                          atol: float = 1e-10) -> PeriodicSpectralData:
    """Spectral data of a known loop potential by direct integration.

    nu_n are the zeros of the integrated h; H and S2^[1] come straight
    from endpoint values; beta_n from the derivative formula.
    """
    h_at, _ = loop_evaluators(sigma2, rtol, atol)
    nus = dirichlet_zeros(h_at, N)
    c, _, _, s21 = integrate_fundamental_many(sigma2, nus, rtol, atol)
    H_vals = c - s21
    omegas = extract_sign_sequence(H_vals)
    betas = [h_derivative(h_at, nu) * s for nu, s in zip(nus, s21)]
    data = PeriodicSpectralData(nus=tuple(nus), H_vals=tuple(float(v) for v in H_vals),
                                s21_vals=tuple(float(v) for v in s21),
                                betas=tuple(betas), omegas=omegas)
    return data.validate()


# ---------------------------------------------------------------------------
# Gelfand-Levitan backend (regular subclass)

def gl_reconstruct(nus, betas, N: int, grid: int = 200, nystrom: int = 201,
                   cond_max: float = 1e10) -> GridFunction:
    """Recover the loop potential from Dirichlet spectral data {nu_n, beta_n}.

    The input kernel compares the data against the zero-potential
    reference (nu_n^0 = (pi n)^2, beta_n^0 = 1/(2 nu_n^0)):

        F(x, t) = sum_{n <= N} [ sin(r_n x) sin(r_n t) / (nu_n beta_n)
                                 - 2 sin(pi n x) sin(pi n t) ],   r_n = sqrt(nu_n).

    For each output node x the second-kind equation

        K(x, t) + F(x, t) + int_0^x K(x, s) F(s, t) ds = 0

    is solved on a fixed trapezoidal Nystrom layout scaled to [0, x]
    (the fixed layout keeps the diagonal x -> K(x, x) smooth).  The
    potential derivative is q = 2 d/dx K(x, x), whose antiderivative
    telescopes, so the returned potential is sigma(x) = 2 K(x, x) with
    sigma(0) = 0 (the additive constant is a gauge choice).

    Conditioning of the Nystrom system is probed at x = 1 where it
    peaks; beyond cond_max the truncation is rejected as too aggressive.
    """
    nus = np.asarray(nus, dtype=float)[:N]
    betas = np.asarray(betas, dtype=float)[:N]
    if len(nus) < N or len(betas) < N:
        raise ValueError(f"need at least N={N} data pairs")
    if np.any(np.diff(nus) <= 0):
        raise ValueError("nus must be strictly increasing")
    if np.any(betas <= 0):
        raise SpectralDataInconsistencyError("norming constants must be positive")

    r = np.sqrt(nus)
    wgt = 1.0 / (nus * betas)
    npi = np.pi * np.arange(1, N + 1)

    def kernel(a, b):
        # a: column of abscissae, b: row; separable finite-rank sum
        sa = np.sin(np.multiply.outer(a, r))
        sb = np.sin(np.multiply.outer(b, r))
        za = np.sin(np.multiply.outer(a, npi))
        zb = np.sin(np.multiply.outer(b, npi))
        return (sa * wgt) @ sb.T - 2.0 * za @ zb.T

    xs = np.linspace(0.0, 1.0, grid)
    tau = np.linspace(0.0, 1.0, nystrom)
    wq = np.full(nystrom, 1.0 / (nystrom - 1))
    wq[0] *= 0.5
    wq[-1] *= 0.5

    diag = np.zeros(grid)
    for i, x in enumerate(xs):
        if x == 0.0:
            continue
        s = x * tau
        Fm = kernel(s, s)
        M = np.eye(nystrom) + Fm.T * (x * wq)[None, :]
        if i == grid - 1:
            cond = np.linalg.cond(M)
            if cond > cond_max:
                raise IllConditionedError(
                    f"Nystrom system condition {cond:.3g} exceeds {cond_max:.3g}; "
                    "truncation too aggressive")
        g = np.linalg.solve(M, -kernel(np.asarray([x]), s)[0])
        diag[i] = g[-1]
    return GridFunction(1.0, 2.0 * diag)


def algorithm1(h_at, d_at, omegas: SignSequence, N: int, *,
               a3_tol: float = 1e-8, enforce_a3: bool = True,
               radicand_tol: float = 1e-6, grid: int = 200, nystrom: int = 201,
               return_data: bool = False):
    """Loop potential from h, d and Omega; the five-step periodic inverse.

    The A3 gate rejects data whose d vanishes at a zero of h (within
    a3_tol).  enforce_a3=False admits such degenerate data and collapses
    the corresponding H to zero, which is the exact value whenever the
    Dirichlet eigenvalue sits at a gap endpoint (reflection-symmetric
    potentials do this at every index).
    """
    try:
        nus = dirichlet_zeros(h_at, N)
    except Exception as exc:
        raise StageError("find-dirichlet-zeros", exc) from exc
    if len(omegas) < len(nus):
        raise ValueError(f"omegas has {len(omegas)} entries, need {len(nus)}")

    d_vals = [float(d_at(nu)) for nu in nus]
    failing = [n for n, dv in enumerate(d_vals, start=1) if abs(dv) <= a3_tol]
    if enforce_a3 and failing:
        raise AssumptionViolation(
            "A3", f"d(nu_n) = 0 within {a3_tol} at n in {failing}",
            diagnostics={"failing_n": failing, "d_at_nus": d_vals})

    try:
        H_vals = [compute_H_at_nu(dv, w, radicand_tol)
                  for dv, w in zip(d_vals, omegas.omegas)]
    except SpectralDataInconsistencyError as exc:
        raise StageError("compute-H", exc) from exc
    s21_vals = [compute_s21_at_nu(dv, H) for dv, H in zip(d_vals, H_vals)]
    data = PeriodicSpectralData(nus=tuple(nus), H_vals=tuple(H_vals),
                                s21_vals=tuple(s21_vals), betas=(),
                                omegas=omegas)
    try:
        betas = compute_norming_constants(data, h_at)
    except (SpectralDataInconsistencyError, MultipleZeroError) as exc:
        raise StageError("norming-constants", exc) from exc
    data = PeriodicSpectralData(nus=data.nus, H_vals=data.H_vals,
                                s21_vals=data.s21_vals, betas=tuple(betas),
                                omegas=omegas)
    try:
        sigma2 = gl_reconstruct(data.nus, data.betas, N=len(nus),
                                grid=grid, nystrom=nystrom)
    except (IllConditionedError, ValueError, SpectralDataInconsistencyError) as exc:
        raise StageError("gelfand-levitan", exc) from exc
    return (sigma2, data) if return_data else sigma2


# ---------------------------------------------------------------------------
# spectral-data checkpoint files

def save_spectral_data(path, data: PeriodicSpectralData):
    payload = {
        "nus": list(data.nus),
        "betas": list(data.betas),
        "omegas": list(data.omegas.omegas),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_spectral_data(path):
    """Returns (nus, betas, SignSequence) from a checkpoint file."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return (list(map(float, payload["nus"])), list(map(float, payload["betas"])),
            SignSequence(omegas=tuple(int(w) for w in payload["omegas"])))
