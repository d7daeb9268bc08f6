"""Characteristic function, eigenvalue enumeration and subspectrum extraction
for the lasso graph: a boundary edge of integer length m attached to a loop
of length 1.

Eigenvalues are the zeros of

    Delta(lam) = S1^[1](m) * S2(1) + S1(m) * (S2^[1](1) + C2(1) - 2),

and for zero potentials they sit exactly at rho = |2*pi*n + alpha_k|
(m branches, alpha_k the roots of tan(rho*m) = -sin(rho)/(2cos(rho)-2)
in (0, pi)) and rho = pi*n (loop-aligned branch 0).  Enumeration brackets
each eigenvalue around its asymptotic position and bisects the sign
change of Delta, with the whole batch of brackets advanced together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from ._bisect import batched_sign_change_roots
from .errors import (
    AssumptionViolation,
    BracketingError,
    IncompleteSubspectrumError,
    NumberingAmbiguityError,
)
from .gridfn import GridFunction
from .quasi_ode import integrate_fundamental_many

__all__ = [
    "LassoProblem",
    "EigenIndex",
    "Subspectrum",
    "SignSequence",
    "AssumptionReport",
    "delta",
    "delta_many",
    "delta0",
    "solve_alpha",
    "enumerate_eigenvalues",
    "extract_subspectrum",
    "asymptotic_residuals",
    "check_assumptions",
]


@dataclass(frozen=True)
class LassoProblem:
    """Potentials of the two edges; the boundary edge has integer length m."""

    m: int
    sigma1: GridFunction
    sigma2: GridFunction

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.sigma1.length != float(self.m):
            raise ValueError("sigma1 must live on [0, m]")
        if self.sigma2.length != 1.0:
            raise ValueError("sigma2 must live on [0, 1]")


class EigenIndex(NamedTuple):
    n: int
    j: int


@dataclass(frozen=True)
class Subspectrum:
    """Branch-k plus branch-0 eigenvalues with their truncation bounds."""

    k: int
    alpha_k: float
    entries: tuple
    n_max: int
    n0_max: int

    @property
    def lambdas(self) -> np.ndarray:
        return np.asarray([lam for _, lam in self.entries], dtype=float)

    @property
    def indices(self):
        return [idx for idx, _ in self.entries]


@dataclass(frozen=True)
class SignSequence:
    """Signs omega_n in {-1, +1} for n = 1..len(omegas).

    `degenerate` lists indices n where |H(nu_n)| was below the resolution
    floor, so the stored +1 is a convention rather than data.
    """

    omegas: tuple
    degenerate: tuple = ()

    def __post_init__(self):
        if any(w not in (-1, 1) for w in self.omegas):
            raise ValueError("omega entries must be -1 or +1")

    def __len__(self):
        return len(self.omegas)


# ---------------------------------------------------------------------------
# entire-function helpers: cos(rho x) and sin(rho x)/rho as functions of lam

def _cos_entire(lam, x):
    lam = np.asarray(lam, dtype=float)
    out = np.empty_like(lam)
    pos = lam >= 0
    out[pos] = np.cos(np.sqrt(lam[pos]) * x)
    out[~pos] = np.cosh(np.sqrt(-lam[~pos]) * x)
    return out


def _sinc_entire(lam, x):
    """sin(rho x)/rho continued through rho = 0 (series) and lam < 0 (sinh)."""
    lam = np.asarray(lam, dtype=float)
    out = np.empty_like(lam)
    z = lam * x * x
    small = np.abs(z) < 1e-8
    zs = z[small]
    out[small] = x * (1.0 - zs / 6.0 + zs * zs / 120.0)
    pos = (~small) & (lam > 0)
    rho = np.sqrt(lam[pos])
    out[pos] = np.sin(rho * x) / rho
    neg = (~small) & (lam < 0)
    tau = np.sqrt(-lam[neg])
    out[neg] = np.sinh(tau * x) / tau
    return out


def delta0(m: int, lam):
    """Closed-form characteristic function of the zero-potential problem."""
    if m < 1:
        raise ValueError("m must be >= 1")
    lam = np.asarray(lam, dtype=float)
    val = (_cos_entire(lam, m) * _sinc_entire(lam, 1)
           + _sinc_entire(lam, m) * (2.0 * _cos_entire(lam, 1) - 2.0))
    return float(val) if val.ndim == 0 else val


def _D(m: int, rho):
    """rho * delta0(m, rho^2): odd and 2*pi-periodic in rho."""
    rho = np.asarray(rho, dtype=float)
    return np.cos(rho * m) * np.sin(rho) + np.sin(rho * m) * (2.0 * np.cos(rho) - 2.0)


def _D_prime(m: int, rho):
    return (-m * np.sin(rho * m) * np.sin(rho) + np.cos(rho * m) * np.cos(rho)
            + m * np.cos(rho * m) * (2.0 * np.cos(rho) - 2.0)
            - 2.0 * np.sin(rho * m) * np.sin(rho))


def solve_alpha(m: int, residual_tol: float = 1e-12):
    """The m roots of tan(rho*m) = -sin(rho)/(2cos(rho)-2) on (0, pi).

    Root k lies strictly inside ((k-1)pi/m, (k-1/2)pi/m); each root is
    polished until |D(alpha_k)| < residual_tol.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    roots = []
    pad = 1e-9 * np.pi / m
    for k in range(1, m + 1):
        lo = (k - 1) * np.pi / m + pad
        hi = (k - 0.5) * np.pi / m - pad
        flo, fhi = _D(m, lo), _D(m, hi)
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi > 0:
            raise BracketingError(
                f"no sign change of D on bracket {k} = ({lo:.12g}, {hi:.12g}) for m={m}")
        r = brentq(lambda x: _D(m, x), lo, hi, xtol=1e-15, rtol=1e-15)
        for _ in range(3):
            dp = _D_prime(m, r)
            if dp == 0.0 or abs(_D(m, r)) < residual_tol:
                break
            r -= _D(m, r) / dp
        if abs(_D(m, r)) >= residual_tol:
            raise BracketingError(f"root {k} for m={m} did not reach residual {residual_tol}")
        roots.append(float(r))
    return roots


def delta_many(problem: LassoProblem, lams, rtol: float = 1e-10, atol: float = 1e-10):
    """Delta(lam) over a batch of lam values (two batched edge integrations)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    _, _, s1, s11 = integrate_fundamental_many(problem.sigma1, lams, rtol, atol)
    c2, _, s2, s21 = integrate_fundamental_many(problem.sigma2, lams, rtol, atol)
    return s11 * s2 + s1 * (s21 + c2 - 2.0)


def delta(problem: LassoProblem, lam: float, rtol: float = 1e-10, atol: float = 1e-10) -> float:
    """Characteristic function of the lasso problem at one lam."""
    return float(delta_many(problem, [lam], rtol, atol)[0])


# ---------------------------------------------------------------------------
# eigenvalue enumeration

def _asymptote_table(m: int, alphas, N: int, N0: int):
    """Target (index, rho0) pairs for |n| <= N on branches 1..m and
    1 <= n <= N0 on branch 0."""
    targets = []
    for k in range(1, m + 1):
        ak = alphas[k - 1]
        for n in range(-N, N + 1):
            targets.append((EigenIndex(n, k), abs(2.0 * np.pi * n + ak)))
    for n in range(1, N0 + 1):
        targets.append((EigenIndex(n, 0), np.pi * n))
    targets.sort(key=lambda t: t[1])
    return targets


def enumerate_eigenvalues(problem: LassoProblem, N: int, N0: int,
                          rtol: float = 1e-10, atol: float = 1e-10,
                          delta_tol: float = 1e-9, bisect_iters: int = 52):
    """Locate and index the eigenvalues around their asymptotic positions.

    Each target gets a bracket in rho capped below half the distance to
    the neighboring asymptotes, so brackets are disjoint and the
    nearest-asymptote assignment is the bracket construction itself.
    Brackets without a sign change of Delta are widened up to the cap and
    reported as numbering ambiguities if the sign change never appears.
    All brackets are bisected together, one batched Delta evaluation per
    sweep.
    """
    if N < 1 or N0 < 1:
        raise ValueError("N and N0 must be >= 1")
    alphas = solve_alpha(problem.m)
    targets = _asymptote_table(problem.m, alphas, N, N0)
    rho0 = np.asarray([t[1] for t in targets])

    gaps = np.full(len(targets), np.pi)
    if len(targets) > 1:
        d = np.diff(rho0)
        gaps[:-1] = np.minimum(gaps[:-1], d)
        gaps[1:] = np.minimum(gaps[1:], d)
    cap = np.minimum(0.49 * gaps, 0.98 * np.pi / 2)
    w = np.minimum(0.40 * gaps, 1.4)

    def f(rho):
        return delta_many(problem, rho * rho, rtol, atol)

    try:
        rho_hat, f_hat = batched_sign_change_roots(f, rho0, w, cap, iters=bisect_iters)
    except BracketingError as exc:
        raise NumberingAmbiguityError(
            f"eigenvalue bracket failed around an asymptote: {exc}") from exc

    lam_hat = rho_hat * rho_hat
    resid = np.abs(f_hat)
    bad = resid > delta_tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NumberingAmbiguityError(
            f"|Delta| = {resid[i]:.3g} above {delta_tol} at recovered root for {targets[i][0]}",
            bracket=(float(rho_hat[i] - w[i]), float(rho_hat[i] + w[i])))

    srt = np.sort(rho_hat)
    close = np.diff(srt) < 1e-10 * (1.0 + srt[:-1])
    if np.any(close):
        i = int(np.argmax(close))
        raise NumberingAmbiguityError(
            "two brackets converged to the same root",
            bracket=(float(srt[i]), float(srt[i + 1])))
    return [(targets[i][0], float(lam_hat[i])) for i in range(len(targets))]


def extract_subspectrum(eigs, k: int, alpha_k: float) -> Subspectrum:
    """Filter the branch-k and branch-0 entries out of an enumeration."""
    if k < 1:
        raise ValueError("branch index k must be >= 1")
    branch = {idx: lam for idx, lam in eigs if idx.j == k}
    loop = {idx: lam for idx, lam in eigs if idx.j == 0}
    if not branch:
        raise ValueError(f"no entries for branch k={k} (k out of 1..m?)")
    n_max = max(idx.n for idx in branch)
    n0_max = max((idx.n for idx in loop), default=0)
    entries = []
    for n in range(-n_max, n_max + 1):
        key = EigenIndex(n, k)
        if key not in branch:
            raise IncompleteSubspectrumError(f"missing index {key}")
        entries.append((key, branch[key]))
    for n in range(1, n0_max + 1):
        key = EigenIndex(n, 0)
        if key not in loop:
            raise IncompleteSubspectrumError(f"missing index {key}")
        entries.append((key, loop[key]))
    return Subspectrum(k=k, alpha_k=float(alpha_k), entries=tuple(entries),
                       n_max=n_max, n0_max=n0_max)


def asymptotic_residuals(sub: Subspectrum) -> np.ndarray:
    """sqrt(lam) minus the asymptotic rho position, per entry."""
    lams = sub.lambdas
    if np.any(lams <= 0):
        raise AssumptionViolation("A2", f"nonpositive eigenvalue min={lams.min():.6g}")
    res = np.empty(len(sub.entries))
    for i, (idx, lam) in enumerate(sub.entries):
        rho0 = np.pi * idx.n if idx.j == 0 else abs(2.0 * np.pi * idx.n + sub.alpha_k)
        res[i] = np.sqrt(lam) - rho0
    return res


@dataclass
class AssumptionReport:
    """Result of checking A1 (distinct), A2 (positive), A3 (no common zeros
    of h and d, probed as min |d(nu_n)|)."""

    a1_ok: bool
    a2_ok: bool
    a3_ok: bool
    min_gap: float
    min_lambda: float
    min_abs_d_at_nu: float
    d_at_nus: list = field(default_factory=list)
    a3_failing_n: list = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return self.a1_ok and self.a2_ok and self.a3_ok

    def summary(self) -> str:
        parts = [
            f"A1 {'ok' if self.a1_ok else 'FAIL'} (min gap {self.min_gap:.3e})",
            f"A2 {'ok' if self.a2_ok else 'FAIL'} (min lambda {self.min_lambda:.6g})",
            f"A3 {'ok' if self.a3_ok else 'FAIL'} (min |d(nu_n)| {self.min_abs_d_at_nu:.3e}"
            + (f", zero at n in {self.a3_failing_n}" if self.a3_failing_n else "") + ")",
        ]
        return "; ".join(parts)


def check_assumptions(sub: Subspectrum, h_at: Callable, d_at: Callable, nus,
                      a1_scale: float = 1e-8, a3_tol: float = 1e-8) -> AssumptionReport:
    """Report-style assumption check; never raises.

    A1 flags eigenvalue pairs closer than a1_scale*(1+|lam|); A2 requires
    all eigenvalues positive; A3 requires |d(nu_n)| > a3_tol at the zeros
    nu_n of h.
    """
    lams = np.sort(sub.lambdas)
    diffs = np.diff(lams)
    min_gap = float(diffs.min()) if diffs.size else np.inf
    a1_ok = bool(np.all(diffs > a1_scale * (1.0 + np.abs(lams[1:])))) if diffs.size else True
    min_lambda = float(lams.min()) if lams.size else np.inf
    a2_ok = min_lambda > 0.0

    nus = np.asarray(list(nus), dtype=float)
    d_vals = np.asarray([float(d_at(nu)) for nu in nus])
    min_abs_d = float(np.min(np.abs(d_vals))) if d_vals.size else np.inf
    failing = [int(n) for n in (np.nonzero(np.abs(d_vals) <= a3_tol)[0] + 1)]
    return AssumptionReport(
        a1_ok=a1_ok, a2_ok=a2_ok, a3_ok=not failing,
        min_gap=min_gap, min_lambda=min_lambda, min_abs_d_at_nu=min_abs_d,
        d_at_nus=[float(v) for v in d_vals], a3_failing_n=failing)
