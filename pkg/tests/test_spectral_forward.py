import math

import numpy as np
import pytest

from lassospec import (
    AssumptionViolation,
    GridFunction,
    IncompleteSubspectrumError,
    LassoProblem,
    NumberingAmbiguityError,
    SignSequence,
    Subspectrum,
    asymptotic_residuals,
    check_assumptions,
    delta,
    delta0,
    delta_many,
    enumerate_eigenvalues,
    extract_subspectrum,
    solve_alpha,
)
from lassospec.errors import BracketingError
from lassospec._bisect import batched_sign_change_roots
from lassospec.spectral_forward import EigenIndex, _D


def h0(lam):
    lam = np.asarray(lam, dtype=float)
    r = np.sqrt(lam.astype(complex))
    return np.where(np.abs(lam) < 1e-14, 1.0, (np.sin(r) / r).real)


def d0(lam):
    lam = np.asarray(lam, dtype=float)
    r = np.sqrt(lam.astype(complex))
    return (2 * np.cos(r)).real - 2.0


# ---------------------------------------------------------------- delta0

def test_delta0_vanishes_at_loop_eigenvalues():
    assert delta0(5, np.pi ** 2) == pytest.approx(0.0, abs=1e-12)
    assert delta0(5, (2 * np.pi) ** 2) == pytest.approx(0.0, abs=1e-12)


def test_delta0_arithmetic_oracle_m3():
    # rho = 0.5: cos(1.5) sin(0.5)/0.5 + sin(1.5)/0.5 * (2cos(0.5) - 2)
    want = (math.cos(1.5) * math.sin(0.5) / 0.5
            + math.sin(1.5) / 0.5 * (2 * math.cos(0.5) - 2))
    assert delta0(3, 0.25) == pytest.approx(want, rel=1e-14)


def test_delta_arithmetic_oracle_m2():
    # rho = 1: cos(2) sin(1) + sin(2) (2cos(1) - 2), which is -1.18619...
    want = math.cos(2) * math.sin(1) + math.sin(2) * (2 * math.cos(1) - 2)
    z2, z1 = GridFunction.zero(2.0), GridFunction.zero(1.0)
    assert delta(LassoProblem(2, z2, z1), 1.0) == pytest.approx(want, abs=1e-10)
    assert delta0(2, 1.0) == pytest.approx(want, rel=1e-14)


def test_delta_matches_delta0_on_zero_potentials():
    for m in (1, 2, 5):
        prob = LassoProblem(m, GridFunction.zero(float(m)), GridFunction.zero(1.0))
        lams = np.linspace(0.0, 500.0, 60)
        got = delta_many(prob, lams)
        assert np.max(np.abs(got - delta0(m, lams))) < 1e-9


def test_delta_zero_at_pi_squared_m1():
    prob = LassoProblem(1, GridFunction.zero(1.0), GridFunction.zero(1.0))
    assert abs(delta(prob, np.pi ** 2)) < 1e-10


def test_delta_zero_at_alpha_root():
    al = solve_alpha(5)
    prob = LassoProblem(5, GridFunction.zero(5.0), GridFunction.zero(1.0))
    assert abs(delta(prob, al[0] ** 2)) < 1e-9


def test_D_odd_and_periodic():
    rho = np.linspace(-3.0, 3.0, 37)
    assert np.max(np.abs(_D(4, rho) + _D(4, -rho))) < 1e-10
    assert np.max(np.abs(_D(4, rho + 2 * np.pi) - _D(4, rho))) < 1e-10


# ------------------------------------------------------------ solve_alpha

def test_alpha_m1_bracket_and_root():
    al = solve_alpha(1)
    assert len(al) == 1
    assert 0 < al[0] < np.pi / 2
    assert abs(delta0(1, al[0] ** 2)) < 1e-12


@pytest.mark.parametrize("m", [1, 2, 5])
def test_alpha_intervals_and_residuals(m):
    al = solve_alpha(m)
    assert len(al) == m
    for k, a in enumerate(al, start=1):
        assert (k - 1) * np.pi / m < a < (k - 0.5) * np.pi / m
        assert abs(_D(m, a)) < 1e-12
        assert abs(delta0(m, a * a)) < 1e-10


def test_alpha_roots_are_simple():
    m = 5
    for a in solve_alpha(m):
        eps = 1e-6
        assert _D(m, a - eps) * _D(m, a + eps) < 0
        assert abs((_D(m, a + eps) - _D(m, a - eps)) / (2 * eps)) > 1e-3


# -------------------------------------------------------------- enumerate

def test_enumerate_zero_potential_m5_exact():
    prob = LassoProblem(5, GridFunction.zero(5.0), GridFunction.zero(1.0))
    al = solve_alpha(5)
    eigs = dict(enumerate_eigenvalues(prob, 2, 3))
    assert len(eigs) == 5 * 5 + 3
    for (n, j), lam in eigs.items():
        rho0 = np.pi * n if j == 0 else abs(2 * np.pi * n + al[j - 1])
        assert lam == pytest.approx(rho0 ** 2, rel=1e-10)


def test_enumerate_branch0_simple_sign_change_zeros_m1():
    prob = LassoProblem(1, GridFunction.zero(1.0), GridFunction.zero(1.0))
    eigs = dict(enumerate_eigenvalues(prob, 1, 3))
    for n in (1, 2, 3):
        lam = eigs[EigenIndex(n, 0)]
        assert lam == pytest.approx((np.pi * n) ** 2, rel=1e-10)
        eps = 1e-4
        lo = delta(prob, (np.sqrt(lam) - eps) ** 2)
        hi = delta(prob, (np.sqrt(lam) + eps) ** 2)
        assert lo * hi < 0


def test_zero_potential_eigenvalue_count_per_period_window():
    # the window [2 pi, 3 pi) in rho holds m + 1 eigenvalues
    m = 2
    prob = LassoProblem(m, GridFunction.zero(float(m)), GridFunction.zero(1.0))
    eigs = enumerate_eigenvalues(prob, 1, 3)
    rhos = [np.sqrt(lam) for _, lam in eigs]
    inside = [r for r in rhos if 2 * np.pi - 1e-9 <= r < 3 * np.pi - 1e-9]
    assert len(inside) == m + 1


def test_enumerate_small_perturbation():
    sig2 = GridFunction.from_callable(lambda x: 0.1 * x, 1.0, 101)
    prob = LassoProblem(2, GridFunction.zero(2.0), sig2)
    al = solve_alpha(2)
    eigs = enumerate_eigenvalues(prob, 6, 6)
    res = []
    for (n, j), lam in eigs:
        rho0 = np.pi * n if j == 0 else abs(2 * np.pi * n + al[j - 1])
        assert abs(lam - rho0 ** 2) < 1.5
        res.append((abs(n), abs(np.sqrt(lam) - rho0)))
    early = max(r for a, r in res if a <= 2)
    late = max(r for a, r in res if a >= 5)
    assert late < early
    # every returned eigenvalue is a small-residual zero of Delta
    lams = np.asarray([lam for _, lam in eigs])
    assert np.max(np.abs(delta_many(prob, lams))) < 1e-9


def test_enumerate_residual_gate_raises():
    prob = LassoProblem(1, GridFunction.zero(1.0), GridFunction.zero(1.0))
    with pytest.raises(NumberingAmbiguityError):
        enumerate_eigenvalues(prob, 1, 1, delta_tol=1e-30)


def test_bracket_without_sign_change_raises():
    with pytest.raises(BracketingError):
        batched_sign_change_roots(lambda x: np.ones_like(x), np.array([1.0]),
                                  0.3, 0.5, expand_rounds=2)


def test_enumerate_input_validation():
    prob = LassoProblem(1, GridFunction.zero(1.0), GridFunction.zero(1.0))
    with pytest.raises(ValueError):
        enumerate_eigenvalues(prob, 0, 1)


# ----------------------------------------------------- subspectrum + signs

def test_extract_subspectrum_filters_branches(zero_problem_m5):
    al = solve_alpha(5)
    eigs = enumerate_eigenvalues(zero_problem_m5, 2, 3)
    sub = extract_subspectrum(eigs, 2, al[1])
    assert sub.n_max == 2 and sub.n0_max == 3
    assert len(sub.entries) == 5 + 3
    for (n, j), lam in sub.entries:
        assert j in (0, 2)
        rho0 = np.pi * n if j == 0 else abs(2 * np.pi * n + al[1])
        assert lam == pytest.approx(rho0 ** 2, rel=1e-9)


def test_extract_subspectrum_k_out_of_range(zero_problem_m5):
    eigs = enumerate_eigenvalues(zero_problem_m5, 1, 1)
    with pytest.raises(ValueError):
        extract_subspectrum(eigs, 9, 0.5)
    with pytest.raises(ValueError):
        extract_subspectrum(eigs, 0, 0.5)


def test_extract_subspectrum_missing_index(zero_problem_m5):
    eigs = enumerate_eigenvalues(zero_problem_m5, 2, 2)
    broken = [(i, l) for i, l in eigs if not (i.j == 1 and i.n == 0)]
    with pytest.raises(IncompleteSubspectrumError):
        extract_subspectrum(broken, 1, solve_alpha(5)[0])


def test_sign_sequence_validation():
    SignSequence(omegas=(1, -1, 1))
    with pytest.raises(ValueError):
        SignSequence(omegas=(1, 0))


# ------------------------------------------------------------- residuals

def test_asymptotic_residuals_zero_potential(zero_problem_m5):
    al = solve_alpha(5)
    sub = extract_subspectrum(enumerate_eigenvalues(zero_problem_m5, 2, 3), 1, al[0])
    res = asymptotic_residuals(sub)
    assert np.max(np.abs(res)) < 1e-9


def test_asymptotic_residuals_rejects_nonpositive():
    sub = Subspectrum(k=1, alpha_k=0.5,
                      entries=((EigenIndex(0, 1), 0.0),), n_max=0, n0_max=0)
    with pytest.raises(AssumptionViolation) as exc:
        asymptotic_residuals(sub)
    assert exc.value.which == "A2"


# ------------------------------------------------------- check_assumptions

def _sub_from(lams):
    entries = tuple((EigenIndex(n, 1), lam) for n, lam in enumerate(lams))
    return Subspectrum(k=1, alpha_k=0.5, entries=entries, n_max=len(lams) - 1, n0_max=0)


def test_zero_potential_a3_fails_at_even_n():
    nus = [(np.pi * n) ** 2 for n in range(1, 7)]
    report = check_assumptions(_sub_from([1.0, 2.0, 3.0]), h0, d0, nus)
    assert report.a1_ok and report.a2_ok
    assert not report.a3_ok
    assert report.a3_failing_n == [2, 4, 6]
    # d((pi n)^2) = 2 cos(pi n) - 2: -4 at odd n, 0 at even n
    assert report.d_at_nus[0] == pytest.approx(-4.0, abs=1e-12)
    assert report.d_at_nus[1] == pytest.approx(0.0, abs=1e-12)


def test_duplicate_eigenvalue_fails_a1():
    report = check_assumptions(_sub_from([1.0, 4.0, 4.0 + 1e-12]), h0, d0, [])
    assert not report.a1_ok


def test_negative_eigenvalue_fails_a2_and_shift_rescues():
    report = check_assumptions(_sub_from([-2.0, 4.0, 9.0]), h0, d0, [])
    assert not report.a2_ok
    shifted = _sub_from([-2.0 + 5.0, 4.0 + 5.0, 9.0 + 5.0])
    assert check_assumptions(shifted, h0, d0, []).a2_ok
