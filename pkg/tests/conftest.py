import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lassospec import (
    GridFunction,
    LassoProblem,
    enumerate_eigenvalues,
    extract_subspectrum,
    forward_spectral_data,
    loop_evaluators,
    solve_alpha,
)

STD_M = 2
STD_K = 1


def sigma1_callable(x):
    return 0.2 * x * (2.0 - x)


def sigma2_callable(x):
    return 0.3 * np.sin(2.0 * np.pi * x) + 0.1


@pytest.fixture(scope="session")
def standard():
    """The standard round-trip fixture: m = 2, smooth nonzero sigma1,
    sigma2 = 0.3 sin(2 pi x) + 0.1."""
    s1 = GridFunction.from_callable(sigma1_callable, 2.0, 401)
    s2 = GridFunction.from_callable(sigma2_callable, 1.0, 201)
    return {
        "m": STD_M,
        "k": STD_K,
        "sigma1": s1,
        "sigma2": s2,
        "problem": LassoProblem(STD_M, s1, s2),
        "alphas": solve_alpha(STD_M),
    }


@pytest.fixture(scope="session")
def std_eigs(standard):
    return enumerate_eigenvalues(standard["problem"], 30, 30)


@pytest.fixture(scope="session")
def std_sub(standard, std_eigs):
    return extract_subspectrum(std_eigs, STD_K, standard["alphas"][STD_K - 1])


def truncate_sub(eigs, k, alpha_k, N):
    from lassospec import extract_subspectrum as ex
    kept = [(i, l) for i, l in eigs
            if (i.j == 0 and i.n <= N) or (i.j == k and abs(i.n) <= N)]
    return ex(kept, k, alpha_k)


@pytest.fixture(scope="session")
def std_forward_data(standard):
    return forward_spectral_data(standard["sigma2"], 30)


@pytest.fixture(scope="session")
def std_loop_evaluators(standard):
    return loop_evaluators(standard["sigma2"])


@pytest.fixture(scope="session")
def std_pipeline(standard, std_sub, std_forward_data):
    from lassospec import algorithm2
    return algorithm2(standard["sigma1"], std_sub, std_forward_data.omegas,
                      enforce_a3=False, return_details=True)


@pytest.fixture(scope="session")
def zero_problem_m5():
    return LassoProblem(5, GridFunction.zero(5.0), GridFunction.zero(1.0))
