import numpy as np
import pytest

from lassospec import GridFunction
from lassospec.gridfn import l2_error_mod_constant


def test_node_values_and_interpolation():
    g = GridFunction(2.0, [0.0, 1.0, 4.0])
    assert g(0.0) == 0.0
    assert g(1.0) == 1.0
    assert g(2.0) == 4.0
    assert g(0.5) == pytest.approx(0.5)
    assert g(1.5) == pytest.approx(2.5)


def test_vectorized_evaluation():
    g = GridFunction(1.0, [1.0, 3.0])
    out = g(np.array([0.0, 0.25, 1.0]))
    assert np.allclose(out, [1.0, 1.5, 3.0])


def test_outside_domain_raises():
    g = GridFunction(1.0, [0.0, 1.0])
    with pytest.raises(ValueError):
        g(1.5)
    with pytest.raises(ValueError):
        g(-0.1)


def test_invariants_enforced():
    with pytest.raises(ValueError):
        GridFunction(1.0, [0.0])
    with pytest.raises(ValueError):
        GridFunction(1.0, [0.0, np.nan])
    with pytest.raises(ValueError):
        GridFunction(-1.0, [0.0, 1.0])


def test_immutable():
    g = GridFunction(1.0, [0.0, 1.0])
    with pytest.raises(AttributeError):
        g.length = 2.0
    with pytest.raises(ValueError):
        g.values[0] = 5.0


def test_from_callable_and_spacing():
    g = GridFunction.from_callable(lambda x: x * x, 2.0, 5)
    assert g.n_nodes == 5
    assert g.spacing == pytest.approx(0.5)
    assert g(1.0) == pytest.approx(1.0)


def test_l2_error_mod_constant_ignores_offsets():
    g = GridFunction.from_callable(lambda x: np.sin(2 * np.pi * x), 1.0, 401)
    err = l2_error_mod_constant(g, lambda x: np.sin(2 * np.pi * x) + 7.5)
    assert err < 1e-4
