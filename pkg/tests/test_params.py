import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centralspin import (ModelParams, ParameterDomainError, SpinExpectations,
                         beta_to_polarization, derived_scales)


def test_defaults_and_scales():
    p = ModelParams(omega=3.0, a=2.0, J=5)
    s = derived_scales(p)
    assert s.Omega0 == 1.0 and s.omega0 == 1.0
    assert s.delta_omega == 2.0
    assert s.epsilon == pytest.approx(1 / np.sqrt(5))
    assert p.two_j == 10 and p.dim_nuclear == 11


def test_half_integer_j_stored_exactly():
    p = ModelParams(J=7.5)
    assert p.two_j == 15 and p.J == 7.5


@pytest.mark.parametrize("kw", [dict(J=0.3), dict(J=0), dict(a=0), dict(gamma=-1),
                                dict(Omega=float("nan"))])
def test_invalid_parameters(kw):
    with pytest.raises(ParameterDomainError):
        ModelParams(**kw)


def test_from_ratios():
    p = ModelParams.from_ratios(1.5, 0.8, gamma=0.1, J=40, a=2.0)
    assert p.omega / p.omega0() == pytest.approx(1.5)
    assert p.Omega / p.Omega0() == pytest.approx(0.8)
    assert p.gamma == 0.1


def test_derived_scales_rejects_other_types():
    with pytest.raises(ParameterDomainError):
        derived_scales({"a": 1})


def test_spin_expectations_bounds():
    SpinExpectations([0, 0, -0.5], [0, 0, -1])
    with pytest.raises(ParameterDomainError):
        SpinExpectations([0, 0, 0.6], [0, 0, 0])


def test_polarization_examples():
    np.testing.assert_allclose(beta_to_polarization(0), [0, 0, -1])
    np.testing.assert_allclose(beta_to_polarization(-1), [-1, 0, 0])
    np.testing.assert_allclose(beta_to_polarization(-np.sqrt(2)), [0, 0, 1], atol=1e-7)
    with pytest.raises(ParameterDomainError):
        beta_to_polarization(1.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, np.sqrt(2)), st.floats(0, 2 * np.pi))
def test_polarization_is_unit_vector(r, phi):
    v = beta_to_polarization(r * np.exp(1j * phi))
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_polarization_vectorized():
    b = np.array([0, -0.5, -1j])
    out = beta_to_polarization(b)
    assert out.shape == (3, 3)
    np.testing.assert_allclose(out[2], [0, np.sqrt(1), 0], atol=1e-12)
