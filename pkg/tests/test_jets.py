import numpy as np
from hypothesis import given, settings, strategies as st

from bergman_intersection.jets import Jet

complexes = st.complex_numbers(min_magnitude=0.2, max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def test_variable_derivatives():
    j = Jet.variable(2.0 + 1j, 3)
    assert j.derivative(0) == 2.0 + 1j
    assert j.derivative(1) == 1.0
    assert j.derivative(2) == 0.0


@given(complexes)
@settings(max_examples=50, deadline=None)
def test_holomorphic_power_matches_closed_form(z0):
    # d^n/dz^n z^3 at z0
    j = Jet.variable(z0, 4) * Jet.variable(z0, 4) * Jet.variable(z0, 4)
    assert np.isclose(j.derivative(1), 3 * z0 ** 2)
    assert np.isclose(j.derivative(2), 6 * z0)
    assert np.isclose(j.derivative(3), 6)
    assert abs(j.derivative(4)) == 0


@given(complexes)
@settings(max_examples=50, deadline=None)
def test_reciprocal_and_exp(z0):
    j = Jet.variable(z0, 3)
    r = j.reciprocal()
    assert np.isclose(r.derivative(2), 2 / z0 ** 3)
    e = j.exp()
    assert np.isclose(e.derivative(3), np.exp(z0))


@given(complexes)
@settings(max_examples=50, deadline=None)
def test_modulus_squared_wirtinger(z0):
    # |z|^2 = z conj(z): d = conj(z), dbar = z, d dbar = 1
    j = Jet.variable(z0, 2)
    m = j * j.conj()
    assert np.isclose(m.derivative(1, 0), np.conj(z0))
    assert np.isclose(m.derivative(0, 1), z0)
    assert np.isclose(m.derivative(1, 1), 1.0)
    assert abs(m.derivative(2, 0)) == 0


def test_real_sqrt_of_modulus():
    z0 = 0.6 + 0.8j
    j = Jet.variable(z0, 2)
    r = (j * j.conj()).real_sqrt()
    # d|z| = conj(z) / (2|z|)
    assert np.isclose(r.value, 1.0)
    assert np.isclose(r.derivative(1, 0), np.conj(z0) / 2)


def test_shift_derivative_drops_order():
    j = Jet.variable(1.5, 3).exp()
    d = j.shift_derivative()
    assert d.order == 2
    assert np.isclose(d.derivative(2), np.exp(1.5))


def test_batched_coefficients():
    z = np.array([0.5, 1.0 + 1j, -2.0])
    j = Jet.variable(z, 2).power(0.5, base_power=np.sqrt(z))
    np.testing.assert_allclose(j.derivative(1), 0.5 / np.sqrt(z))
