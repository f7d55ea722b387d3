import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phshape.discretize import DiscretePlant, build_Ji, discrete_hamiltonian, discretize
from phshape.errors import DimensionError, ModelError, ParameterError, UnsupportedModelError
from phshape.experiment import string_discretization
from phshape.integrator import MidpointStepper
from phshape.model import ContinuousPlant, sigma_matrix, string_plant
from phshape.spectrum import poles


def ji_oracle(p, g):
    # entry by entry from the closed-form pattern
    J = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1):
            d = i - j
            J[i, j] = 1 / g if d == 0 else (-1) ** d * (1 - g) ** (d - 1) / g ** (d + 1)
    return J


def test_Ji_examples():
    np.testing.assert_array_equal(build_Ji(1, 0.5), [[2.0]])
    np.testing.assert_array_equal(build_Ji(3, 0.5), [[2, 0, 0], [-4, 2, 0], [4, -4, 2]])
    np.testing.assert_array_equal(build_Ji(2, 0.25), [[4, 0], [-16, 4]])


@given(st.integers(1, 12), st.floats(0.05, 0.95))
def test_Ji_pattern(p, g):
    J = build_Ji(p, g)
    np.testing.assert_allclose(J, ji_oracle(p, g), rtol=1e-13)
    assert not np.triu(J, 1).any()
    assert np.all(np.diag(J) == 1 / g)


def test_Ji_inverse_is_cumulative_sum():
    # Ji^{-1} integrates: full weight on earlier elements, gamma on the current one
    g = 0.3
    inv = np.linalg.inv(build_Ji(6, g))
    expected = g * np.eye(6) + np.tril(np.ones((6, 6)), -1)
    np.testing.assert_allclose(inv, expected, atol=1e-12)


@pytest.mark.parametrize("g", [0.0, 1.0, -0.2, 1.5])
def test_Ji_bad_gamma(g):
    with pytest.raises(ParameterError):
        build_Ji(3, g)


def test_string_matrices(plant50):
    assert plant50.L_ab == pytest.approx(0.04)
    np.testing.assert_allclose(np.diag(plant50.Q1), 3.5e7, rtol=1e-14)
    np.testing.assert_allclose(np.diag(plant50.Q2), 1 / 0.049, rtol=1e-14)
    np.testing.assert_allclose(np.diag(plant50.Rd), 4e-5, rtol=1e-14)
    np.testing.assert_array_equal(plant50.B0d, np.eye(50))
    for a in (plant50.Q1, plant50.Q2, plant50.Rd):
        assert np.count_nonzero(a - np.diag(np.diag(a))) == 0


def test_single_element():
    d = discretize(string_plant(), 1)
    assert d.L_ab == 2.0
    np.testing.assert_allclose(d.Q1, [[1.4e6 / 2]])


def test_zero_tension_rejected():
    with pytest.raises(ModelError):
        discretize(string_plant(tension=0.0), 10)


def test_two_conservation_law_pairs_unsupported():
    W = (np.sqrt(2) / 2) * np.array([[0, 0, 1, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 1, 0, 0],
                                    [-1, 0, 0, 0, 0, 0, 1, 0], [0, -1, 0, 0, 0, 0, 0, 1]])
    plant = ContinuousPlant(n=2, length=1.0, G0=np.zeros((2, 2)), G1=np.eye(2),
                            L1_profile=1.0, L2_profile=1.0, R=np.eye(2),
                            W=W, W_tilde=W @ sigma_matrix(2))
    with pytest.raises(UnsupportedModelError):
        discretize(plant, 4)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.floats(0.05, 0.95), st.floats(1e-6, 10))
def test_structure(p, g, R):
    d = discretize(string_plant(damping=R), p, g)
    Jn = d.Jn
    assert np.array_equal(Jn + Jn.T, np.zeros_like(Jn))
    assert np.linalg.eigvalsh(d.Rn).min() >= 0


def test_hamiltonian_examples(plant50):
    assert discrete_hamiltonian(plant50, np.zeros(50), np.zeros(50)) == 0.0
    one = DiscretePlant(p=1, L_ab=1.0, gamma=0.5, Ji=[[2.0]], Q1=[[2.0]], Q2=[[3.0]],
                        Rd=[[0.0]], B0d=[[1.0]])
    assert discrete_hamiltonian(one, [1.0], [1.0]) == pytest.approx(2.5)
    with pytest.raises(DimensionError):
        discrete_hamiltonian(plant50, np.zeros(49), np.zeros(50))


@settings(max_examples=20)
@given(arrays(float, 20, elements=st.floats(-1, 1)), arrays(float, 20, elements=st.floats(-1, 1)))
def test_hamiltonian_nonnegative(x1, x2):
    d = string_discretization(20)
    assert discrete_hamiltonian(d, x1, x2) >= 0.0


def test_open_loop_passive(plant50, rng):
    x = rng.standard_normal(100)
    st_ = MidpointStepper(plant50.A, 5e-5)
    H = [0.5 * x @ plant50.Q @ x]
    for _ in range(2000):
        x = st_.step(x)
        H.append(0.5 * x @ plant50.Q @ x)
    H = np.array(H)
    assert np.all(np.diff(H) <= 1e-9 * H[:-1])


def test_lossless_conservation(rng):
    d = string_discretization(50).lossless()
    x = rng.standard_normal(100)
    H0 = 0.5 * x @ d.Q @ x
    st_ = MidpointStepper(d.A, 5e-5)
    worst = 0.0
    for _ in range(10_000):
        x = st_.step(x)
        worst = max(worst, abs(0.5 * x @ d.Q @ x - H0) / H0)
    assert worst <= 1e-10


def _low_freqs(p):
    ps = poles(string_discretization(p).lossless().A)
    return np.sort(ps.oscillatory().imag)[:5]


def test_refinement_consistency():
    w50, w100 = _low_freqs(50), _low_freqs(100)
    np.testing.assert_allclose(w50, w100, rtol=0.02)
    # clamped-free string: omega_j = (2j - 1) pi c / (2L)
    c = np.sqrt(1.4e6 / 1.225)
    exact = (2 * np.arange(1, 6) - 1) * np.pi * c / 4.0
    np.testing.assert_allclose(w100, exact, rtol=0.02)


def test_json_roundtrip(plant50):
    back = DiscretePlant.from_json(plant50.to_json())
    assert json.loads(back.to_json()) == json.loads(plant50.to_json())
    with pytest.raises(Exception):
        DiscretePlant.from_dict({"p": 2})


def test_arrays_read_only(plant50):
    with pytest.raises(ValueError):
        plant50.Q1[0, 0] = 1.0
