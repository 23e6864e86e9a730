import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from hgdiff import power_sum_decode, power_sum_encode
from hgdiff.exceptions import DecodeError
from hgdiff.power_sum import apply_sum_decomposition, elementary_from_power_sums, sum_decomposition


def test_small_example():
    z = np.array([0.2, 0.5])
    m = power_sum_encode(z, 2)
    assert np.allclose(m, [0.7, 0.29])
    assert np.allclose(power_sum_decode(m, 2), z)


def test_elementary_polynomials():
    e = elementary_from_power_sums(power_sum_encode(np.array([0.1, 0.2, 0.3]), 3), 3)
    assert np.allclose(e, [1.0, 0.6, 0.11, 0.006])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=5))
@example([1.0, 1.0, 1.0, 1.0])
def test_round_trip(values):
    z = np.sort(np.array(values))
    # near-coincident points make the decode ill-conditioned; only check the moments then
    back = power_sum_decode(power_sum_encode(z, z.size), z.size, tol=1e-5)
    powers = np.arange(1, z.size + 1)
    assert np.allclose((back[:, None] ** powers).sum(0), (z[:, None] ** powers).sum(0), atol=1e-6)


def test_invalid_moments_raise():
    # p1 = 0, p2 = -2 would need imaginary roots
    with pytest.raises(DecodeError):
        power_sum_decode(np.array([0.0, -2.0]), 2)


def test_sum_decomposition_reproduces_equivariant_map(rng):
    def psi(z):
        return z * z.sum() - z ** 2

    phi, rho = sum_decomposition(psi, 4)
    for _ in range(10):
        z = rng.uniform(0, 1, size=4)
        assert np.allclose(apply_sum_decomposition(phi, rho, z), psi(z), atol=1e-6)
