import numpy as np
from hypothesis import given, strategies as st

from keller_lab.roots import aberth, effective_degree, roots_batch


def _match(got, want, tol):
    got = sorted(got, key=lambda z: (round(z.real, 6), round(z.imag, 6)))
    want = sorted(want, key=lambda z: (round(z.real, 6), round(z.imag, 6)))
    return np.max(np.abs(np.array(got) - np.array(want))) < tol


def test_against_companion_matrix_oracle():
    rng = np.random.default_rng(3)
    c = rng.normal(size=(40, 8)) + 1j * rng.normal(size=(40, 8))
    r = aberth(c)
    for row, roots in zip(c, r):
        assert _match(roots, np.roots(row), 1e-8)


def test_roots_of_unity():
    c = np.zeros((1, 7), complex)
    c[0, 0], c[0, -1] = 1, -1
    r = aberth(c)[0]
    assert np.allclose(r ** 6, 1, atol=1e-12)
    assert len({(round(z.real, 8), round(z.imag, 8)) for z in r}) == 6


def test_linear_closed_form():
    assert aberth(np.array([[2, -4]]))[0, 0] == 2


def test_effective_degree_trims_leading_zeros():
    c = np.array([[0, 0, 1, -3, 2], [1e-20, 1, 0, 0, 0], [0, 0, 0, 0, 0]], complex)
    assert list(effective_degree(c)) == [2, 3, -1]
    r = roots_batch(c)
    assert _match(r[0, :2], [1, 2], 1e-12)
    assert np.isnan(r[0, 2:]).all()
    assert np.isnan(r[2]).all()


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=6))
def test_recovers_prescribed_roots(roots):
    c = np.poly(roots)[None, :]
    got = roots_batch(c)[0]
    # every prescribed root is near some computed root; clusters lose accuracy as eps^(1/k)
    for z in roots:
        assert np.min(np.abs(got - z)) < 1e-3 * (1 + abs(z))
