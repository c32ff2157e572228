import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbcs.errors import NotSquare, TooLarge
from mbcs.network import fourier_multiport, tritter_fig2a
from mbcs.permanent import permanent_batch, permanent_naive, permanent_ryser

from conftest import random_complex


@pytest.mark.parametrize("fn", [permanent_naive, permanent_ryser])
def test_small_exact_values(fn):
    assert fn(np.eye(4)) == 1
    a, b, c, d = 1 + 2j, -0.5j, 3.0, 2 - 1j
    assert fn(np.array([[a, b], [c, d]])) == pytest.approx(a * d + b * c)
    for n in range(1, 7):
        assert fn(np.ones((n, n))) == pytest.approx(math.factorial(n))


def test_empty_matrix_has_unit_permanent():
    assert permanent_ryser(np.zeros((0, 0))) == 1


def test_non_square_rejected():
    with pytest.raises(NotSquare):
        permanent_ryser(np.ones((2, 3)))


def test_size_guards():
    with pytest.raises(TooLarge):
        permanent_naive(np.eye(11))
    with pytest.raises(TooLarge):
        permanent_ryser(np.eye(64))


def brute_force(A):
    # independent of both kernels: explicit sum over the six permutations of a 3x3 matrix
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    return sum(A[0, p[0]] * A[1, p[1]] * A[2, p[2]] for p in perms)


def test_tritter_permanent_vanishes():
    assert abs(permanent_ryser(tritter_fig2a().U)) < 1e-12


def test_symmetric_tritter_values():
    U = fourier_multiport(3).U
    assert abs(brute_force(U)) ** 2 == pytest.approx(1 / 3, abs=1e-15)
    assert abs(abs(permanent_ryser(U)) ** 2 - 1 / 3) < 1e-12
    assert abs(permanent_ryser(np.abs(U) ** 2) - 2 / 9) < 1e-12


def test_ryser_matches_naive_oracle(rng):
    for _ in range(200):
        n = int(rng.integers(1, 8))
        A = random_complex(rng, n, n)
        ref = permanent_naive(A)
        assert abs(permanent_ryser(A) - ref) <= 1e-10 * abs(ref)


def test_permutation_invariance(rng):
    for _ in range(50):
        n = int(rng.integers(2, 8))
        A = random_complex(rng, n, n)
        P = np.eye(n)[rng.permutation(n)]
        Q = np.eye(n)[rng.permutation(n)]
        ref = permanent_ryser(A)
        assert abs(permanent_ryser(P @ A @ Q) - ref) <= 1e-12 * abs(ref)


matrices = st.integers(1, 7).flatmap(lambda n: st.lists(
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=n * n, max_size=n * n
).map(lambda xs: np.array(xs).reshape(n, n)))


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_transpose_invariance(A):
    ref = permanent_ryser(A)
    assert abs(permanent_ryser(A.T) - ref) <= 1e-12 * max(1.0, abs(ref)) * 10


@settings(max_examples=60, deadline=None)
@given(matrices, st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), st.data())
def test_multilinearity_in_rows(A, c, data):
    i = data.draw(st.integers(0, A.shape[0] - 1))
    B = A.copy()
    B[i] *= c
    ref = c * permanent_ryser(A)
    assert abs(permanent_ryser(B) - ref) <= 1e-11 * max(1.0, abs(ref))


def test_block_diagonal_factorizes(rng):
    for _ in range(20):
        a, b = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        A, B = random_complex(rng, a, a), random_complex(rng, b, b)
        C = np.zeros((a + b, a + b), dtype=complex)
        C[:a, :a], C[a:, a:] = A, B
        ref = permanent_ryser(A) * permanent_ryser(B)
        assert abs(permanent_ryser(C) - ref) <= 1e-12 * abs(ref)


def test_batch_matches_single_calls(rng):
    As = random_complex(rng, 17, 5, 5)
    out = permanent_batch(As)
    assert out.shape == (17,)
    for i in range(17):
        assert out[i] == permanent_ryser(As[i])
    assert permanent_batch(As[:1])[0] == permanent_ryser(As[0])
    np.testing.assert_array_equal(permanent_batch(np.stack([np.eye(4)] * 6)), np.ones(6))


def test_batch_keeps_leading_axes(rng):
    As = random_complex(rng, 2, 3, 4, 4)
    assert permanent_batch(As).shape == (2, 3)


def test_n20_performance(rng):
    A = random_complex(rng, 20, 20)
    permanent_ryser(A[:3, :3])
    start = time.perf_counter()
    permanent_ryser(A)
    assert time.perf_counter() - start < 5.0


def test_badly_scaled_columns_keep_relative_accuracy():
    rng = np.random.default_rng(12)
    for _ in range(50):
        A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        r = 10.0 ** rng.uniform(-8, 8, 5)
        c = 10.0 ** rng.uniform(-8, 8, 5)
        ref = permanent_naive(A) * np.prod(r) * np.prod(c)
        scaled = r[:, None] * A * c[None, :]
        assert abs(permanent_ryser(scaled) - ref) < 1e-11 * abs(ref)
        assert abs(permanent_batch(scaled[None])[0] - ref) < 1e-11 * abs(ref)
