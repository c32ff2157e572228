import math

import numpy as np
import pytest
from scipy import stats

from mbcs.core import make_port_sample
from mbcs.errors import NotSquare, NotUnitary, SizeMismatch, ValidationError
from mbcs.network import (
    beamsplitter,
    build_network,
    check_unitary,
    fourier_multiport,
    haar_random,
    load_unitary,
    submatrix,
    tritter_fig2a,
)
from mbcs.permanent import permanent_ryser


def test_check_unitary():
    ok, dev = check_unitary(np.eye(4))
    assert ok and dev == 0
    assert check_unitary(beamsplitter().U)[0]
    ok, dev = check_unitary(np.ones((3, 3)) / math.sqrt(3))
    assert not ok and dev > 0.5
    with pytest.raises(NotSquare):
        check_unitary(np.ones((2, 3)))


def test_beamsplitter():
    U = beamsplitter().U
    assert check_unitary(U)[1] < 1e-15
    assert abs(permanent_ryser(U)) < 1e-16
    assert permanent_ryser(np.abs(U) ** 2) == pytest.approx(0.5, abs=1e-15)


def test_tritter_entries_and_permanent():
    U = tritter_fig2a().U
    assert U[0, 0] == pytest.approx(1 / math.sqrt(3))
    assert check_unitary(U)[1] < 1e-12
    assert abs(permanent_ryser(U)) < 1e-12


def test_fourier_multiport():
    for M in range(2, 9):
        assert check_unitary(fourier_multiport(M).U)[1] < 1e-12
    np.testing.assert_allclose(np.abs(fourier_multiport(2).U), 1 / math.sqrt(2))
    with pytest.raises(ValidationError):
        fourier_multiport(1)


def test_fourier_uses_one_based_exponents():
    U = fourier_multiport(3).U
    assert U[0, 0] == pytest.approx(np.exp(2j * np.pi / 3) / math.sqrt(3))
    assert U[2, 2] == pytest.approx(1 / math.sqrt(3))


def test_haar_unitary_and_deterministic():
    for seed in range(20):
        U = haar_random(5, seed)
        assert check_unitary(U.U)[1] < 1e-10
    np.testing.assert_array_equal(haar_random(4, 3).U, haar_random(4, 3).U)
    assert abs(abs(haar_random(1, 9).U[0, 0]) - 1) < 1e-15


def test_haar_m2_first_entry_uniform():
    x = np.array([abs(haar_random(2, s).U[0, 0]) ** 2 for s in range(10_000)])
    assert stats.kstest(x, "uniform").statistic < 0.02


def test_submatrix():
    U = tritter_fig2a()
    full = make_port_sample([0, 1, 2], 3)
    np.testing.assert_array_equal(submatrix(U, full, full), U.U)
    s = submatrix(U, make_port_sample([0], 3), make_port_sample([2], 3))
    assert s[0, 0] == pytest.approx(-1j / math.sqrt(3))
    a = submatrix(U, [0, 2], [1, 2])
    b = submatrix(U, [2, 0], [1, 2])
    np.testing.assert_array_equal(a[::-1], b)
    with pytest.raises(SizeMismatch):
        submatrix(U, [0, 1], [0])


def test_submatrix_adjoint(rng):
    U = haar_random(6, 11)
    Ud = type(U)(U.U.conj().T)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        D = make_port_sample(rng.choice(6, n, replace=False), 6)
        S = make_port_sample(rng.choice(6, n, replace=False), 6)
        np.testing.assert_array_equal(submatrix(Ud, S, D), submatrix(U, D, S).conj().T)


def test_build_network_names(tmp_path):
    assert build_network("beamsplitter").M == 2
    assert build_network("fourier:5").M == 5
    np.testing.assert_array_equal(build_network("haar:4:2").U, haar_random(4, 2).U)
    p = tmp_path / "u.json"
    p.write_text('[[[0.7071067811865476, 0], [0, 0.7071067811865476]], [[0, 0.7071067811865476], [0.7071067811865476, 0]]]')
    np.testing.assert_allclose(build_network(f"file:{p}").U, beamsplitter().U)
    p.write_text('{"matrix": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]}')
    with pytest.raises(NotUnitary):
        load_unitary(p)
    with pytest.raises(ValidationError):
        build_network("nonsense")
    with pytest.raises(ValidationError):
        build_network("fourier:x")
