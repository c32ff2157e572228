import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mbcs.core import H, V, JonesVector, linear_polarization, make_port_sample
from mbcs.correlation import (
    DetectionEvent,
    Experiment,
    Grid2D,
    detection_matrix,
    equal_time_rate,
    fringe_visibility,
    landscape,
    landscape_values,
    polarization_scan,
    rate,
    rate_polarization_insensitive,
    rates,
    relative_to_absolute,
)
from mbcs.errors import GridTooFine, SizeMismatch, ValidationError
from mbcs.network import InterferometerUnitary, beamsplitter, fourier_multiport, haar_random
from mbcs.permanent import permanent_naive
from mbcs.photonics import detection_density, gaussian_photon

from conftest import FIG2_OFFSETS

PEAK_DENSITY = math.sqrt(2 / math.pi)  # |chi|^2 at the peak for unit bandwidth


def random_pol(rng):
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    return JonesVector(*z).normalized()


def random_experiment(rng, N, M):
    U = haar_random(M, int(rng.integers(1 << 30)))
    S = sorted(rng.choice(M, N, replace=False).tolist())
    photons = [gaussian_photon(rng.uniform(-3, 3), rng.uniform(0.5, 2), rng.uniform(-1, 1), random_pol(rng))
               for _ in range(N)]
    D = make_port_sample(rng.choice(M, N, replace=False), M)
    return Experiment.build(U, S, photons, rng.uniform(-0.5, 0.5)), D


def test_single_mode_detection_matrix():
    net = InterferometerUnitary(np.eye(1))
    exp = Experiment.build(net, [0], [gaussian_photon(0.0, 1.0, 0.0, H)])
    ev = DetectionEvent(make_port_sample([0], 1), (0.0,), (H,))
    T = detection_matrix(exp, ev)
    assert T.shape == (1, 1)
    assert T[0, 0] == pytest.approx((2 / math.pi) ** 0.25, rel=1e-14)


def test_orthogonal_detector_row_vanishes(fig2b_experiment):
    D = make_port_sample([0, 1, 2], 3)
    T = detection_matrix(fig2b_experiment, DetectionEvent(D, (0.1, 0.2, 0.3), (H, V, H)))
    assert np.all(T[1] == 0) and np.all(T[0] != 0)


def test_event_size_mismatch():
    with pytest.raises(SizeMismatch):
        DetectionEvent(make_port_sample([0, 1], 3), (0.0,), (H, H))


def test_hom_rate_zero():
    exp = Experiment.build(beamsplitter(), [0, 1], [gaussian_photon(0.0, 1.0, 0.0, H)] * 2)
    ev = DetectionEvent(make_port_sample([0, 1], 2), (0.2, 0.2), (H, H))
    assert rate(exp, ev) < 1e-30


def test_tritter_equal_time_dip(fig2b_experiment):
    D = make_port_sample([0, 1, 2], 3)
    for t in (-0.5, 0.0, 0.3):
        assert rate_polarization_insensitive(fig2b_experiment, D, [t, t, t]) < 1e-28
        assert equal_time_rate(fig2b_experiment, D, t, H) < 1e-28


def test_fourier_equal_time_identical_photons():
    exp = Experiment.build(fourier_multiport(3), [0, 1, 2], [gaussian_photon(0.0, 1.0, 0.0, H)] * 3)
    D = make_port_sample([0, 1, 2], 3)
    assert equal_time_rate(exp, D, 0.0, H) == pytest.approx(PEAK_DENSITY**3 / 3, rel=1e-12)


def test_single_photon_reduction():
    rng = np.random.default_rng(1)
    for _ in range(20):
        M = int(rng.integers(1, 5))
        U = haar_random(M, int(rng.integers(1000)))
        s, d = int(rng.integers(M)), int(rng.integers(M))
        xi = gaussian_photon(rng.uniform(-2, 2), rng.uniform(0.5, 2), rng.uniform(-1, 1), random_pol(rng))
        exp = Experiment.build(U, [s], [xi], 0.3)
        D = make_port_sample([d], M)
        for t in rng.uniform(-2, 2, 5):
            for p in (H, V, random_pol(rng)):
                want = abs(U.U[d, s]) ** 2 * detection_density(exp.photons[0], p, t)
                assert rate(exp, DetectionEvent(D, (t,), (p,))) == pytest.approx(want, rel=1e-12, abs=1e-300)
            insens = rate_polarization_insensitive(exp, D, [t])
            assert insens == pytest.approx(abs(U.U[d, s]) ** 2 * abs(complex(exp.photons[0].scalar(t))) ** 2,
                                           rel=1e-12)


def test_all_h_photons_insensitive_equals_h_rate(fig2b_experiment):
    D = make_port_sample([0, 1, 2], 3)
    t = [0.1, -0.2, 0.4]
    want = rate(fig2b_experiment, DetectionEvent(D, t, (H, H, H)))
    assert rate_polarization_insensitive(fig2b_experiment, D, t) == pytest.approx(want, rel=1e-13)


def test_measurement_basis_invariance():
    rng = np.random.default_rng(3)
    diag = (linear_polarization(math.pi / 4), linear_polarization(3 * math.pi / 4))
    circ = (JonesVector(1, 1j).normalized(), JonesVector(1, -1j).normalized())
    for _ in range(25):
        exp, D = random_experiment(rng, int(rng.integers(1, 4)), 4)
        t = rng.uniform(-1, 1, exp.N)
        ref = rate_polarization_insensitive(exp, D, t)
        for basis in (diag, circ):
            assert abs(rate_polarization_insensitive(exp, D, t, basis) - ref) < 1e-12 * max(ref, 1e-300) + 1e-300


def test_nonorthonormal_basis_rejected(fig2b_experiment):
    with pytest.raises(ValidationError):
        rate_polarization_insensitive(fig2b_experiment, [0, 1, 2], [0, 0, 0], (H, H))


def test_factorization_identity():
    rng = np.random.default_rng(4)
    for _ in range(100):
        N = int(rng.integers(1, 5))
        exp, D = random_experiment(rng, N, int(rng.integers(N, 7)))
        t = rng.uniform(-0.5, 0.5)
        p = random_pol(rng)
        direct = rate(exp, DetectionEvent(D, (t,) * N, (p,) * N))
        fact = equal_time_rate(exp, D, t, p)
        assert abs(direct - fact) <= 1e-12 * max(direct, fact) + 1e-300


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), perm_seed=st.integers(0, 2**31))
def test_permutation_covariance(seed, perm_seed):
    rng = np.random.default_rng(seed)
    exp, D = random_experiment(rng, 3, 5)
    t = rng.uniform(-1, 1, 3)
    pols = [random_pol(rng) for _ in range(3)]
    T = detection_matrix(exp, DetectionEvent(D, t, pols))
    perm = np.random.default_rng(perm_seed).permutation(3)
    # oracle: entries assembled directly in the permuted detector order
    rows = np.array(D.ports)[perm]
    U = exp.network.U[np.ix_(rows, exp.input_sample.ports)]
    proj = np.array([[np.vdot(pols[i].as_array(), c.polarization.as_array()) for c in exp.photons] for i in perm])
    amp = np.array([[complex(c.scalar(t[i])) for c in exp.photons] for i in perm])
    np.testing.assert_allclose(U * proj * amp, T[perm], atol=1e-15)
    direct = abs(permanent_naive(T)) ** 2
    assert abs(permanent_naive(T[perm])) ** 2 == pytest.approx(direct, rel=1e-12, abs=1e-300)
    assert rate(exp, DetectionEvent(D, t, pols)) == pytest.approx(direct, rel=1e-12, abs=1e-300)


def test_rates_nonnegative_and_vectorized(fig2b_experiment):
    rng = np.random.default_rng(5)
    D = make_port_sample([0, 1, 2], 3)
    times = rng.uniform(-1, 1, (7, 3))
    vec = rates(fig2b_experiment, D, times, H)
    assert np.all(vec >= 0)
    for row, v in zip(times, vec):
        assert v == pytest.approx(rate(fig2b_experiment, DetectionEvent(D, row, (H, H, H))), rel=1e-12)


def test_relative_to_absolute():
    t = relative_to_absolute(0.5, 1.0, -2.0)
    assert t.mean() == pytest.approx(0.5)
    assert t[1] - t[0] == pytest.approx(1.0) and t[2] - t[1] == pytest.approx(-2.0)


def test_landscape_shape_and_dip(fig2b_experiment):
    D = make_port_sample([0, 1, 2], 3)
    grid = landscape(fig2b_experiment, D, tau_range=6, steps=61)
    assert grid.values.shape == (61, 61)
    assert grid.x[30] == 0 and grid.y[30] == 0
    assert grid.values[30, 30] < 1e-9 * grid.values.max()
    assert np.all(grid.values >= 0)


def test_landscape_exchange_symmetry(fig2b_experiment):
    # swapping detectors 2 and 3 maps (a, b) -> (a + b, -b)
    U = fig2b_experiment.network.U[[0, 2, 1]]
    swapped = Experiment(InterferometerUnitary(U), fig2b_experiment.input_sample, fig2b_experiment.photons)
    D = make_port_sample([0, 1, 2], 3)
    a, b = np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13), indexing="ij")
    lhs = landscape_values(swapped, D, a, b)
    rhs = landscape_values(fig2b_experiment, D, a + b, -b)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-14 * rhs.max())


def test_beat_structure_matches_cofactor_expansion(fig2b_experiment):
    # with unit bandwidths and coincident emission, the tau32 = 0 cut is a
    # Gaussian envelope times |sum_s c_s exp(-i w_s tau)|^2, c_s = U_1s * perm(minor_1s)
    U = fig2b_experiment.network.U
    c = np.array([U[0, s] * permanent_naive(np.delete(np.delete(U, 0, 0), s, 1)) for s in range(3)])
    tau = np.linspace(-4, 4, 161)
    cut = landscape_values(fig2b_experiment, [0, 1, 2], tau, np.zeros_like(tau))
    model = np.exp(-4 * tau**2 / 3) * np.abs(np.exp(-1j * np.outer(tau, FIG2_OFFSETS)) @ c) ** 2
    scale = cut.max() / model.max()
    np.testing.assert_allclose(cut, scale * model, rtol=1e-8, atol=1e-12 * cut.max())
    amps = {(a, b): 2 * abs(c[a] * c[b]) for a in range(3) for b in range(a + 1, 3)}
    # all three frequency differences beat; the 8.0 and 12.7 lines have equal weight
    assert amps[(0, 1)] == pytest.approx(amps[(0, 2)], rel=1e-12)
    assert amps[(1, 2)] > 0.1 * amps[(0, 1)]


def test_landscape_fixed_mean_time(fig2b_experiment):
    D = [0, 1, 2]
    v = landscape_values(fig2b_experiment, D, 0.7, -0.3, mean_time="fixed:0.2")
    t = relative_to_absolute(0.2, 0.7, -0.3)
    assert float(v) == pytest.approx(rate_polarization_insensitive(fig2b_experiment, D, t), rel=1e-13)
    with pytest.raises(ValidationError):
        landscape_values(fig2b_experiment, D, 0, 0, mean_time="peak")


def test_landscape_guards(fig2b_experiment):
    with pytest.raises(GridTooFine):
        landscape(fig2b_experiment, [0, 1, 2], steps=3163)
    hom = Experiment.build(beamsplitter(), [0, 1], [gaussian_photon(0.0, 1.0)] * 2)
    with pytest.raises(ValidationError):
        landscape(hom, [0, 1], steps=5)


def test_w_state_polarization_scan(fig2d_experiment):
    alpha = np.linspace(0, math.pi, 73)
    scan = polarization_scan(fig2d_experiment, [0, 1, 2], 0.0, H, alpha, alpha)
    assert scan.values.shape == (73, 73)
    assert fringe_visibility(scan) == pytest.approx(1, abs=1e-9)
    # constant along alpha + beta = const (indices i + j fixed on this uniform grid)
    vmax = scan.values.max()
    for k in range(0, 145, 6):
        diag = np.array([scan.values[i, k - i] for i in range(max(0, k - 72), min(k, 72) + 1)])
        assert np.ptp(diag) <= 1e-9 * vmax


def test_polarization_scan_period(fig2d_experiment):
    a = np.array([0.3, 0.3 + math.pi])
    scan = polarization_scan(fig2d_experiment, [0, 1, 2], 0.1, V, a, a)
    assert np.ptp(scan.values) <= 1e-12 * scan.values.max()


def test_fringe_visibility_examples():
    assert fringe_visibility(np.full((3, 3), 2.0)) == 0
    assert fringe_visibility(np.array([[0.0, 1.5]])) == 1
    assert fringe_visibility(np.zeros((2, 2))) == 0
    g = Grid2D(np.array([[1.0, 3.0]]), np.zeros(1), np.zeros(2), "x", "y")
    assert fringe_visibility(g) == pytest.approx(0.5)
