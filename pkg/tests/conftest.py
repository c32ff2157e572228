import numpy as np
import pytest

from mbcs import Experiment, H, V, fourier_multiport, gaussian_photon, tritter_fig2a

FIG2_OFFSETS = (0.0, 8.0, 12.7)


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.fixture
def rng():
    return np.random.default_rng(20151027)


@pytest.fixture(scope="session")
def fig2b_experiment():
    photons = [gaussian_photon(w, 1.0, 0.0, H) for w in FIG2_OFFSETS]
    return Experiment.build(tritter_fig2a(), [0, 1, 2], photons)


@pytest.fixture(scope="session")
def fig2d_experiment():
    photons = [gaussian_photon(w, 1.0, 0.0, p) for w, p in zip(FIG2_OFFSETS, (H, H, V))]
    return Experiment.build(fourier_multiport(3), [0, 1, 2], photons)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
