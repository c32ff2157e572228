"""Multiboson correlation interferometry simulator.

Time- and polarization-resolved N-photon detection rates, averaged
detection probabilities and exact sampling of detection events for
single photons in arbitrary pure spectral states injected into a linear
M-port interferometer.
"""

from mbcs.core import (
    H,
    V,
    JonesVector,
    PortSample,
    Tolerances,
    jones_inner,
    linear_polarization,
    make_port_sample,
)
from mbcs.errors import MBCSError, NumericError, ValidationError
from mbcs.network import (
    InterferometerUnitary,
    beamsplitter,
    fourier_multiport,
    haar_random,
    submatrix,
    tritter_fig2a,
)
from mbcs.permanent import permanent, permanent_batch, permanent_naive, permanent_ryser
from mbcs.photonics import (
    GramMatrix,
    SpectralAmplitude,
    TemporalAmplitude,
    gaussian_photon,
    gram_matrix,
    overlap,
    sampled_photon,
    to_temporal,
)
from mbcs.correlation import (
    DetectionEvent,
    Experiment,
    equal_time_rate,
    landscape,
    polarization_scan,
    rate,
    rate_polarization_insensitive,
)
from mbcs.averaged import averaged_probability, pav_table

__version__ = "0.1.0"
