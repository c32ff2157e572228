"""Time- and polarization-resolved N-fold detection rates.

For an output sample D, detection times t_d and detected polarizations p_d the
rate is |perm T|^2 with

    T[d, s] = U[d, s] * <p_d|pol_s> * chi_s(t_d).

Every function here also has a vectorized core operating on stacks of
detection times so that grids and samplers avoid Python loops.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mbcs.core import H, V, JonesVector, PortSample, jones_inner, linear_polarization, make_port_sample
from mbcs.errors import GridTooFine, SizeMismatch, ValidationError
from mbcs.network import InterferometerUnitary, submatrix
from mbcs.permanent import permanent_batch, permanent_ryser
from mbcs.photonics import GramMatrix, SpectralAmplitude, TemporalAmplitude, gram_matrix, to_temporal

MAX_GRID_NODES = 10**7

HV_BASIS = (H, V)


@dataclass(frozen=True, eq=False)
class Experiment:
    network: InterferometerUnitary
    input_sample: PortSample
    photons: tuple[TemporalAmplitude, ...]
    delta_t: float = 0.0
    _gram: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "photons", tuple(self.photons))
        if len(self.photons) != len(self.input_sample):
            raise SizeMismatch(
                f"{len(self.photons)} photons for {len(self.input_sample)} input ports")
        if self.input_sample.M != self.network.M:
            raise SizeMismatch("input sample and network disagree on M")

    @classmethod
    def build(cls, network: InterferometerUnitary, input_ports: Sequence[int],
              spectra: Sequence[SpectralAmplitude], delta_t: float = 0.0) -> "Experiment":
        S = make_port_sample(input_ports, network.M)
        if list(S.ports) != [int(p) for p in input_ports]:
            raise ValidationError("input ports must be listed in increasing order to align with photons")
        photons = tuple(to_temporal(xi, delta_t) for xi in spectra)
        return cls(network, S, photons, float(delta_t))

    @property
    def N(self) -> int:
        return len(self.photons)

    @property
    def M(self) -> int:
        return self.network.M

    def gram(self) -> GramMatrix:
        if not self._gram:
            self._gram.append(gram_matrix(self.photons))
        return self._gram[0]

    def polarizations(self) -> np.ndarray:
        """(N, 2) array of photon Jones vectors in input order."""
        return np.array([p.polarization.as_array() for p in self.photons])

    def amplitudes(self, times) -> np.ndarray:
        """chi_s(t) for every photon s; shape ``times.shape + (N,)``."""
        times = np.asarray(times, dtype=float)
        return np.stack([p.scalar(times) for p in self.photons], axis=-1)


@dataclass(frozen=True)
class DetectionEvent:
    output_sample: PortSample
    times: tuple[float, ...]
    polarizations: tuple[JonesVector, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "polarizations", tuple(self.polarizations))
        n = len(self.output_sample)
        if len(self.times) != n or len(self.polarizations) != n:
            raise SizeMismatch("detection event needs one time and one polarization per port")


def _as_sample(D, M) -> PortSample:
    return D if isinstance(D, PortSample) else make_port_sample(D, M)


def _pol_array(pols) -> np.ndarray:
    if isinstance(pols, JonesVector):
        return pols.as_array()
    if len(pols) and isinstance(pols[0], JonesVector):
        return np.array([p.as_array() for p in pols])
    return np.asarray(pols, dtype=complex)


def detection_matrices(exp: Experiment, D: PortSample, times, pols) -> np.ndarray:
    """Stack of detection matrices, shape ``times.shape[:-1] + (N, N)``.

    ``times`` has trailing axis N (one per detector in D); ``pols`` is a
    Jones array broadcastable to ``times.shape + (2,)``.
    """
    D = _as_sample(D, exp.M)
    times = np.asarray(times, dtype=float)
    if times.shape[-1:] != (exp.N,) or len(D) != exp.N:
        raise SizeMismatch(f"expected {exp.N} detectors/times, got D={len(D)}, times {times.shape}")
    pols = np.broadcast_to(_pol_array(pols), times.shape + (2,))
    U = submatrix(exp.network, D, exp.input_sample)
    proj = np.einsum("...dk,sk->...ds", pols.conj(), exp.polarizations())
    return U * proj * exp.amplitudes(times)


def detection_matrix(exp: Experiment, ev: DetectionEvent) -> np.ndarray:
    """T[d, s] = U[d, s] <p_d|pol_s> chi_s(t_d); rows follow D, columns follow S."""
    return detection_matrices(exp, ev.output_sample, np.array(ev.times), ev.polarizations)


def rate(exp: Experiment, ev: DetectionEvent) -> float:
    """N-fold detection rate |perm T|^2 for one fully specified event."""
    return abs(permanent_ryser(detection_matrix(exp, ev))) ** 2


def rates(exp: Experiment, D, times, pols) -> np.ndarray:
    """Vectorized ``rate`` over a stack of detection times."""
    return np.abs(permanent_batch(detection_matrices(exp, D, times, pols))) ** 2


def _basis_vectors(basis) -> np.ndarray:
    if basis is None:
        basis = HV_BASIS
    b = np.array([_pol_array(v) for v in basis], dtype=complex)
    if b.shape != (2, 2) or np.max(np.abs(b.conj() @ b.T - np.eye(2))) > 1e-12:
        raise ValidationError("measurement basis must be two orthonormal Jones vectors")
    return b


def basis_outcomes(exp: Experiment, basis=None):
    """Yield ``(labels, jones)`` for every basis-polarization pattern that can click.

    Patterns where some detector's polarization is orthogonal to every
    photon give identically zero rates and are skipped.
    """
    b = _basis_vectors(basis)
    pol = exp.polarizations()
    live = [np.any(np.abs(b[k].conj() @ pol.T) > 0) for k in range(2)]
    for labels in itertools.product((0, 1), repeat=exp.N):
        if all(live[k] for k in labels):
            yield labels, b[list(labels)]


def rates_polarization_insensitive(exp: Experiment, D, times, basis=None) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    total = np.zeros(times.shape[:-1])
    for _, jones in basis_outcomes(exp, basis):
        total += rates(exp, D, times, jones)
    return total


def rate_polarization_insensitive(exp: Experiment, D, times, basis=None) -> float:
    """Sum of the rate over all 2^N basis-polarization outcomes at the given times."""
    return float(rates_polarization_insensitive(exp, D, np.asarray(times, dtype=float), basis))


def equal_time_rate(exp: Experiment, D, t: float, p: JonesVector) -> float:
    """Coincident-time, common-polarization rate |perm U_DS|^2 prod_s |<p|chi_s(t)>|^2."""
    D = _as_sample(D, exp.M)
    U = submatrix(exp.network, D, exp.input_sample)
    dens = [abs(jones_inner(p, c.polarization)) ** 2 * abs(complex(c.scalar(t))) ** 2 for c in exp.photons]
    return abs(permanent_ryser(U)) ** 2 * math.prod(dens)


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Row-major grid: ``values[i, j]`` sits at ``(x[i], y[j])``."""

    values: np.ndarray
    x: np.ndarray
    y: np.ndarray
    x_label: str
    y_label: str
    meta: dict = field(default_factory=dict)


def relative_to_absolute(tbar, tau21, tau32):
    """Detection times (t1, t2, t3) with mean ``tbar`` and the given differences."""
    t1 = tbar - (2 * tau21 + tau32) / 3
    t2 = t1 + tau21
    return np.stack([t1, t2, t2 + tau32], axis=-1)


def mean_time_nodes(exp: Experiment, mean_time: str = "marginal", n_nodes: int = 64,
                    span: float = 8.0) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes/weights over the mean detection time.

    ``"marginal"`` integrates with Gauss-Legendre over +-span temporal sigmas
    about the mean photon arrival; ``"fixed:<t>"`` evaluates at one time.
    """
    if mean_time.startswith("fixed:"):
        return np.array([float(mean_time[6:])]), np.array([1.0])
    if mean_time != "marginal":
        raise ValidationError(f"mean_time must be 'marginal' or 'fixed:<t>', got {mean_time!r}")
    center = float(np.mean([c.center for c in exp.photons]))
    half = span * max(c.sigma for c in exp.photons)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return center + half * x, half * w


def landscape_values(exp: Experiment, D, tau21, tau32, mean_time: str = "marginal",
                     n_nodes: int = 64, span: float = 8.0, basis=None) -> np.ndarray:
    """Polarization-insensitive three-fold rate reduced over the mean time at arbitrary points."""
    if exp.N != 3:
        raise ValidationError("landscapes are defined for three photons")
    tau21, tau32 = np.broadcast_arrays(np.asarray(tau21, float), np.asarray(tau32, float))
    nodes, weights = mean_time_nodes(exp, mean_time, n_nodes, span)
    out = np.zeros(tau21.shape)
    for tbar, w in zip(nodes, weights):
        times = relative_to_absolute(tbar, tau21, tau32)
        out += w * rates_polarization_insensitive(exp, D, times, basis)
    return out


def landscape(exp: Experiment, D, tau_range: float = 6.0, steps: int = 241,
              mean_time: str = "marginal", n_nodes: int = 64, span: float = 8.0,
              basis=None, tau32_range: float | None = None) -> Grid2D:
    """Three-photon rate over (t2 - t1, t3 - t2) on a symmetric square grid."""
    if steps * steps > MAX_GRID_NODES:
        raise GridTooFine(f"{steps}x{steps} grid exceeds {MAX_GRID_NODES} nodes")
    if steps < 2:
        raise ValidationError("landscape needs at least 2 steps per axis")
    t21 = np.linspace(-tau_range, tau_range, steps)
    r32 = tau_range if tau32_range is None else tau32_range
    t32 = np.linspace(-r32, r32, steps)
    A, B = np.meshgrid(t21, t32, indexing="ij")
    vals = landscape_values(exp, D, A, B, mean_time, n_nodes, span, basis)
    return Grid2D(vals, t21, t32, "tau21", "tau32",
                  {"mean_time": mean_time, "mean_time_nodes": n_nodes, "mean_time_span_sigmas": span})


def polarization_scan(exp: Experiment, D, t: float, trigger_pol: JonesVector,
                      alpha_grid, beta_grid) -> Grid2D:
    """Three-fold rate at common time ``t`` versus the linear analyzer angles of detectors 2 and 3.

    Detector 1 projects on ``trigger_pol``; ``values[i, j]`` is at ``(alpha[i], beta[j])``.
    """
    if exp.N != 3:
        raise ValidationError("polarization scans are defined for three photons")
    alpha = np.asarray(alpha_grid, dtype=float)
    beta = np.asarray(beta_grid, dtype=float)
    A, B = np.meshgrid(alpha, beta, indexing="ij")
    pols = np.empty(A.shape + (3, 2), dtype=complex)
    pols[..., 0, :] = trigger_pol.as_array()
    pols[..., 1, 0], pols[..., 1, 1] = np.cos(A), np.sin(A)
    pols[..., 2, 0], pols[..., 2, 1] = np.cos(B), np.sin(B)
    times = np.full(A.shape + (3,), float(t))
    vals = rates(exp, D, times, pols)
    return Grid2D(vals, alpha, beta, "alpha", "beta", {"time": float(t)})


def fringe_visibility(scan) -> float:
    """(max - min) / (max + min) of a non-negative grid; 0 for an all-zero grid."""
    v = np.asarray(scan.values if isinstance(scan, Grid2D) else scan, dtype=float)
    if v.size == 0:
        raise ValidationError("empty grid")
    hi, lo = float(v.max()), float(v.min())
    if hi + lo == 0:
        return 0.0
    return (hi - lo) / (hi + lo)


__all__ = [
    "DetectionEvent", "Experiment", "Grid2D", "detection_matrix", "detection_matrices",
    "equal_time_rate", "fringe_visibility", "landscape", "landscape_values",
    "linear_polarization", "polarization_scan", "rate", "rate_polarization_insensitive",
    "rates", "rates_polarization_insensitive", "relative_to_absolute",
]
