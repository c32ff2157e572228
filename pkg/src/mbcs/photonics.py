"""Single-photon wavepackets.

A photon is a spectral amplitude xi(omega) times a constant Jones vector.
Its temporal amplitude is the unitary Fourier transform

    chi(t) = (2 pi)^(-1/2) * integral d omega xi(omega) exp(-i omega (t - dt))

evaluated at the detector, ``dt`` being the common propagation delay.  Emission
time t0 enters the spectrum as the phase exp(i omega t0), so the temporal
envelope peaks at t0 + dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from mbcs.core import DEFAULT_TOLERANCES, H, JonesVector, jones_inner
from mbcs.errors import NonPositiveBandwidth, QuadratureFailure, SizeMismatch, ValidationError

SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class GaussianShape:
    center_frequency: float
    bandwidth: float
    emission_time: float = 0.0


@dataclass(frozen=True, eq=False)
class SampledShape:
    frequency_grid: np.ndarray
    values: np.ndarray

    @property
    def step(self) -> float:
        return float(self.frequency_grid[1] - self.frequency_grid[0])

    @property
    def weights(self) -> np.ndarray:
        w = np.full(len(self.frequency_grid), self.step)
        w[0] = w[-1] = self.step / 2
        return w


Shape = Union[GaussianShape, SampledShape]


@dataclass(frozen=True)
class SpectralAmplitude:
    shape: Shape
    polarization: JonesVector = H

    def __call__(self, omega) -> np.ndarray:
        """Scalar spectral amplitude xi(omega) (polarization factored out)."""
        omega = np.asarray(omega, dtype=float)
        s = self.shape
        if isinstance(s, GaussianShape):
            norm = (2 * math.pi * s.bandwidth**2) ** -0.25
            return norm * np.exp(-((omega - s.center_frequency) ** 2) / (4 * s.bandwidth**2)
                                 + 1j * omega * s.emission_time)
        re = np.interp(omega, s.frequency_grid, s.values.real, left=0.0, right=0.0)
        im = np.interp(omega, s.frequency_grid, s.values.imag, left=0.0, right=0.0)
        return re + 1j * im


def gaussian_photon(omega0: float, bandwidth: float, t0: float = 0.0,
                    pol: JonesVector = H) -> SpectralAmplitude:
    """Gaussian spectrum |xi|^2 of variance ``bandwidth**2`` around ``omega0``, emitted at ``t0``."""
    if not bandwidth > 0:
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {bandwidth}")
    return SpectralAmplitude(GaussianShape(float(omega0), float(bandwidth), float(t0)), pol.normalized())


def sampled_photon(frequency_grid, values, pol: JonesVector = H,
                   tol: float = DEFAULT_TOLERANCES.normalization_tol) -> SpectralAmplitude:
    """Spectrum tabulated on a uniform frequency grid; must be normalized (trapezoid rule)."""
    grid = np.asarray(frequency_grid, dtype=float)
    vals = np.asarray(values, dtype=complex)
    if grid.ndim != 1 or grid.shape != vals.shape:
        raise SizeMismatch("frequency grid and values must be 1-D and of equal length")
    if len(grid) < 8:
        raise ValidationError("sampled spectrum needs at least 8 grid points")
    steps = np.diff(grid)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * abs(steps[0]) * len(grid):
        raise ValidationError("frequency grid must be uniform and increasing")
    shape = SampledShape(grid, vals)
    norm = float(np.sum(shape.weights * np.abs(vals) ** 2))
    if abs(norm - 1) > tol:
        raise ValidationError(f"spectrum normalization {norm:.9f} differs from 1 by more than {tol:.1e}")
    # the transform is a plain Riemann sum, for which Parseval holds exactly
    vals = vals / math.sqrt(shape.step * float(np.sum(np.abs(vals) ** 2)))
    shape = SampledShape(grid, vals)
    grid.setflags(write=False)
    vals.setflags(write=False)
    return SpectralAmplitude(shape, pol.normalized())


@dataclass(frozen=True)
class TemporalAmplitude:
    source: SpectralAmplitude
    propagation_delay: float = 0.0
    _window: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.source.shape, SampledShape) and self._window is None:
            object.__setattr__(self, "_window", _sampled_moments(self))

    @property
    def polarization(self) -> JonesVector:
        return self.source.polarization

    @property
    def is_gaussian(self) -> bool:
        return isinstance(self.source.shape, GaussianShape)

    @property
    def center(self) -> float:
        """Mean arrival time of |chi|^2."""
        s = self.source.shape
        if isinstance(s, GaussianShape):
            return s.emission_time + self.propagation_delay
        return self._window[0]

    @property
    def sigma(self) -> float:
        """Standard deviation of |chi(t)|^2; 1/(2 bandwidth) for Gaussians."""
        s = self.source.shape
        if isinstance(s, GaussianShape):
            return 1.0 / (2 * s.bandwidth)
        return self._window[1]

    def scalar(self, t) -> np.ndarray:
        """Scalar temporal amplitude chi(t), vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        s = self.source.shape
        tau = t - self.propagation_delay
        if isinstance(s, GaussianShape):
            peak = (2 * s.bandwidth**2 / math.pi) ** 0.25
            u = tau - s.emission_time
            return peak * np.exp(-(s.bandwidth * u) ** 2 - 1j * s.center_frequency * u)
        return _sampled_transform(s, tau)

    def __call__(self, t) -> np.ndarray:
        return self.scalar(t)


def _sampled_transform(s: SampledShape, tau: np.ndarray) -> np.ndarray:
    flat = np.atleast_1d(tau).ravel()
    wv = s.step * s.values / SQRT_2PI
    out = np.empty(flat.shape, dtype=complex)
    chunk = max(1, 2**20 // len(wv))
    for i in range(0, len(flat), chunk):
        out[i:i + chunk] = np.exp(-1j * np.outer(flat[i:i + chunk], s.frequency_grid)) @ wv
    return out.reshape(np.shape(tau))


def _sampled_moments(chi: TemporalAmplitude) -> tuple[float, float]:
    # chi of a tabulated spectrum is periodic with period 2 pi / step; take one period
    s = chi.source.shape
    period = 2 * math.pi / s.step
    grid = np.linspace(-period / 2, period / 2, 8 * len(s.frequency_grid), endpoint=False)
    dens = np.abs(_sampled_transform(s, grid)) ** 2
    # circular mean so that a pulse straddling the period edge is located correctly
    phase = np.angle(np.sum(dens * np.exp(2j * math.pi * grid / period)))
    c = phase * period / (2 * math.pi)
    rel = (grid - c + period / 2) % period - period / 2
    w = dens / dens.sum()
    sigma = math.sqrt(float(np.sum(w * rel**2)))
    return c + chi.propagation_delay, max(sigma, 1e-12)


def to_temporal(xi: SpectralAmplitude, delta_t: float = 0.0) -> TemporalAmplitude:
    return TemporalAmplitude(xi, float(delta_t))


def eval_temporal(chi: TemporalAmplitude, t: float) -> tuple[complex, JonesVector]:
    """chi(t) as a scalar amplitude together with the photon's Jones vector."""
    return complex(chi.scalar(t)), chi.polarization


def detection_density(chi: TemporalAmplitude, p: JonesVector, t):
    """|<p|pol>|^2 |chi(t)|^2, the single-photon detection density in polarization ``p``."""
    proj = abs(jones_inner(p, chi.polarization)) ** 2
    return proj * np.abs(chi.scalar(t)) ** 2


def _gaussian_overlap(a: TemporalAmplitude, b: TemporalAmplitude) -> complex:
    """Closed form of integral conj(chi_a) chi_b dt for two Gaussian pulses."""
    sa, sb = a.source.shape, b.source.shape
    wa2, wb2 = sa.bandwidth**2, sb.bandwidth**2
    ta, tb = a.center, b.center
    pre = (4 * wa2 * wb2 / math.pi**2) ** 0.25
    alpha = wa2 + wb2
    beta = 2 * wa2 * ta + 2 * wb2 * tb + 1j * (sa.center_frequency - sb.center_frequency)
    gamma = -wa2 * ta**2 - wb2 * tb**2 - 1j * sa.center_frequency * ta + 1j * sb.center_frequency * tb
    return complex(pre * math.sqrt(math.pi / alpha) * np.exp(beta**2 / (4 * alpha) + gamma))


def romberg(f, a: float, b: float, rel_tol: float = 1e-9, min_level: int = 6,
            max_level: int = 22) -> complex:
    """Trapezoid refinement with Richardson extrapolation for a vectorized ``f``.

    Convergence is judged against max(|I|, integral of |f|) so that
    vanishing integrals of non-vanishing integrands terminate.
    """
    n = 2**min_level
    x = np.linspace(a, b, n + 1)
    fx = f(x)
    h = (b - a) / n
    trap = h * (fx.sum() - (fx[0] + fx[-1]) / 2)
    scale = h * np.abs(fx).sum()
    prev_row = [trap]
    for level in range(min_level + 1, max_level + 1):
        h /= 2
        xm = a + h * np.arange(1, 2 * n, 2)
        fm = f(xm)
        trap = trap / 2 + h * fm.sum()
        scale = scale / 2 + h * np.abs(fm).sum()
        n *= 2
        row = [trap]
        for k, p in enumerate(prev_row, start=1):
            row.append(row[-1] + (row[-1] - p) / (4**k - 1))
        err = abs(row[-1] - prev_row[-1])
        if err <= rel_tol * max(abs(row[-1]), scale):
            return complex(row[-1])
        prev_row = row
    raise QuadratureFailure(f"no convergence to {rel_tol:.1e} after 2^{max_level} intervals")


def overlap(a: TemporalAmplitude, b: TemporalAmplitude,
            rel_tol: float = DEFAULT_TOLERANCES.quadrature_rel_tol) -> complex:
    """Overlap integral of conj(chi_a) . chi_b over time, polarization included."""
    pol = jones_inner(a.polarization, b.polarization)
    if pol == 0:
        return 0j
    if a.is_gaussian and b.is_gaussian:
        return pol * _gaussian_overlap(a, b)
    width = 10 * max(a.sigma, b.sigma)
    lo = min(a.center, b.center) - width
    hi = max(a.center, b.center) + width
    val = romberg(lambda t: np.conj(a.scalar(t)) * b.scalar(t), lo, hi, rel_tol)
    return pol * val


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Pairwise overlaps g[s, s'] = <chi_s|chi_s'> for photons in input-sample order."""

    g: np.ndarray

    def __post_init__(self):
        g = np.array(self.g, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise SizeMismatch("Gram matrix must be square")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def N(self) -> int:
        return self.g.shape[0]

    def check(self, herm_tol: float = 1e-12, psd_tol: float = 1e-10) -> None:
        g = self.g
        if np.max(np.abs(g - g.conj().T), initial=0) > herm_tol:
            raise ValidationError("Gram matrix is not Hermitian")
        if np.max(np.abs(np.diag(g) - 1), initial=0) > 1e-9:
            raise ValidationError("Gram matrix diagonal must be 1")
        if np.min(np.linalg.eigvalsh(g), initial=0) < -psd_tol:
            raise ValidationError("Gram matrix is not positive semidefinite")

    @classmethod
    def identical(cls, n: int) -> "GramMatrix":
        return cls(np.ones((n, n)))

    @classmethod
    def distinguishable(cls, n: int) -> "GramMatrix":
        return cls(np.eye(n))


def gram_matrix(photons: Sequence[TemporalAmplitude],
                rel_tol: float = DEFAULT_TOLERANCES.quadrature_rel_tol) -> GramMatrix:
    n = len(photons)
    if n < 1:
        raise ValidationError("gram_matrix needs at least one photon")
    g = np.eye(n, dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            g[i, j] = overlap(photons[i], photons[j], rel_tol)
            g[j, i] = g[i, j].conjugate()
    return GramMatrix(g)
