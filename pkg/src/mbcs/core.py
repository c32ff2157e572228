"""Value types shared across the package: port samples, Jones vectors, tolerances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from mbcs.errors import DuplicatePort, OutOfRange, ValidationError


@dataclass(frozen=True)
class Tolerances:
    unitarity_tol: float = 1e-10
    normalization_tol: float = 1e-6
    quadrature_rel_tol: float = 1e-9

    def __post_init__(self):
        for name in ("unitarity_tol", "normalization_tol", "quadrature_rel_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"tolerance {name} must be strictly positive")


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class PortSample:
    """Strictly increasing, 0-based set of N distinct ports out of M."""

    ports: tuple[int, ...]
    M: int

    def __post_init__(self):
        if len(self.ports) < 1:
            raise ValidationError("a port sample needs at least one port")
        if any(b <= a for a, b in zip(self.ports, self.ports[1:])):
            raise ValidationError("port sample must be strictly increasing")
        if self.ports[0] < 0 or self.ports[-1] >= self.M:
            raise OutOfRange(f"ports {self.ports} outside [0, {self.M})")

    def __len__(self):
        return len(self.ports)

    def __iter__(self):
        return iter(self.ports)

    @property
    def N(self) -> int:
        return len(self.ports)

    def one_based(self) -> list[int]:
        return [p + 1 for p in self.ports]


def make_port_sample(indices: Iterable[int] | PortSample, M: int) -> PortSample:
    """Sort and validate a list of 0-based port indices.

    Repeated indices raise ``DuplicatePort``: bunched detection is not modeled.
    """
    if isinstance(indices, PortSample):
        indices = indices.ports
    idx = [int(i) for i in indices]
    if len(set(idx)) != len(idx):
        raise DuplicatePort(f"repeated port in {idx}")
    for i in idx:
        if not 0 <= i < M:
            raise OutOfRange(f"port {i} outside [0, {M})")
    return PortSample(tuple(sorted(idx)), int(M))


@dataclass(frozen=True)
class JonesVector:
    """Polarization amplitudes in a fixed basis {e1, e2}."""

    e1: complex
    e2: complex

    def __post_init__(self):
        object.__setattr__(self, "e1", complex(self.e1))
        object.__setattr__(self, "e2", complex(self.e2))

    @classmethod
    def from_array(cls, v) -> "JonesVector":
        v = np.asarray(v, dtype=complex)
        return cls(v[0], v[1])

    @property
    def norm(self) -> float:
        return math.sqrt(abs(self.e1) ** 2 + abs(self.e2) ** 2)

    def normalized(self) -> "JonesVector":
        n = self.norm
        if n == 0:
            raise ValidationError("cannot normalize a zero Jones vector")
        return JonesVector(self.e1 / n, self.e2 / n)

    def as_array(self) -> np.ndarray:
        return np.array([self.e1, self.e2], dtype=complex)


H = JonesVector(1, 0)
V = JonesVector(0, 1)


def linear_polarization(angle: float) -> JonesVector:
    """Linear polarization at ``angle`` radians from H (pi/2 is V)."""
    return JonesVector(math.cos(angle), math.sin(angle))


def jones_inner(a: JonesVector, b: JonesVector) -> complex:
    """Hermitian inner product <a|b>, conjugating the first (detector) vector."""
    return a.e1.conjugate() * b.e1 + a.e2.conjugate() * b.e2
