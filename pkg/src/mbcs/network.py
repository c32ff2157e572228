"""Interferometer unitaries: validation, named builders, Haar sampling, submatrices."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mbcs.core import DEFAULT_TOLERANCES, PortSample
from mbcs.errors import DuplicatePort, NotSquare, NotUnitary, OutOfRange, SizeMismatch, ValidationError


def check_unitary(U, tol: float = DEFAULT_TOLERANCES.unitarity_tol) -> tuple[bool, float]:
    """Return ``(passed, max |(U^dagger U - I)_ij|)``."""
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {U.shape}")
    dev = float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))) if U.size else 0.0
    return dev <= tol, dev


@dataclass(frozen=True, eq=False)
class InterferometerUnitary:
    U: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        U = np.array(self.U, dtype=complex)
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    @classmethod
    def validated(cls, U, name: str = "custom", tol: float = DEFAULT_TOLERANCES.unitarity_tol):
        ok, dev = check_unitary(U, tol)
        if not ok:
            raise NotUnitary(f"{name}: max |U^dagger U - I| = {dev:.3e} exceeds {tol:.1e}")
        return cls(U, name)

    @property
    def M(self) -> int:
        return self.U.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.U if dtype is None else self.U.astype(dtype)


def beamsplitter() -> InterferometerUnitary:
    """Balanced beam splitter (1/sqrt 2)[[1, i], [i, 1]]; its permanent vanishes."""
    return InterferometerUnitary(np.array([[1, 1j], [1j, 1]]) / math.sqrt(2), "beamsplitter")


def tritter_fig2a() -> InterferometerUnitary:
    """Three-port tritter with zero permanent (quantum-beat setup)."""
    r3 = math.sqrt(3)
    U = np.array(
        [
            [1, 1j, -1j],
            [1j, (1 - r3) / 2, -(1 + r3) / 2],
            [1j, (r3 + 1) / 2, (r3 - 1) / 2],
        ]
    ) / r3
    return InterferometerUnitary(U, "tritter_fig2a")


def fourier_multiport(M: int) -> InterferometerUnitary:
    """Symmetric M-port, U[d, s] = exp(2 pi i d s / M) / sqrt(M) with 1-based d, s."""
    if M < 2:
        raise ValidationError("fourier multiport needs M >= 2")
    d = np.arange(1, M + 1)
    U = np.exp(2j * np.pi * np.outer(d, d) / M) / math.sqrt(M)
    return InterferometerUnitary(U, f"fourier:{M}")


def haar_random(M: int, seed: int) -> InterferometerUnitary:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with R-diagonal phase fix."""
    if M < 1:
        raise ValidationError("haar_random needs M >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return InterferometerUnitary(q, f"haar:{M}:{seed}")


def load_unitary(path, tol: float = DEFAULT_TOLERANCES.unitarity_tol) -> InterferometerUnitary:
    """Load a JSON file holding rows of ``[re, im]`` pairs (or a ``{"matrix": ...}`` wrapper)."""
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc["matrix"]
    U = matrix_from_json(doc)
    return InterferometerUnitary.validated(U, f"file:{path}", tol)


def matrix_from_json(rows) -> np.ndarray:
    try:
        arr = np.array(
            [[complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x) for x in row] for row in rows]
        )
    except (TypeError, IndexError, ValueError) as exc:
        raise ValidationError(f"malformed matrix: {exc}") from None
    if arr.ndim != 2:
        raise NotSquare("matrix rows must have equal length")
    return arr


def build_network(spec: str, base_dir: Path | None = None,
                  tol: float = DEFAULT_TOLERANCES.unitarity_tol) -> InterferometerUnitary:
    """Resolve a builder name: beamsplitter, tritter_fig2a, fourier:M, haar:M:seed, file:path."""
    name, _, rest = spec.partition(":")
    try:
        if name == "beamsplitter" and not rest:
            return beamsplitter()
        if name == "tritter_fig2a" and not rest:
            return tritter_fig2a()
        if name == "fourier":
            return fourier_multiport(int(rest))
        if name == "haar":
            m, _, seed = rest.partition(":")
            return haar_random(int(m), int(seed or 0))
    except ValueError:
        raise ValidationError(f"bad network specification {spec!r}") from None
    if name == "file":
        p = Path(rest)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return load_unitary(p, tol)
    raise ValidationError(f"unknown network builder {spec!r}")


def submatrix(U: InterferometerUnitary, D, S) -> np.ndarray:
    """Rows of U indexed by the output ports D, columns by the input ports S.

    Port samples are used in their (sorted) order; plain index sequences
    are used as given, so reordering them reorders rows or columns.
    """
    M = U.M
    rows, cols = _indices(D, M), _indices(S, M)
    if len(rows) != len(cols):
        raise SizeMismatch(f"|D| = {len(rows)} but |S| = {len(cols)}")
    return U.U[np.ix_(rows, cols)]


def _indices(sample, M) -> list[int]:
    if isinstance(sample, PortSample):
        if sample.M != M:
            raise SizeMismatch(f"port sample built for M={sample.M}, network has M={M}")
        return list(sample.ports)
    idx = [int(i) for i in sample]
    if len(set(idx)) != len(idx):
        raise DuplicatePort(f"repeated port in {idx}")
    if any(not 0 <= i < M for i in idx):
        raise OutOfRange(f"ports {idx} outside [0, {M})")
    return idx
