"""Matrix permanents.

``permanent_ryser`` is the production kernel (Ryser inclusion-exclusion with
Gray-code row-sum updates, O(2^N N)).  ``permanent_naive`` enumerates all
N! permutations and is kept only as an independent oracle.
"""

from __future__ import annotations

import itertools
import math
import os

import numba
import numpy as np

from mbcs.errors import NotSquare, SizeMismatch, TooLarge

NAIVE_MAX_N = 10
RYSER_MAX_N = 63


def _configure_threads():
    n = os.environ.get("MBCS_THREADS")
    if n:
        try:
            numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
        except ValueError:
            pass


_configure_threads()
# prefer OpenMP/workqueue; probing an outdated system TBB only emits a warning
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {A.shape}")
    return A


def permanent_naive(A) -> complex:
    """Sum over all permutations of prod_i A[i, sigma(i)]."""
    A = _as_square(A)
    n = A.shape[0]
    if n > NAIVE_MAX_N:
        raise TooLarge(f"naive permanent limited to N <= {NAIVE_MAX_N}, got {n}")
    rows = np.arange(n)
    total = 0j
    for sigma in itertools.permutations(range(n)):
        total += np.prod(A[rows, list(sigma)])
    return complex(total)


@numba.njit(cache=True, nogil=True)
def _ryser_gray(A):
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    rowsum = np.zeros(n, dtype=np.complex128)
    # Kahan-compensated accumulators for real and imaginary parts
    acc_re = 0.0
    acc_im = 0.0
    c_re = 0.0
    c_im = 0.0
    gray = 0
    size = 0
    for k in range(1, 1 << n):
        j = 0
        while not (k >> j) & 1:
            j += 1
        bit = 1 << j
        gray ^= bit
        if gray & bit:
            for i in range(n):
                rowsum[i] += A[i, j]
            size += 1
        else:
            for i in range(n):
                rowsum[i] -= A[i, j]
            size -= 1
        prod = 1.0 + 0.0j
        for i in range(n):
            prod *= rowsum[i]
        if size & 1:
            prod = -prod
        y = prod.real - c_re
        t = acc_re + y
        c_re = (t - acc_re) - y
        acc_re = t
        y = prod.imag - c_im
        t = acc_im + y
        c_im = (t - acc_im) - y
        acc_im = t
    res = acc_re + 1j * acc_im
    if n & 1:
        res = -res
    return res


@numba.njit(cache=True, parallel=True)
def _ryser_batch(As):
    k = As.shape[0]
    out = np.empty(k, dtype=np.complex128)
    for b in numba.prange(k):
        out[b] = _ryser_gray(As[b])
    return out


def _equilibrate(As):
    """Scale rows then columns of each matrix by powers of two toward unit max-modulus.

    Ryser's subset sums mix columns, so badly scaled columns lose accuracy;
    power-of-two factors are exact and perm(R A C) = prod(R) prod(C) perm(A).
    Returns the scaled stack and log2 of the factor to multiply back.
    """
    if As.shape[-1] == 0:
        return As, np.zeros(As.shape[:-2], dtype=np.int64)
    mag = np.abs(As)
    with np.errstate(divide="ignore"):
        r = np.frexp(mag.max(axis=-1))[1]
        r = np.where(mag.max(axis=-1) > 0, r, 0)
        As = np.ldexp(As.real, -r[..., :, None]) + 1j * np.ldexp(As.imag, -r[..., :, None])
        mag = np.abs(As)
        c = np.frexp(mag.max(axis=-2))[1]
        c = np.where(mag.max(axis=-2) > 0, c, 0)
        As = np.ldexp(As.real, -c[..., None, :]) + 1j * np.ldexp(As.imag, -c[..., None, :])
    return As, r.sum(axis=-1) + c.sum(axis=-1)


def _rescale(vals, shift):
    return np.ldexp(vals.real, shift) + 1j * np.ldexp(vals.imag, shift)


def permanent_ryser(A) -> complex:
    """Permanent by Ryser's formula with Gray-code ordering of column subsets.

    The empty (0x0) matrix has permanent 1.
    """
    A = _as_square(A)
    if A.shape[0] > RYSER_MAX_N:
        raise TooLarge(f"Ryser permanent limited to N <= {RYSER_MAX_N}")
    As, shift = _equilibrate(A)
    return complex(_rescale(_ryser_gray(np.ascontiguousarray(As)), int(shift)))


permanent = permanent_ryser


def permanent_batch(matrices) -> np.ndarray:
    """Permanents of a stack of equally sized square matrices, shape (..., N, N).

    Output index i corresponds to input matrix i; leading axes are preserved.
    """
    As = np.asarray(matrices, dtype=np.complex128)
    if As.ndim < 2 or As.shape[-1] != As.shape[-2]:
        raise SizeMismatch(f"expected a stack of square matrices, got shape {As.shape}")
    n = As.shape[-1]
    if n > RYSER_MAX_N:
        raise TooLarge(f"Ryser permanent limited to N <= {RYSER_MAX_N}")
    lead = As.shape[:-2]
    flat = np.ascontiguousarray(As.reshape((-1, n, n)))
    if flat.shape[0] == 0:
        return np.zeros(lead, dtype=np.complex128)
    flat, shift = _equilibrate(flat)
    return _rescale(_ryser_batch(np.ascontiguousarray(flat)), shift.astype(np.int64)).reshape(lead)


def factorial(n: int) -> int:
    return math.factorial(n)
