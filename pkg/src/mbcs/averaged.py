"""Detection probabilities averaged over detection times and polarizations.

    P_av(D; S) = sum over permutations rho of  f_rho * perm A_rho
    f_rho      = prod_s g[s, rho(s)]
    A_rho      = [conj(U[d, s]) U[d, rho(s)]]

with g the Gram matrix of photon overlaps.  ``pav_quadrature_oracle``
integrates the time-resolved rate directly and shares no code with the
permutation sum except the permanent kernel.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from mbcs.core import DEFAULT_TOLERANCES, PortSample, make_port_sample
from mbcs.correlation import Experiment, basis_outcomes, rates
from mbcs.errors import QuadratureFailure, SizeMismatch, TooLarge
from mbcs.network import InterferometerUnitary, submatrix
from mbcs.permanent import permanent_batch, permanent_ryser
from mbcs.photonics import GramMatrix

MAX_N = 10
MAX_TABLE = 10**6
ORACLE_MAX_N = 3


def _check_perm(rho, n):
    rho = tuple(int(r) for r in rho)
    if sorted(rho) != list(range(n)):
        raise SizeMismatch(f"{rho} is not a permutation of {n} elements")
    return rho


def overlap_factor(g: GramMatrix, rho) -> complex:
    """f_rho = prod_s g[s, rho(s)]; exactly 1 for the identity."""
    G = g.g if isinstance(g, GramMatrix) else np.asarray(g)
    rho = _check_perm(rho, G.shape[0])
    out = 1 + 0j
    for s, r in enumerate(rho):
        if r != s:
            out *= G[s, r]
    return out


def _sub(U, D, S):
    if isinstance(U, InterferometerUnitary):
        return submatrix(U, D, S)
    U = np.asarray(U, dtype=complex)
    return U[np.ix_(list(D), list(S))]


def interference_matrix(U, D, S, rho) -> np.ndarray:
    """A_rho[d, s] = conj(U[d, s]) * U[d, rho(s)]."""
    sub = _sub(U, D, S)
    rho = _check_perm(rho, sub.shape[1])
    return sub.conj() * sub[:, list(rho)]


@dataclass
class AveragedResult:
    value: float
    terms: dict = field(default_factory=dict)
    imag_residual: float = 0.0


def averaged_probability(U, D, S, g: GramMatrix) -> AveragedResult:
    """Probability of one photon in each port of D, averaged over times and polarizations."""
    sub = _sub(U, D, S)
    n = sub.shape[0]
    G = g.g if isinstance(g, GramMatrix) else np.asarray(g, dtype=complex)
    if G.shape != (n, n):
        raise SizeMismatch(f"Gram matrix {G.shape} does not match N={n}")
    if n > MAX_N:
        raise TooLarge(f"permutation sum limited to N <= {MAX_N}")
    perms = list(itertools.permutations(range(n)))
    f = np.array([overlap_factor(G, rho) for rho in perms])
    idx = np.nonzero(f)[0]
    terms = dict.fromkeys(perms, 0j)
    if len(idx):
        A = sub.conj()[None, :, :] * sub[:, np.array(perms)[idx]].transpose(1, 0, 2)
        vals = f[idx] * permanent_batch(A)
        for i, v in zip(idx, vals):
            terms[perms[i]] = complex(v)
    # rho and rho^-1 contribute complex conjugates; summing real parts
    # pairs them exactly
    total = sum(terms.values())
    value = float(sum(t.real for t in terms.values()))
    return AveragedResult(value, terms, abs(total.imag))


def averaged_probability_distinguishable(U, D, S) -> float:
    """No multiphoton interference: perm of the entrywise |U|^2 submatrix."""
    sub = _sub(U, D, S)
    return float(permanent_ryser(np.abs(sub) ** 2).real)


def averaged_probability_ideal(U, D, S) -> float:
    """Complete interference: |perm U_DS|^2."""
    return abs(permanent_ryser(_sub(U, D, S))) ** 2


@dataclass
class PavTable:
    probabilities: dict
    total_mass: float
    M: int
    N: int

    def samples(self) -> list[tuple[int, ...]]:
        return list(self.probabilities)

    def vector(self) -> np.ndarray:
        return np.array(list(self.probabilities.values()))


def pav_table(U: InterferometerUnitary, S, g: GramMatrix) -> PavTable:
    """P_av for every collision-free output sample, keyed by 0-based port tuples.

    ``total_mass`` falls short of 1 by the probability of bunched outcomes.
    """
    M = U.M
    S = S if isinstance(S, PortSample) else make_port_sample(S, M)
    n = len(S)
    if math.comb(M, n) > MAX_TABLE:
        raise TooLarge(f"C({M},{n}) output samples exceed {MAX_TABLE}")
    probs = {}
    for D in itertools.combinations(range(M), n):
        probs[D] = averaged_probability(U, PortSample(D, M), S, g).value
    return PavTable(probs, float(sum(probs.values())), M, n)


def _trapezoid_grid(lo, hi, n):
    x = np.linspace(lo, hi, n + 1)
    w = np.full(n + 1, (hi - lo) / n)
    w[0] = w[-1] = w[0] / 2
    return x, w


def pav_quadrature_oracle(exp: Experiment, D, rel_tol: float = DEFAULT_TOLERANCES.quadrature_rel_tol,
                          basis=None, max_points: int = 1024) -> float:
    """Integrate the time-resolved rate over all N detection times and sum basis polarizations.

    Tensor trapezoid rule on +-10 sigma windows, doubled per axis until the
    relative change drops below ``rel_tol``.  Smooth, rapidly decaying
    integrands make the trapezoid rule converge geometrically.
    """
    n = exp.N
    if n > ORACLE_MAX_N:
        raise TooLarge(f"quadrature oracle limited to N <= {ORACLE_MAX_N}")
    D = D if isinstance(D, PortSample) else make_port_sample(D, exp.M)
    lo = min(c.center for c in exp.photons) - 10 * max(c.sigma for c in exp.photons)
    hi = max(c.center for c in exp.photons) + 10 * max(c.sigma for c in exp.photons)
    outcomes = list(basis_outcomes(exp, basis))

    def integrate(points):
        x, w = _trapezoid_grid(lo, hi, points)
        total = 0.0
        # iterate over the first axis to bound memory
        rest = np.stack(np.meshgrid(*([x] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1) if n > 1 \
            else np.zeros((1, 0))
        wrest = np.prod(np.stack(np.meshgrid(*([w] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1),
                        axis=-1) if n > 1 else np.ones(1)
        for x0, w0 in zip(x, w):
            times = np.concatenate([np.full((len(rest), 1), x0), rest], axis=1)
            for _, jones in outcomes:
                total += w0 * float(np.dot(wrest, rates(exp, D, times, jones)))
        return total

    scale = float(permanent_ryser(np.abs(submatrix(exp.network, D, exp.input_sample)) ** 2).real)
    points = 32
    prev = integrate(points)
    while points * 2 <= max_points:
        points *= 2
        cur = integrate(points)
        if abs(cur - prev) <= rel_tol * max(abs(cur), scale):
            return cur
        prev = cur
    raise QuadratureFailure(f"oracle did not converge to {rel_tol:.1e} with {max_points} points per axis")
