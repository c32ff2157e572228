"""Exact rejection sampling of complete detection events.

The target is the time- and polarization-resolved rate |perm T|^2 over
collision-free output samples D, detection times and basis polarizations.
By Cauchy-Schwarz over the N! terms of the permanent,

    |perm T|^2 <= N! * sum_sigma prod_d |T[d, sigma(d)]|^2 = N! * perm |T|^2,

and each term of the right-hand side is a product of normalized
single-photon densities, so the envelope is a finite mixture with
closed-form weights N! prod_d |U[d, sigma(d)]|^2 |<lambda_d|pol_sigma(d)>|^2.
Proposals are drawn from that mixture and accepted with probability
|perm T|^2 / (N! perm |T|^2).
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from mbcs.averaged import PavTable, pav_table
from mbcs.core import JonesVector, PortSample
from mbcs.correlation import DetectionEvent, Experiment, _basis_vectors
from mbcs.errors import EnvelopeViolation, NoCollisionFreeMass, RejectionBudgetExceeded, TooLarge, ValidationError
from mbcs.permanent import permanent_batch

MAX_N = 6
MAX_SAMPLES = 10**4
ENVELOPE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class SamplerConfig:
    experiment: Experiment
    seed: int = 0
    max_rejections_per_sample: int = 10**6
    basis: tuple | None = None
    block_size: int = 4096

    def __post_init__(self):
        exp = self.experiment
        if exp.N > MAX_N:
            raise TooLarge(f"sampler limited to N <= {MAX_N}")
        if math.comb(exp.M, exp.N) > MAX_SAMPLES:
            raise TooLarge(f"C({exp.M},{exp.N}) output samples exceed {MAX_SAMPLES}")
        if self.max_rejections_per_sample < 1 or self.block_size < 1:
            raise ValidationError("rejection budget and block size must be positive")


@dataclass(eq=False)
class SampleBatch:
    ports: np.ndarray          # (K, N) 0-based output ports, increasing along axis 1
    times: np.ndarray          # (K, N) detection time at each port
    pol_index: np.ndarray      # (K, N) basis polarization index (0 -> e1, 1 -> e2)
    basis: np.ndarray          # (2, 2) Jones vectors of the measurement basis
    M: int
    proposals: int = 0
    acceptances: int = 0
    collision_free_mass: float = float("nan")

    def __len__(self):
        return len(self.ports)

    @property
    def acceptance_rate(self) -> float:
        return self.acceptances / self.proposals if self.proposals else float("nan")

    @property
    def events(self) -> list[DetectionEvent]:
        jones = [JonesVector.from_array(b) for b in self.basis]
        return [
            DetectionEvent(PortSample(tuple(int(p) for p in ports), self.M), tuple(ts),
                           tuple(jones[k] for k in lam))
            for ports, ts, lam in zip(self.ports, self.times, self.pol_index)
        ]

    def sample_counts(self) -> dict:
        counts: dict = {}
        for row in map(tuple, self.ports.tolist()):
            counts[row] = counts.get(row, 0) + 1
        return counts


class _TimeSampler:
    """Draws detection times from |chi_s(t)|^2 given uniform variates."""

    def __init__(self, photons):
        self.photons = photons
        self.tables = {}
        for s, c in enumerate(photons):
            if not c.is_gaussian:
                t = np.linspace(c.center - 12 * c.sigma, c.center + 12 * c.sigma, 8193)
                dens = np.abs(c.scalar(t)) ** 2
                cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2)])
                cdf /= cdf[-1]
                self.tables[s] = (cdf, t)

    def __call__(self, photon_idx: np.ndarray, u: np.ndarray) -> np.ndarray:
        out = np.empty(u.shape)
        for s, c in enumerate(self.photons):
            mask = photon_idx == s
            if not mask.any():
                continue
            if c.is_gaussian:
                out[mask] = c.center + c.sigma * special.ndtri(u[mask])
            else:
                cdf, t = self.tables[s]
                out[mask] = np.interp(u[mask], cdf, t)
        return out


class CorrelationSampler:
    def __init__(self, cfg: SamplerConfig, table: PavTable | None = None):
        self.cfg = cfg
        exp = self.exp = cfg.experiment
        n = self.N = exp.N
        self.basis = _basis_vectors(cfg.basis)
        self.samples = np.array(list(itertools.combinations(range(exp.M), n)), dtype=np.int64)
        self.perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        self.us = exp.network.U[:, list(exp.input_sample.ports)]          # (M, N)
        self.pol = exp.polarizations()                                    # (N, 2)
        self.polprob = np.abs(self.basis.conj() @ self.pol.T) ** 2        # (2, N)
        absu2 = np.abs(self.us) ** 2
        self.env_mass = math.factorial(n) * permanent_batch(absu2[self.samples]).real
        self.env_total = float(self.env_mass.sum())
        self.table = table if table is not None else pav_table(exp.network, exp.input_sample, exp.gram())
        self.collision_free_mass = self.table.total_mass
        self._sigma_cdf: dict = {}
        self._times = _TimeSampler(exp.photons)

    def envelope_term_weights(self, D) -> dict:
        """Map (sigma, lambda) -> N! prod_d |U[d, sigma(d)]|^2 |<lambda_d|pol_sigma(d)>|^2."""
        ports = list(D.ports if isinstance(D, PortSample) else D)
        n = self.N
        fact = math.factorial(n)
        out = {}
        absu2 = np.abs(self.us[ports]) ** 2
        for sigma in self.perms:
            base = fact * float(np.prod(absu2[np.arange(n), sigma]))
            for lam in itertools.product((0, 1), repeat=n):
                out[(tuple(int(x) for x in sigma), lam)] = base * float(
                    np.prod(self.polprob[list(lam), sigma]))
        return out

    def _sigma_table(self, di: int) -> np.ndarray:
        cdf = self._sigma_cdf.get(di)
        if cdf is None:
            absu2 = np.abs(self.us[self.samples[di]]) ** 2
            w = np.prod(absu2[np.arange(self.N), self.perms], axis=1)
            cdf = np.cumsum(w)
            cdf /= cdf[-1]
            self._sigma_cdf[di] = cdf
        return cdf

    def _propose(self, rng: np.random.Generator, k: int):
        n = self.N
        di = rng.choice(len(self.samples), size=k, p=self.env_mass / self.env_total)
        u_sigma = rng.random(k)
        u_pol = rng.random((k, n))
        u_time = rng.random((k, n))
        u_acc = rng.random(k)

        sigma = np.empty((k, n), dtype=np.int64)
        for d in np.unique(di):
            m = di == d
            idx = np.searchsorted(self._sigma_table(int(d)), u_sigma[m], side="right")
            sigma[m] = self.perms[np.minimum(idx, len(self.perms) - 1)]
        lam = (u_pol >= self.polprob[0, sigma]).astype(np.int64)
        times = self._times(sigma, u_time)

        ports = self.samples[di]
        jones = self.basis[lam]                                           # (k, N, 2)
        proj = np.einsum("kdj,sj->kds", jones.conj(), self.pol)
        T = self.us[ports] * proj * self.exp.amplitudes(times)
        target = np.abs(permanent_batch(T)) ** 2
        envelope = math.factorial(n) * permanent_batch(np.abs(T) ** 2).real
        excess = target - envelope * (1 + ENVELOPE_SLACK)
        if np.any(excess > 1e-300):
            raise EnvelopeViolation(f"target exceeds envelope by {excess.max():.3e}")
        accept = u_acc * envelope < target
        return ports, times, lam, accept

    def _fill(self, rng: np.random.Generator, count: int):
        n = self.N
        ports = np.empty((count, n), dtype=np.int64)
        times = np.empty((count, n))
        lam = np.empty((count, n), dtype=np.int64)
        used = np.zeros(count, dtype=np.int64)
        pending = np.arange(count)
        proposals = 0
        accepted_total = 0
        budget = self.cfg.max_rejections_per_sample
        est = 0.5
        while len(pending):
            r = int(min(64, max(1, math.ceil(1.5 / est))))
            p, t, l, acc = self._propose(rng, len(pending) * r)
            acc = acc.reshape(len(pending), r)
            hit = acc.any(axis=1)
            first = np.argmax(acc, axis=1)
            consumed = np.where(hit, first + 1, r)
            used[pending] += consumed
            proposals += int(consumed.sum())
            accepted_total += int(hit.sum())
            est = max(accepted_total / proposals, 1e-4) if accepted_total else est / 4
            src = np.arange(len(pending)) * r + first
            done = pending[hit]
            ports[done], times[done], lam[done] = p[src[hit]], t[src[hit]], l[src[hit]]
            pending = pending[~hit]
            if len(pending) and used[pending].max() >= budget:
                raise RejectionBudgetExceeded(
                    f"no acceptance after {budget} proposals (collision-free mass {self.collision_free_mass:.3e})")
        return ports, times, lam, proposals, accepted_total

    def _check_mass(self):
        if not self.collision_free_mass > 1e-14:
            raise NoCollisionFreeMass(
                f"collision-free probability is {self.collision_free_mass:.3e}; all outcomes are bunched")

    def sample_event(self, rng: np.random.Generator) -> DetectionEvent:
        self._check_mass()
        ports, times, lam, proposals, acc = self._fill(rng, 1)
        batch = SampleBatch(ports, times, lam, self.basis, self.exp.M, proposals, acc,
                            self.collision_free_mass)
        return batch.events[0]

    def block_rng(self, block: int) -> np.random.Generator:
        """Independent counter-based stream for block ``block`` of a batch."""
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.cfg.seed, spawn_key=(block,))))

    def sample_batch(self, count: int) -> SampleBatch:
        n = self.N
        empty = SampleBatch(np.empty((0, n), dtype=np.int64), np.empty((0, n)), np.empty((0, n), dtype=np.int64),
                            self.basis, self.exp.M, 0, 0, self.collision_free_mass)
        if count <= 0:
            return empty
        self._check_mass()
        bs = self.cfg.block_size
        sizes = [min(bs, count - i) for i in range(0, count, bs)]
        # warm per-sample caches before any threads touch them
        for d in range(len(self.samples)):
            self._sigma_table(d)
        work = lambda b: self._fill(self.block_rng(b), sizes[b])
        workers = max(1, int(os.environ.get("MBCS_THREADS", "1") or 1))
        if workers > 1 and len(sizes) > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(work, range(len(sizes))))
        else:
            parts = [work(b) for b in range(len(sizes))]
        return SampleBatch(
            np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]),
            np.concatenate([p[2] for p in parts]), self.basis, self.exp.M,
            sum(p[3] for p in parts), sum(p[4] for p in parts), self.collision_free_mass)


def envelope_term_weights(exp: Experiment, D, basis=None) -> dict:
    return CorrelationSampler(SamplerConfig(exp, basis=basis), table=_no_table(exp)).envelope_term_weights(D)


def _no_table(exp):
    return PavTable({}, float("nan"), exp.M, exp.N)


def sample_event(cfg: SamplerConfig, rng: np.random.Generator) -> DetectionEvent:
    return CorrelationSampler(cfg).sample_event(rng)


def sample_batch(cfg: SamplerConfig, count: int) -> SampleBatch:
    """``count`` accepted events; identical for identical config and seed."""
    return CorrelationSampler(cfg).sample_batch(count)


@dataclass
class ChiSquareResult:
    statistic: float
    pvalue: float
    dof: int
    observed: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)


def empirical_check(batch: SampleBatch, table: PavTable) -> ChiSquareResult:
    """Pearson chi-square of observed output-sample counts against the normalized P_av table."""
    if len(batch) == 0:
        raise ValidationError("empirical_check needs a non-empty batch")
    counts = batch.sample_counts()
    mass = sum(table.probabilities.values())
    K = len(batch)
    obs, exp_ = {}, {}
    stat = 0.0
    cells = 0
    for D, p in table.probabilities.items():
        o = counts.get(D, 0)
        e = K * max(p, 0.0) / mass
        if e <= 0:
            if o > 0:
                stat = math.inf
            continue
        obs[D], exp_[D] = o, e
        stat += (o - e) ** 2 / e
        cells += 1
    if any(D not in table.probabilities for D in counts):
        stat = math.inf
    dof = max(cells - 1, 0)
    if math.isinf(stat):
        p = 0.0
    elif dof == 0:
        p = 1.0
    else:
        p = float(stats.chi2.sf(stat, dof))
    return ChiSquareResult(float(stat), p, dof, obs, exp_)
