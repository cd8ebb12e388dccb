"""Samplers over the clamped conditional P(k, y | x).

Three interchangeable implementations: ExactSampler (enumeration oracle),
GibbsSampler (block Gibbs on the conditionals), and SimAnnealSampler (a
quantum-annealer stand-in that consumes the quadratic-model encoding:
build_conditional_bqm -> bqm_to_ising -> clamp_to_hardware -> Metropolis
anneal). With beta_sim equal to the beta_eff used in the encoding and no
coefficient clipping, the anneal's end-of-schedule distribution matches
the conditional it was built from.
"""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import anneal_reads, gibbs_chain
from .bqm import bqm_to_ising, build_conditional_bqm, clamp_to_hardware
from .core import rng_from_seed

ANNEAL_SCHEDULES = ("geometric", "linear")


@dataclass
class SamplerConfig:
    """Knobs shared by all samplers; each implementation reads its subset.

    beta_sim defaults to beta_eff, which makes the simulated annealer's
    target distribution exactly the encoded conditional; setting it apart
    studies hardware-calibration error.
    """

    beta_eff: float = 16.0
    reads: int = 1000
    burn_in: int = 100
    thin: int = 1
    anneal_sweeps: int = 1000
    anneal_beta_start: float = 0.1
    anneal_schedule: str = "geometric"
    beta_sim: float = None
    seed: int = 0
    backend: str = None

    def __post_init__(self):
        if self.beta_eff <= 0.0:
            raise ValueError("beta_eff must be positive")
        if self.reads < 1:
            raise ValueError("reads must be >= 1")
        if self.burn_in < 0 or self.thin < 1 or self.anneal_sweeps < 1:
            raise ValueError("burn_in >= 0, thin >= 1, anneal_sweeps >= 1 required")
        if self.anneal_beta_start <= 0.0:
            raise ValueError("anneal_beta_start must be positive")
        if self.anneal_schedule not in ANNEAL_SCHEDULES:
            raise ValueError(f"anneal_schedule must be one of {ANNEAL_SCHEDULES}")
        if self.beta_sim is not None and self.beta_sim <= 0.0:
            raise ValueError("beta_sim must be positive when given")

    @property
    def effective_beta_sim(self):
        return self.beta_eff if self.beta_sim is None else self.beta_sim

    def anneal_betas(self):
        """Inverse-temperature ramp consumed by the anneal kernel."""
        end = self.effective_beta_sim
        if self.anneal_schedule == "geometric":
            return np.geomspace(self.anneal_beta_start, end, self.anneal_sweeps)
        return np.linspace(self.anneal_beta_start, end, self.anneal_sweeps)


@dataclass
class SampleSet:
    """Aggregated reads from one clamped data point.

    Rows of ``assignments`` are unique (k, y) bit vectors, k in the first
    n_hidden columns; ``counts`` holds occurrence counts summing to
    total_reads. Metadata records sampler name, the beta the reads target,
    and the seed actually used.
    """

    assignments: np.ndarray
    counts: np.ndarray
    total_reads: int
    n_hidden: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.assignments = np.ascontiguousarray(self.assignments, dtype=np.uint8)
        self.counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if self.assignments.ndim != 2 or self.assignments.shape[0] != self.counts.shape[0]:
            raise ValueError("assignments and counts disagree on the number of rows")
        if np.any(self.assignments > 1):
            raise ValueError("assignments must be binary")
        if int(self.counts.sum()) != self.total_reads:
            raise ValueError("counts must sum to total_reads")
        if not 0 <= self.n_hidden <= self.assignments.shape[1]:
            raise ValueError("n_hidden outside assignment width")

    @classmethod
    def from_reads(cls, raw, n_hidden, metadata=None):
        """Collapse raw per-read rows into unique assignments with counts."""
        raw = np.ascontiguousarray(raw, dtype=np.uint8)
        assignments, counts = np.unique(raw, axis=0, return_counts=True)
        return cls(assignments, counts, raw.shape[0], n_hidden, metadata or {})

    def weights(self):
        return self.counts / self.total_reads

    def y_distribution(self):
        """Unique y patterns and their empirical probabilities."""
        y_bits = self.assignments[:, self.n_hidden :]
        patterns, inverse = np.unique(y_bits, axis=0, return_inverse=True)
        w = np.bincount(inverse, weights=self.weights(), minlength=patterns.shape[0])
        return patterns.astype(np.float64), w

    def empirical_probabilities(self, n_bits):
        """Dense probability vector over all 2^n_bits joint states, indexed
        with bit 0 least significant. Oracle-comparison helper."""
        weights = 1 << np.arange(self.assignments.shape[1], dtype=np.int64)
        index = self.assignments.astype(np.int64) @ weights
        dense = np.zeros(2**n_bits)
        dense[index] = self.weights()
        return dense


class Sampler:
    """Common construction and seed plumbing; subclasses draw the reads."""

    name = "base"

    def __init__(self, config=None):
        self.config = config or SamplerConfig()

    def sample(self, model, x, reads=None, seed=None):
        raise NotImplementedError

    def _resolve(self, reads, seed):
        if reads is None:
            reads = self.config.reads
        if seed is None:
            seed = self.config.seed
        if reads < 1:
            raise ValueError("reads must be >= 1")
        return int(reads), int(seed)


class ExactSampler(Sampler):
    """Enumerates the 2^(K+M) states and samples the exact conditional."""

    name = "exact"

    def distribution(self, model, x):
        from .ebm import exact_conditional

        return exact_conditional(model, x)

    def sample(self, model, x, reads=None, seed=None):
        reads, seed = self._resolve(reads, seed)
        dist = self.distribution(model, x)
        counts = rng_from_seed(seed).multinomial(reads, dist.probs)
        hit = counts > 0
        meta = {"sampler": self.name, "beta": 1.0, "seed": seed}
        return SampleSet(dist.states[hit], counts[hit], reads, model.n_hidden, meta)


class GibbsSampler(Sampler):
    """Block Gibbs on the conditional: k | x,y then y | x,k per sweep."""

    name = "gibbs"

    def sample(self, model, x, reads=None, seed=None):
        reads, seed = self._resolve(reads, seed)
        a = model.w1 @ np.asarray(x, dtype=np.float64) + model.b
        raw = gibbs_chain(
            a,
            model.w2,
            model.c,
            reads,
            self.config.burn_in,
            self.config.thin,
            seed,
            backend=self.config.backend,
        )
        meta = {"sampler": self.name, "beta": 1.0, "seed": seed, "burn_in": self.config.burn_in, "thin": self.config.thin}
        return SampleSet.from_reads(raw, model.n_hidden, meta)


class SimAnnealSampler(Sampler):
    """Quantum-annealer stand-in on the encoded and clamped Ising model.

    Each read is an independent Metropolis anneal from uniform spins along
    the configured beta ramp; the collected bits follow roughly the
    Boltzmann distribution at the final inverse temperature.
    """

    name = "simanneal"

    def prepare(self, model, x):
        """The hardware-programming pipeline; returns (ising, clamp report)."""
        bqm = build_conditional_bqm(model, x, self.config.beta_eff)
        return clamp_to_hardware(bqm_to_ising(bqm))

    def sample(self, model, x, reads=None, seed=None):
        reads, seed = self._resolve(reads, seed)
        ising, report = self.prepare(model, x)
        raw = anneal_reads(
            ising.h,
            ising.symmetric_couplings(),
            self.config.anneal_betas(),
            reads,
            seed,
            backend=self.config.backend,
        )
        meta = {
            "sampler": self.name,
            "beta": self.config.effective_beta_sim,
            "beta_eff": self.config.beta_eff,
            "seed": seed,
            "clipped_coefficients": len(report),
            "max_clip_shift": report.max_shift,
        }
        return SampleSet.from_reads(raw, model.n_hidden, meta)


SAMPLERS = {cls.name: cls for cls in (ExactSampler, GibbsSampler, SimAnnealSampler)}


def make_sampler(name, config=None):
    """Instantiate a sampler by registry name ('exact', 'gibbs', 'simanneal')."""
    try:
        cls = SAMPLERS[name]
    except KeyError:
        raise ValueError(f"unknown sampler {name!r}; choose from {sorted(SAMPLERS)}") from None
    return cls(config)
