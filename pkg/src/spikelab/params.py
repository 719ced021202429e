"""Hyperparameter-search candidates as joint distributions.

A candidate bundles named hyperparameters, each either a fixed scalar
with a range or a gamma-distributed parameter whose mean is searched
within a range. Materializing a candidate draws one value per entry per
sample, giving an empirical point cloud in R^d; fixed scalars contribute
constant (Dirac) coordinates. Distances between candidates are sliced
Wasserstein distances between these clouds, computed with common random
numbers so that identical candidates sit at distance exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .wasserstein import EmpiricalDistribution, sliced_w2

__all__ = [
    "ScalarParam",
    "DistParam",
    "CandidateConfig",
    "default_candidate",
    "materialize",
    "param_distribution_distance",
    "SearchSpace",
]


@dataclass(frozen=True)
class ScalarParam:
    """Fixed scalar hyperparameter carried with its admissible range."""

    name: str
    value: float
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (self.lo <= self.value <= self.hi):
            raise ValueError(f"{self.name}={self.value} outside range ({self.lo}, {self.hi})")


@dataclass(frozen=True)
class DistParam:
    """Gamma-distributed hyperparameter searched through its mean.

    The gamma shape stays fixed; the scale is mean/shape, so moving the
    mean rescales the whole distribution.
    """

    name: str
    mean: float
    lo: float
    hi: float
    shape: float = 2.0

    def __post_init__(self) -> None:
        if not (self.lo <= self.mean <= self.hi):
            raise ValueError(f"{self.name}={self.mean} outside range ({self.lo}, {self.hi})")
        if self.shape <= 0.0:
            raise ValueError(f"{self.name}: gamma shape must be positive")

    @property
    def scale(self) -> float:
        return self.mean / self.shape


Entry = ScalarParam | DistParam


@dataclass(frozen=True)
class CandidateConfig:
    """Ordered collection of named hyperparameter entries."""

    entries: tuple[Entry, ...]

    def schema(self) -> tuple[tuple[str, str], ...]:
        return tuple((e.name, type(e).__name__) for e in self.entries)

    def get(self, name: str) -> Entry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def value_of(self, name: str) -> float:
        e = self.get(name)
        return e.value if isinstance(e, ScalarParam) else e.mean

    def with_value(self, name: str, value: float) -> "CandidateConfig":
        new = []
        found = False
        for e in self.entries:
            if e.name == name:
                found = True
                if isinstance(e, ScalarParam):
                    new.append(replace(e, value=float(value)))
                else:
                    new.append(replace(e, mean=float(value)))
            else:
                new.append(e)
        if not found:
            raise KeyError(name)
        return CandidateConfig(tuple(new))

    def as_dict(self) -> dict[str, float]:
        return {e.name: self.value_of(e.name) for e in self.entries}


def default_candidate() -> CandidateConfig:
    """Desk-scale search schema with the stock initial values and ranges.

    The first seven entries are opaque scalars carried through the search
    without binding to any pipeline knob; lam, p_ir, the two membrane
    time-constant distributions, and the plasticity-rate constant bind to
    the reservoir pipeline.
    """
    return CandidateConfig(
        (
            ScalarParam("eta", 10.0, 0.0, 50.0),
            ScalarParam("gamma", 5.0, 0.0, 10.0),
            ScalarParam("zeta", 2.5, 0.0, 10.0),
            ScalarParam("eta_star", 1.0, 0.0, 3.0),
            ScalarParam("g", 2.0, 0.0, 10.0),
            ScalarParam("omega", 0.5, 0.0, 1.0),
            ScalarParam("k", 50.0, 0.0, 100.0),
            ScalarParam("lam", 1.0, 0.0, 2.0),
            ScalarParam("p_ir", 0.05, 0.0, 0.1),
            DistParam("tau_e", 50.0, 0.0, 100.0),
            DistParam("tau_i", 50.0, 0.0, 100.0),
            DistParam("a_const", 30.0, 0.0, 60.0),
        )
    )


def check_schema(a: CandidateConfig, b: CandidateConfig) -> None:
    if a.schema() != b.schema():
        raise ValueError(f"candidate schemas differ: {a.schema()} vs {b.schema()}")


def materialize(cfg: CandidateConfig, n_samples: int, rng_seed: int) -> EmpiricalDistribution:
    """Draw the candidate's joint empirical distribution in R^d.

    Each entry owns one coordinate. Per-entry child streams are derived
    from (rng_seed, entry index) so two candidates materialized with the
    same seed share their base randomness: entries with equal settings
    produce identical coordinates, and gamma entries with the same shape
    produce coordinates proportional to their means.
    """
    if n_samples <= 0:
        raise ValueError(f"need at least one sample, got {n_samples}")
    cols = []
    for idx, e in enumerate(cfg.entries):
        if isinstance(e, ScalarParam):
            cols.append(np.full(n_samples, e.value))
        else:
            rng = np.random.default_rng(np.random.SeedSequence(entropy=rng_seed, spawn_key=(idx,)))
            if e.mean <= 0.0:
                cols.append(np.zeros(n_samples))
            else:
                cols.append(rng.gamma(e.shape, e.scale, size=n_samples))
    return EmpiricalDistribution.from_samples(np.stack(cols, axis=1))


def param_distribution_distance(
    cfg_a: CandidateConfig,
    cfg_b: CandidateConfig,
    samples_per_dist: int = 256,
    rng_seed: int = 0,
    n_projections: int = 128,
) -> float:
    """Sliced W2 distance between two candidates' joint distributions.

    Both candidates materialize with the same base seed (common random
    numbers), so identical candidates are at distance zero and a pure
    shift of one fixed scalar moves the distance by exactly that shift.
    Projection directions derive from the same seed, making the distance
    deterministic and symmetric for a fixed seed.
    """
    check_schema(cfg_a, cfg_b)
    cloud_a = materialize(cfg_a, samples_per_dist, rng_seed)
    cloud_b = materialize(cfg_b, samples_per_dist, rng_seed)
    proj_seed = np.random.SeedSequence(entropy=rng_seed, spawn_key=(10_000,))
    return sliced_w2(cloud_a, cloud_b, n_projections=n_projections, rng_seed=proj_seed)


@dataclass(frozen=True)
class SearchSpace:
    """A candidate template plus the entry names the search may vary."""

    template: CandidateConfig
    varied: tuple[str, ...]

    def __post_init__(self) -> None:
        names = {e.name for e in self.template.entries}
        for v in self.varied:
            if v not in names:
                raise ValueError(f"varied entry {v!r} not in template schema")
        if not self.varied:
            raise ValueError("search space must vary at least one entry")

    def bounds(self) -> list[tuple[float, float]]:
        out = []
        for name in self.varied:
            e = self.template.get(name)
            out.append((e.lo, e.hi))
        return out

    def make(self, values) -> CandidateConfig:
        cfg = self.template
        for name, val in zip(self.varied, values):
            lo, hi = self.template.get(name).lo, self.template.get(name).hi
            span = hi - lo
            val = min(max(val, lo + 1e-9 * span), hi - 1e-9 * span)
            cfg = cfg.with_value(name, val)
        return cfg

    def sample(self, rng: np.random.Generator) -> CandidateConfig:
        vals = [rng.uniform(lo, hi) for lo, hi in self.bounds()]
        return self.make(vals)

    def latin_hypercube(self, n: int, rng: np.random.Generator) -> list[CandidateConfig]:
        """Stratified initial design over the varied entries."""
        bounds = self.bounds()
        d = len(bounds)
        u = (rng.random((n, d)) + np.array([rng.permutation(n) for _ in range(d)]).T) / n
        out = []
        for row in u:
            vals = [lo + (hi - lo) * x for (lo, hi), x in zip(bounds, row)]
            out.append(self.make(vals))
        return out
