"""Gaussian-process surrogate over hyperparameter distributions.

The covariance is a Matern kernel evaluated on Wasserstein distances
between candidate distributions instead of Euclidean distances between
points. Candidates are scored by expected improvement against the best
observation so far, with acquisition maximized over a random pool. The
whole loop is deterministic under a fixed seed: one distance context
(sample seed + projection directions) is shared for the full run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kv as bessel_kv

from .lif import GammaSpec
from .params import CandidateConfig, SearchSpace, param_distribution_distance

__all__ = [
    "MaternParams",
    "DistanceContext",
    "matern_value",
    "matern_w",
    "GpModel",
    "IllConditionedKernelError",
    "gp_fit",
    "gp_posterior",
    "expected_improvement",
    "suggest_next",
    "BoTraceEntry",
    "BoResult",
    "bo_loop",
    "random_search",
    "fit_gamma_init",
    "median_heuristic",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / _SQRT2PI


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class MaternParams:
    """Variance, length scale, and smoothness of the Matern family."""

    variance: float = 1.0
    length_scale: float = 1.0
    smoothness: float = 1.5

    def __post_init__(self) -> None:
        if not (self.variance > 0 and self.length_scale > 0 and self.smoothness > 0):
            raise ValueError("Matern parameters must all be positive")


@dataclass
class DistanceContext:
    """Shared randomness and cache for candidate distances within one run.

    Every kernel evaluation in a run must use the same context so the
    metric is deterministic (the GP would otherwise see a noisy, possibly
    asymmetric Gram matrix).
    """

    samples_per_dist: int = 256
    n_projections: int = 128
    rng_seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def distance(self, a: CandidateConfig, b: CandidateConfig) -> float:
        if a == b:
            return 0.0
        key = (a, b) if hash(a) <= hash(b) else (b, a)
        hit = self._cache.get(key)
        if hit is None:
            hit = param_distribution_distance(
                a,
                b,
                samples_per_dist=self.samples_per_dist,
                rng_seed=self.rng_seed,
                n_projections=self.n_projections,
            )
            self._cache[key] = hit
        return hit


def matern_value(d: float, params: MaternParams) -> float:
    """Matern covariance as a function of distance.

    variance * 2^(1-nu)/Gamma(nu) * (sqrt(2 nu) d / kappa)^nu
    * K_nu(sqrt(2 nu) d / kappa), with the d -> 0 limit equal to the
    variance. K_nu is the modified Bessel function of the second kind.
    """
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    nu = params.smoothness
    if d < 1e-14 * params.length_scale:
        return params.variance
    arg = math.sqrt(2.0 * nu) * d / params.length_scale
    val = params.variance * (2.0 ** (1.0 - nu) / math.gamma(nu)) * arg**nu * float(bessel_kv(nu, arg))
    # Guard the far tail where arg^nu * K_nu underflows to 0 * inf.
    if not math.isfinite(val):
        return 0.0
    return val


def matern_w(
    a: CandidateConfig,
    b: CandidateConfig,
    params: MaternParams,
    ctx: DistanceContext | None = None,
) -> float:
    """Matern kernel on the Wasserstein distance between two candidates."""
    ctx = ctx if ctx is not None else DistanceContext()
    return matern_value(ctx.distance(a, b), params)


class IllConditionedKernelError(RuntimeError):
    pass


_JITTERS = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)


@dataclass
class GpModel:
    """Fitted GP state: observations, kernel, and the factorized Gram matrix."""

    configs: tuple[CandidateConfig, ...]
    scores: np.ndarray
    kernel: MaternParams
    noise: float
    ctx: DistanceContext
    chol: np.ndarray
    alpha: np.ndarray
    incumbent_index: int

    @property
    def incumbent(self) -> tuple[CandidateConfig, float]:
        return self.configs[self.incumbent_index], float(self.scores[self.incumbent_index])


def _gram(configs, kernel, ctx) -> np.ndarray:
    n = len(configs)
    gram = np.empty((n, n))
    for i in range(n):
        gram[i, i] = kernel.variance
        for j in range(i + 1, n):
            gram[i, j] = gram[j, i] = matern_value(ctx.distance(configs[i], configs[j]), kernel)
    return gram


def gp_fit(
    observations: list[tuple[CandidateConfig, float]],
    kernel: MaternParams,
    noise: float = 0.0,
    ctx: DistanceContext | None = None,
) -> GpModel:
    """Fit the zero-mean GP to (candidate, score) observations.

    Cholesky-factorizes K + noise*I, escalating a diagonal jitter up to
    1e-6 if needed; beyond that the kernel is declared ill-conditioned.
    """
    if not observations:
        raise ValueError("need at least one observation")
    if noise < 0.0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    ctx = ctx if ctx is not None else DistanceContext()
    configs = tuple(cfg for cfg, _ in observations)
    scores = np.array([s for _, s in observations], dtype=np.float64)
    gram = _gram(configs, kernel, ctx)
    chol = None
    for jitter in _JITTERS:
        try:
            chol = np.linalg.cholesky(gram + (noise + jitter) * np.eye(len(configs)))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise IllConditionedKernelError(
            f"Gram matrix not positive definite with jitter up to {_JITTERS[-1]}"
        )
    alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, scores))
    return GpModel(
        configs=configs,
        scores=scores,
        kernel=kernel,
        noise=noise,
        ctx=ctx,
        chol=chol,
        alpha=alpha,
        incumbent_index=int(np.argmax(scores)),
    )


def gp_posterior(model: GpModel, query: CandidateConfig) -> tuple[float, float]:
    """Posterior mean and variance at a query candidate."""
    k_star = np.array(
        [matern_value(model.ctx.distance(query, c), model.kernel) for c in model.configs]
    )
    mean = float(k_star @ model.alpha)
    v = np.linalg.solve(model.chol, k_star)
    var = float(model.kernel.variance - v @ v)
    return mean, max(var, 0.0)


def expected_improvement(model: GpModel, query: CandidateConfig) -> float:
    """Expected improvement of the query over the incumbent score."""
    mean, var = gp_posterior(model, query)
    _, f_best = model.incumbent
    return ei_value(mean, math.sqrt(var), f_best)


def ei_value(mean: float, sigma: float, f_best: float) -> float:
    """Closed-form EI; degenerates to max(mean - f_best, 0) at sigma = 0."""
    if sigma <= 0.0:
        return max(mean - f_best, 0.0)
    z = (mean - f_best) / sigma
    return (mean - f_best) * _norm_cdf(z) + sigma * _norm_pdf(z)


def suggest_next(model: GpModel, candidate_pool: list[CandidateConfig]) -> CandidateConfig:
    """Pool element with maximal EI; ties resolve to the lowest index."""
    if not candidate_pool:
        raise ValueError("candidate pool is empty")
    best_idx = 0
    best_ei = -math.inf
    for i, cand in enumerate(candidate_pool):
        ei = expected_improvement(model, cand)
        if ei > best_ei:
            best_ei = ei
            best_idx = i
    return candidate_pool[best_idx]


@dataclass(frozen=True)
class BoTraceEntry:
    iteration: int
    config: CandidateConfig
    score: float
    incumbent_score: float
    distance_to_incumbent: float
    failed: bool = False


@dataclass
class BoResult:
    best_config: CandidateConfig
    best_score: float
    trace: list[BoTraceEntry]


def median_heuristic(configs, ctx: DistanceContext) -> float:
    """Median pairwise candidate distance; the stock length-scale choice."""
    dists = [
        ctx.distance(configs[i], configs[j])
        for i in range(len(configs))
        for j in range(i + 1, len(configs))
    ]
    dists = [d for d in dists if d > 0.0]
    if not dists:
        return 1.0
    return float(np.median(dists))


def _evaluate(objective, cfg, scores):
    """Run the objective, mapping failures to the worst score seen so far."""
    try:
        return float(objective(cfg)), False
    except Exception:
        worst = min(scores) if scores else 0.0
        return worst, True


def bo_loop(
    objective,
    space: SearchSpace,
    n_init: int = 5,
    budget: int = 25,
    pool_size: int = 256,
    rng_seed: int = 0,
    smoothness: float = 1.5,
    noise: float = 1e-6,
    samples_per_dist: int = 256,
    n_projections: int = 128,
) -> BoResult:
    """Maximize the objective over candidate distributions.

    The initial design is a Latin hypercube over the varied entries; each
    subsequent iteration refits the GP (scores centered, median-heuristic
    length scale from the initial design), draws a fresh uniform pool,
    and evaluates the EI argmax. Failed objective evaluations enter the
    record at the worst score seen so far, flagged in the trace, and the
    loop continues.
    """
    if n_init < 1 or budget < n_init:
        raise ValueError(f"need budget >= n_init >= 1, got n_init={n_init}, budget={budget}")
    seeds = np.random.SeedSequence(rng_seed).spawn(3)
    rng_design = np.random.default_rng(seeds[0])
    rng_pool = np.random.default_rng(seeds[1])
    ctx = DistanceContext(
        samples_per_dist=samples_per_dist,
        n_projections=n_projections,
        rng_seed=rng_seed,
    )

    observations: list[tuple[CandidateConfig, float]] = []
    scores: list[float] = []
    trace: list[BoTraceEntry] = []
    best_idx = 0

    def record(i, cfg, score, failed):
        nonlocal best_idx
        observations.append((cfg, score))
        scores.append(score)
        if (not failed) and score > scores[best_idx]:
            best_idx = len(scores) - 1
        inc_cfg, inc_score = observations[best_idx]
        trace.append(
            BoTraceEntry(
                iteration=i,
                config=cfg,
                score=score,
                incumbent_score=inc_score,
                distance_to_incumbent=ctx.distance(cfg, inc_cfg),
                failed=failed,
            )
        )

    for i, cfg in enumerate(space.latin_hypercube(n_init, rng_design)):
        score, failed = _evaluate(objective, cfg, scores)
        record(i, cfg, score, failed)

    kappa = median_heuristic([c for c, _ in observations], ctx)
    for i in range(n_init, budget):
        y = np.array(scores)
        y_center = float(np.mean(y))
        sigma2 = max(float(np.var(y)), 1e-6)
        kernel = MaternParams(variance=sigma2, length_scale=kappa, smoothness=smoothness)
        centered = [(cfg, s - y_center) for (cfg, s) in observations]
        model = gp_fit(centered, kernel, noise=noise, ctx=ctx)
        pool = [space.sample(rng_pool) for _ in range(pool_size)]
        pick = suggest_next(model, pool)
        score, failed = _evaluate(objective, pick, scores)
        record(i, pick, score, failed)

    best_cfg, best_score = observations[best_idx]
    return BoResult(best_config=best_cfg, best_score=float(best_score), trace=trace)


def random_search(objective, space: SearchSpace, budget: int, rng_seed: int = 0) -> BoResult:
    """Uniform random baseline with the same trace bookkeeping as bo_loop."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(rng_seed).spawn(3)[2])
    ctx = DistanceContext(rng_seed=rng_seed)
    trace: list[BoTraceEntry] = []
    scores: list[float] = []
    configs: list[CandidateConfig] = []
    best_idx = 0
    for i in range(budget):
        cfg = space.sample(rng)
        score, failed = _evaluate(objective, cfg, scores)
        configs.append(cfg)
        scores.append(score)
        if (not failed) and score > scores[best_idx]:
            best_idx = i
        trace.append(
            BoTraceEntry(
                iteration=i,
                config=cfg,
                score=score,
                incumbent_score=scores[best_idx],
                distance_to_incumbent=ctx.distance(cfg, configs[best_idx]),
                failed=failed,
            )
        )
    return BoResult(best_config=configs[best_idx], best_score=float(scores[best_idx]), trace=trace)


def fit_gamma_init(samples) -> GammaSpec:
    """Method-of-moments gamma fit: shape = mean^2/var, scale = var/mean.

    Accepts raw positive samples (e.g. measured membrane timescales) and
    returns the spec whose mean and variance reproduce the sample moments
    exactly.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise ValueError(f"need at least two samples, got {x.size}")
    if np.any(x <= 0.0):
        raise ValueError("samples must be positive")
    mean = float(np.mean(x))
    var = float(np.var(x))
    if var <= 0.0:
        raise ValueError("samples have zero variance; gamma fit undefined")
    return GammaSpec(shape=mean * mean / var, scale=var / mean)
