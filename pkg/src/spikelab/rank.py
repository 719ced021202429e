"""Effective-rank analysis of reservoir state matrices.

The effective rank of a state matrix is the smallest number of leading
singular values whose cumulative sum reaches a fraction (0.99 by
default) of the total singular-value sum. It proxies the linear
separation capacity of the reservoir: full rank across m stimuli means
any target assignment over those stimuli is linearly realizable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RankReport", "effective_rank", "linear_separation_rank", "rank_sweep"]


@dataclass(frozen=True)
class RankReport:
    singular_values: np.ndarray
    effective_rank: int
    energy_threshold: float


def effective_rank(matrix, threshold: float = 0.99) -> RankReport:
    """Smallest k whose top-k singular values hold ``threshold`` of the sum.

    The zero matrix reports rank 0. Singular values come back sorted
    nonincreasing. Cumulative fractions are of the plain singular-value
    sum, not the sum of squares.
    """
    f = np.asarray(matrix, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("state matrix contains non-finite entries")
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    sv = np.linalg.svd(f, compute_uv=False)
    total = float(sv.sum())
    if total == 0.0:
        return RankReport(singular_values=sv, effective_rank=0, energy_threshold=threshold)
    frac = np.cumsum(sv) / total
    k = int(np.searchsorted(frac, threshold - 1e-15) + 1)
    k = min(k, sv.size)
    return RankReport(singular_values=sv, effective_rank=k, energy_threshold=threshold)


def linear_separation_rank(states, threshold: float = 0.99) -> int:
    """Effective rank of the stacked final-state matrix for a stimulus set."""
    return effective_rank(np.asarray(states), threshold).effective_rank


def rank_sweep(
    lambda_grid,
    w_scale_grid,
    reps: int,
    base_config,
    variant=None,
    evaluate_cell=None,
):
    """Mean effective rank and active-neuron count over a (lambda, W_scale) grid.

    Each cell builds ``reps`` fresh reservoirs with the cell's density and
    weight scale, runs the probe dataset, and averages the resulting
    effective rank and active-neuron count. Returns a list of row dicts
    matching the CSV schema ``lambda,w_scale,mean_rank,sd_rank,mean_active``.
    """
    if len(lambda_grid) == 0 or len(w_scale_grid) == 0:
        raise ValueError("sweep grids must be nonempty")
    if reps < 1:
        raise ValueError("need at least one repetition per cell")
    if evaluate_cell is None:
        from .pipeline import rank_probe

        evaluate_cell = rank_probe
    rows = []
    for lam in lambda_grid:
        for w_scale in w_scale_grid:
            ranks = np.empty(reps)
            actives = np.empty(reps)
            for rep in range(reps):
                r, active = evaluate_cell(base_config, variant, rep, lam, w_scale)
                ranks[rep] = r
                actives[rep] = active
            rows.append(
                {
                    "lambda": float(lam),
                    "w_scale": float(w_scale),
                    "mean_rank": float(np.mean(ranks)),
                    "sd_rank": float(np.std(ranks)),
                    "mean_active": float(np.mean(actives)),
                }
            )
    return rows
