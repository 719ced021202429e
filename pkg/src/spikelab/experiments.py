"""The four canonical experiments behind the CLI subcommands.

Each experiment maps (config, seed) to CSV artifacts deterministically:
independent trials derive their own seed streams, run in a thread pool
when requested, and are written in a fixed order regardless of
completion order.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bayesopt import bo_loop, random_search
from .config import ExperimentConfig
from .datasets import gen_synthetic
from .encoding import save_frames_binary
from .params import CandidateConfig
from .pipeline import derive_seed, evaluate_pipeline, make_dataset, make_objective
from .rank import rank_sweep
from .reporting import write_csv

__all__ = [
    "run_gen_data",
    "run_ablation",
    "run_sweep",
    "run_optimize",
]


def _pool_map(fn, jobs, threads: int):
    """Order-preserving map over independent jobs."""
    if threads <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def run_gen_data(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Materialize the synthetic dataset: frame binaries, labels, spike CSVs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    data = gen_synthetic(
        task=cfg.data.task,
        n_classes=cfg.data.n_classes,
        n_per_class=cfg.data.n_per_class,
        dims=(cfg.data.height, cfg.data.width),
        noise=cfg.data.noise,
        rng_seed=derive_seed(cfg.run.seed, "data", 0),
        n_frames=cfg.data.frames,
        frame_period=cfg.data.frame_period,
    )
    trains, labels, _, _ = make_dataset(cfg, cfg.run.seed)
    written = []
    label_rows = []
    for i, ((seq, label), train) in enumerate(zip(data, trains)):
        stem = f"seq_{i:04d}"
        frame_path = out_dir / f"{stem}.fsb"
        save_frames_binary(seq, frame_path)
        spike_path = out_dir / f"{stem}.spikes.csv"
        spike_path.write_text(train.to_csv(), encoding="utf-8")
        label_rows.append([stem, label])
        written += [frame_path, spike_path]
    labels_path = out_dir / "labels.csv"
    write_csv(labels_path, ["sequence", "label"], label_rows)
    written.append(labels_path)
    return written


def run_ablation(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> dict:
    """All heterogeneity variants x repeats on the configured task."""
    out_dir.mkdir(parents=True, exist_ok=True)
    variants = list(cfg.experiment.variants)
    seeds = [cfg.run.seed + r for r in range(cfg.experiment.repeats)]
    jobs = [(v, s) for v in variants for s in seeds]
    metrics = _pool_map(lambda job: evaluate_pipeline(cfg, job[0], job[1]), jobs, threads)

    trial_rows = []
    for (variant, seed), m in zip(jobs, metrics):
        trial_rows.append(
            [
                variant,
                seed,
                m.accuracy,
                m.train_accuracy,
                m.state_rank,
                m.avg_activation,
                m.active_neurons,
                m.ac_ops,
            ]
        )
    write_csv(
        out_dir / "ablation_trials.csv",
        [
            "variant",
            "seed",
            "accuracy",
            "train_accuracy",
            "state_rank",
            "avg_activation",
            "active_neurons",
            "ac_ops",
        ],
        trial_rows,
    )
    summary_rows = []
    by_variant = {}
    for variant in variants:
        ms = [m for (v, _), m in zip(jobs, metrics) if v == variant]
        accs = np.array([m.accuracy for m in ms])
        nus = np.array([m.avg_activation for m in ms])
        summary_rows.append(
            [
                variant,
                float(accs.mean()),
                float(accs.std()),
                float(nus.mean()),
                float(nus.std()),
                float(np.mean([m.state_rank for m in ms])),
                float(np.mean([m.active_neurons for m in ms])),
                float(np.mean([m.ac_ops for m in ms])),
            ]
        )
        by_variant[variant] = ms
    write_csv(
        out_dir / "ablation_summary.csv",
        [
            "variant",
            "mean_accuracy",
            "sd_accuracy",
            "mean_avg_activation",
            "sd_avg_activation",
            "mean_state_rank",
            "mean_active_neurons",
            "mean_ac_ops",
        ],
        summary_rows,
    )
    return by_variant


def run_sweep(cfg: ExperimentConfig, axis: str, out_dir: Path, threads: int = 1) -> None:
    """One of the three sweep axes: neurons, lambda x W_scale, train fraction."""
    out_dir.mkdir(parents=True, exist_ok=True)
    if axis == "neurons":
        _sweep_neurons(cfg, out_dir, threads)
    elif axis == "lambda_wscale":
        _sweep_lambda_wscale(cfg, out_dir, threads)
    elif axis == "train_fraction":
        _sweep_train_fraction(cfg, out_dir, threads)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")


def _sweep_neurons(cfg, out_dir, threads):
    seeds = [cfg.run.seed + r for r in range(cfg.experiment.repeats)]
    variants = list(cfg.experiment.variants)
    jobs = [(n, v, s) for n in cfg.sweep.neurons for v in variants for s in seeds]
    metrics = _pool_map(
        lambda job: evaluate_pipeline(cfg, job[1], job[2], n_override=job[0]), jobs, threads
    )
    rows = [
        [n, v, s, m.accuracy, m.state_rank, m.avg_activation, m.active_neurons]
        for (n, v, s), m in zip(jobs, metrics)
    ]
    write_csv(
        out_dir / "sweep_neurons.csv",
        ["n_recurrent", "variant", "seed", "accuracy", "state_rank", "avg_activation", "active_neurons"],
        rows,
    )


def _sweep_lambda_wscale(cfg, out_dir, threads):
    for variant in cfg.experiment.variants:
        rows = rank_sweep(
            cfg.sweep.lambdas,
            cfg.sweep.w_scales,
            reps=cfg.sweep.reps,
            base_config=cfg,
            variant=variant,
        )
        write_csv(
            out_dir / f"rank_grid_{variant}.csv",
            ["lambda", "w_scale", "mean_rank", "sd_rank", "mean_active"],
            [
                [r["lambda"], r["w_scale"], r["mean_rank"], r["sd_rank"], r["mean_active"]]
                for r in rows
            ],
        )


def _sweep_train_fraction(cfg, out_dir, threads):
    seeds = [cfg.run.seed + r for r in range(cfg.experiment.repeats)]
    variants = list(cfg.experiment.variants)
    jobs = [(f, v, s) for f in cfg.sweep.train_fractions for v in variants for s in seeds]
    metrics = _pool_map(
        lambda job: evaluate_pipeline(cfg, job[1], job[2], train_fraction=job[0]),
        jobs,
        threads,
    )
    rows = [
        [f, v, s, m.accuracy, m.train_accuracy]
        for (f, v, s), m in zip(jobs, metrics)
    ]
    write_csv(
        out_dir / "sweep_train_fraction.csv",
        ["train_fraction", "variant", "seed", "accuracy", "train_accuracy"],
        rows,
    )


def _candidate_blob(cand: CandidateConfig) -> str:
    return json.dumps(cand.as_dict(), sort_keys=True, separators=(",", ":"))


def run_optimize(
    cfg: ExperimentConfig,
    out_dir: Path,
    budget: int | None = None,
    baseline: bool = False,
) -> dict:
    """Search hyperparameter distributions with the surrogate optimizer.

    Writes the evaluation trace and the incumbent candidate; with
    ``baseline`` also runs equal-budget random search for comparison.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    budget = budget if budget is not None else cfg.bo.budget
    space, objective = make_objective(cfg)
    result = bo_loop(
        objective,
        space,
        n_init=cfg.bo.n_init,
        budget=budget,
        pool_size=cfg.bo.pool_size,
        rng_seed=derive_seed(cfg.run.seed, "bo"),
        smoothness=cfg.bo.nu,
        noise=cfg.bo.noise,
        samples_per_dist=cfg.bo.samples_per_dist,
        n_projections=cfg.bo.n_projections,
    )
    rows = [
        [t.iteration, t.score, t.incumbent_score, t.distance_to_incumbent, _candidate_blob(t.config)]
        for t in result.trace
    ]
    write_csv(
        out_dir / "bo_trace.csv",
        ["iter", "score", "incumbent", "distance_to_incumbent", "config"],
        rows,
    )
    (out_dir / "incumbent.json").write_text(
        _candidate_blob(result.best_config) + "\n", encoding="utf-8"
    )
    out = {"bo": result}
    if baseline:
        rs = random_search(
            objective, space, budget=budget, rng_seed=derive_seed(cfg.run.seed, "bo")
        )
        write_csv(
            out_dir / "random_trace.csv",
            ["iter", "score", "incumbent", "distance_to_incumbent", "config"],
            [
                [t.iteration, t.score, t.incumbent_score, t.distance_to_incumbent, _candidate_blob(t.config)]
                for t in rs.trace
            ],
        )
        out["random"] = rs
    return out
