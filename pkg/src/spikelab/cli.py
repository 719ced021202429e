"""Experiment orchestration command line.

Subcommands: gen-data, ablation, sweep, optimize, report, selftest.
Every command is reproducible byte-for-byte from (config file, seed):
outputs are CSV files plus SVG renderings with fixed formatting.

Exit codes: 0 success, 2 config error, 3 runtime error, 4 self-test
failure. The output directory resolves as: --out flag, then the
SPIKELAB_OUT environment variable, then run.out from the config.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config

ENV_OUT = "SPIKELAB_OUT"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikelab",
        description="Heterogeneous spiking-reservoir experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="config file path")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--out", type=Path, default=None, help="override output directory")
        p.add_argument("--threads", type=int, default=None, help="worker threads for trials")

    common(sub.add_parser("gen-data", help="write the synthetic dataset to disk"))
    common(sub.add_parser("ablation", help="run all heterogeneity variants"))
    p_sweep = sub.add_parser("sweep", help="parameter sweeps")
    common(p_sweep)
    p_sweep.add_argument(
        "--axis",
        choices=("neurons", "lambda_wscale", "train_fraction"),
        default="neurons",
    )
    p_opt = sub.add_parser("optimize", help="hyperparameter-distribution search")
    common(p_opt)
    p_opt.add_argument("--budget", type=int, default=None)
    p_opt.add_argument(
        "--baseline", action="store_true", help="also run equal-budget random search"
    )
    common(sub.add_parser("report", help="render plots and a summary from run artifacts"))
    common(sub.add_parser("selftest", help="fast numerical sanity checks"))
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    run_kwargs = {}
    if args.seed is not None:
        run_kwargs["seed"] = args.seed
    out = args.out or os.environ.get(ENV_OUT)
    if out:
        run_kwargs["out"] = str(out)
    if args.threads is not None:
        run_kwargs["threads"] = args.threads
    if run_kwargs:
        cfg = cfg.with_run(**run_kwargs)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    try:
        return _dispatch(args, cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return 3


def _dispatch(args, cfg: ExperimentConfig) -> int:
    from . import experiments

    out_dir = Path(cfg.run.out)
    if args.command == "gen-data":
        written = experiments.run_gen_data(cfg, out_dir)
        print(f"wrote {len(written)} files to {out_dir}")
        return 0
    if args.command == "ablation":
        experiments.run_ablation(cfg, out_dir, threads=cfg.run.threads)
        print(f"ablation results in {out_dir}")
        return 0
    if args.command == "sweep":
        experiments.run_sweep(cfg, args.axis, out_dir, threads=cfg.run.threads)
        print(f"sweep ({args.axis}) results in {out_dir}")
        return 0
    if args.command == "optimize":
        budget = args.budget if args.budget is not None else cfg.bo.budget
        if budget < 5:
            raise ConfigError(f"optimize needs a budget of at least 5, got {budget}")
        result = experiments.run_optimize(
            cfg, out_dir, budget=budget, baseline=args.baseline
        )
        print(f"incumbent score {result['bo'].best_score:.4f}; trace in {out_dir}")
        return 0
    if args.command == "report":
        return _cmd_report(out_dir)
    if args.command == "selftest":
        return _cmd_selftest()
    raise AssertionError(f"unhandled command {args.command}")


def _cmd_report(run_dir: Path) -> int:
    """Render SVG plots and a text summary from whatever artifacts exist."""
    from .reporting import heatmap_svg, line_plot_svg, read_csv

    artifacts = []
    summary: list[str] = []

    def emit(path: Path, content: str):
        path.write_text(content, encoding="utf-8")
        artifacts.append(path)

    abl = run_dir / "ablation_summary.csv"
    if abl.exists():
        header, rows = read_csv(abl)
        idx = {name: i for i, name in enumerate(header)}
        summary.append("ablation accuracy (mean +/- sd):")
        series = {}
        for j, row in enumerate(rows):
            variant = row[idx["variant"]]
            mean = float(row[idx["mean_accuracy"]])
            sd = float(row[idx["sd_accuracy"]])
            summary.append(f"  {variant}: {mean:.4f} +/- {sd:.4f}")
            series[variant] = [(float(j), mean)]
        emit(
            run_dir / "ablation_accuracy.svg",
            line_plot_svg(series, "Ablation accuracy", "variant index", "accuracy"),
        )

    sweep = run_dir / "sweep_neurons.csv"
    if sweep.exists():
        header, rows = read_csv(sweep)
        idx = {name: i for i, name in enumerate(header)}
        series: dict[str, dict[float, list[float]]] = {}
        for row in rows:
            v = row[idx["variant"]]
            n = float(row[idx["n_recurrent"]])
            series.setdefault(v, {}).setdefault(n, []).append(float(row[idx["accuracy"]]))
        lines = {
            v: [(n, sum(a) / len(a)) for n, a in sorted(pts.items())]
            for v, pts in series.items()
        }
        emit(
            run_dir / "sweep_neurons.svg",
            line_plot_svg(lines, "Accuracy vs reservoir size", "neurons", "accuracy"),
        )
        summary.append("neuron sweep: see sweep_neurons.svg")

    frac = run_dir / "sweep_train_fraction.csv"
    if frac.exists():
        header, rows = read_csv(frac)
        idx = {name: i for i, name in enumerate(header)}
        series = {}
        for row in rows:
            v = row[idx["variant"]]
            f = float(row[idx["train_fraction"]])
            series.setdefault(v, {}).setdefault(f, []).append(float(row[idx["accuracy"]]))
        lines = {
            v: [(f, sum(a) / len(a)) for f, a in sorted(pts.items())]
            for v, pts in series.items()
        }
        emit(
            run_dir / "sweep_train_fraction.svg",
            line_plot_svg(lines, "Accuracy vs training fraction", "train fraction", "accuracy"),
        )
        summary.append("train-fraction sweep: see sweep_train_fraction.svg")

    for grid_path in sorted(run_dir.glob("rank_grid_*.csv")):
        header, rows = read_csv(grid_path)
        idx = {name: i for i, name in enumerate(header)}
        xs = sorted({float(r[idx["lambda"]]) for r in rows})
        ys = sorted({float(r[idx["w_scale"]]) for r in rows})
        values = {
            (float(r[idx["lambda"]]), float(r[idx["w_scale"]])): float(r[idx["mean_rank"]])
            for r in rows
        }
        variant = grid_path.stem.replace("rank_grid_", "")
        emit(
            run_dir / f"rank_grid_{variant}.svg",
            heatmap_svg(xs, ys, values, f"Effective rank ({variant})", "lambda", "W_scale"),
        )
        summary.append(f"rank grid {variant}: see rank_grid_{variant}.svg")

    trace = run_dir / "bo_trace.csv"
    if trace.exists():
        header, rows = read_csv(trace)
        idx = {name: i for i, name in enumerate(header)}
        pts = [(float(r[idx["iter"]]), float(r[idx["incumbent"]])) for r in rows]
        series = {"incumbent": pts, "score": [(float(r[idx["iter"]]), float(r[idx["score"]])) for r in rows]}
        emit(
            run_dir / "bo_trace.svg",
            line_plot_svg(series, "Optimizer convergence", "evaluation", "score"),
        )
        best = max(float(r[idx["incumbent"]]) for r in rows)
        summary.append(f"optimizer incumbent: {best:.4f} (see bo_trace.svg)")

    if not summary:
        summary = ["no artifacts found"]
    (run_dir / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    print("\n".join(summary))
    return 0


def _cmd_selftest() -> int:
    """Fast numeric sanity checks across the numerical core."""
    import math

    import numpy as np

    from .bayesopt import MaternParams, ei_value, matern_value
    from .lif import NeuronParams, NeuronState, step_neuron
    from .rank import effective_rank
    from .stdp import StdpParams, SynapseState, decay_traces, on_post_spike, on_pre_spike
    from .wasserstein import EmpiricalDistribution, w2_1d

    checks: list[tuple[str, bool]] = []

    state, spiked = step_neuron(
        NeuronState(v=1.0), NeuronParams(tau_m=10.0, v_th=2.0), 0.0, t=10.0, dt=10.0
    )
    checks.append(("lif decay", not spiked and abs(state.v - math.exp(-1)) < 1e-12))

    s = SynapseState(weight=0.5, params=StdpParams(a_plus_rate=0.1, tau_plus=20.0))
    s = on_pre_spike(s)
    s = decay_traces(s, 10.0)
    s = on_post_spike(s)
    checks.append(("stdp pair rule", abs((s.weight - 0.5) - 0.1 * math.exp(-0.5)) < 1e-12))

    p = EmpiricalDistribution.dirac(0.0)
    q = EmpiricalDistribution.dirac(3.0)
    checks.append(("w2 dirac", abs(w2_1d(p, q) - 3.0) < 1e-12))

    kernel = MaternParams(variance=1.0, length_scale=1.0, smoothness=0.5)
    checks.append(("matern nu=1/2", abs(matern_value(1.0, kernel) - math.exp(-1)) < 1e-9))
    checks.append(("ei at incumbent", abs(ei_value(1.0, 1.0, 1.0) - 0.3989422804) < 1e-6))

    rank = effective_rank(np.diag([99.0, 1.0]), 0.99).effective_rank
    checks.append(("effective rank", rank == 1))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok &= passed
    return 0 if ok else 4


if __name__ == "__main__":
    sys.exit(main())
