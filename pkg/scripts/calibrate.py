#!/usr/bin/env python3
"""Scan reservoir operating points for the heterogeneity experiments.

Prints, per candidate configuration, the variant metrics that the trend
experiments rest on: held-out accuracy, effective state rank, average
activation, and active-neuron counts for the homogeneous and fully
heterogeneous variants over a handful of paired seeds.
"""

import argparse
import dataclasses
import itertools
import time

import numpy as np

from spikelab.config import ExperimentConfig
from spikelab.pipeline import evaluate_pipeline


def scan(cfg: ExperimentConfig, seeds, variants=("HoNHoS", "HeNHeS")):
    rows = {}
    for variant in variants:
        rows[variant] = [evaluate_pipeline(cfg, variant, seed) for seed in seeds]
    return rows


def summarize(tag, rows):
    out = [tag]
    for variant, ms in rows.items():
        acc = np.mean([m.accuracy for m in ms])
        rank = np.mean([m.state_rank for m in ms])
        act = np.mean([m.avg_activation for m in ms])
        active = np.mean([m.active_neurons for m in ms])
        out.append(
            f"  {variant}: acc={acc:.3f} rank={rank:5.1f} nu={act:7.3f} active={active:6.1f}"
        )
    ho, he = rows["HoNHoS"], rows["HeNHeS"]
    rank_wins = sum(h.state_rank > o.state_rank for h, o in zip(he, ho))
    rank_ties = sum(h.state_rank == o.state_rank for h, o in zip(he, ho))
    acc_gap = np.mean([h.accuracy - o.accuracy for h, o in zip(he, ho)])
    nu_ok = np.mean([h.avg_activation for h in he]) <= np.mean([o.avg_activation for o in ho])
    out.append(
        f"  rank wins {rank_wins}/{len(he)} (ties {rank_ties})  acc_gap={acc_gap:+.3f}  nu_le={nu_ok}"
    )
    print("\n".join(out), flush=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=4)
    ap.add_argument("--w-scales", type=float, nargs="+", default=[6.0, 12.0, 20.0])
    ap.add_argument("--p-irs", type=float, nargs="+", default=[0.1, 0.25])
    ap.add_argument("--c-inhib", type=float, nargs="+", default=[0.3])
    ap.add_argument("--inhib-gains", type=float, nargs="+", default=[4.0])
    ap.add_argument("--epochs", type=int, nargs="+", default=[1])
    ap.add_argument("--lams", type=float, nargs="+", default=[2.0])
    args = ap.parse_args()

    seeds = list(range(1, args.seeds + 1))
    base = ExperimentConfig()
    for w, p, ci, lam, ig, ep in itertools.product(
        args.w_scales, args.p_irs, args.c_inhib, args.lams, args.inhib_gains, args.epochs
    ):
        cfg = dataclasses.replace(
            base,
            network=dataclasses.replace(
                base.network, w_scale=w, p_ir=p, c_ie=ci, c_ii=ci, lam=lam, w_inhib_gain=ig
            ),
            sim=dataclasses.replace(base.sim, epochs=ep),
        )
        t0 = time.time()
        rows = scan(cfg, seeds)
        summarize(
            f"w={w} p_ir={p} c_i={ci} lam={lam} ig={ig} ep={ep}  ({time.time() - t0:.1f}s)",
            rows,
        )


if __name__ == "__main__":
    main()
