"""End-to-end evaluation of one reservoir variant on a synthetic task.

Ties the pieces together: generate and encode the dataset, build the
wired reservoir for a heterogeneity variant, expose it to the training
stimuli with plasticity on, fit the linear readout on training states,
and score held-out stimuli. Randomness is split into independent named
streams derived from the master seed, so toggling a heterogeneity flag
redraws only the parameter stream it owns and never perturbs the
topology, the dataset, or the readout wiring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .datasets import gen_synthetic
from .encoding import encode_frames, filter_frames
from .lif import GammaSpec, NeuronParams, sample_population
from .params import CandidateConfig, SearchSpace, default_candidate
from .rank import linear_separation_rank
from .simulation import Reservoir, fit_readout, predict_batch
from .spikes import SpikeTrain
from .stdp import StdpSpecs, sample_stdp_population
from .topology import attach_io, block_polarities, build_recurrent

__all__ = [
    "VARIANTS",
    "PipelineMetrics",
    "derive_seed",
    "make_dataset",
    "build_reservoir",
    "evaluate_pipeline",
    "rank_probe",
    "make_objective",
]

# Variant name -> (heterogeneous neurons, heterogeneous plasticity).
VARIANTS = {
    "HoNHoS": (False, False),
    "HeNHoS": (True, False),
    "HoNHeS": (False, True),
    "HeNHeS": (True, True),
}

_STREAMS = {
    "topology": 0,
    "neurons": 1,
    "stdp": 2,
    "data": 3,
    "bo": 4,
    "readout": 5,
    "input": 6,
    "objective": 7,
}


def derive_seed(master: int, stream: str, extra: int = 0) -> int:
    """Independent 32-bit seed for one named randomness stream."""
    key = (_STREAMS[stream], extra)
    return int(np.random.SeedSequence(entropy=master, spawn_key=key).generate_state(1)[0])


@dataclass(frozen=True)
class PipelineMetrics:
    accuracy: float
    train_accuracy: float
    state_rank: int
    avg_activation: float
    active_neurons: int
    ac_ops: int


def _encode_set(labeled, cfg: ExperimentConfig) -> tuple[list[SpikeTrain], np.ndarray]:
    trains = []
    labels = []
    box = None
    if cfg.data.crop_height > 0 and cfg.data.crop_width > 0:
        box = (cfg.data.crop_height, cfg.data.crop_width)
    for seq, label in labeled:
        if box is not None:
            seq = filter_frames(seq, box)
        trains.append(encode_frames(seq, cfg.data.threshold))
        labels.append(label)
    return trains, np.array(labels)


def make_dataset(
    cfg: ExperimentConfig, seed: int, train_fraction: float | None = None
) -> tuple[list[SpikeTrain], np.ndarray, list[SpikeTrain], np.ndarray]:
    """Encoded train/test spike trains with labels.

    Train and test instances come from disjoint child seeds of the data
    stream. ``train_fraction`` keeps the first ceil(fraction * n) training
    instances of every class (at least one), which is how the
    limited-training-data sweeps subsample.
    """
    frac = cfg.experiment.train_fraction if train_fraction is None else train_fraction
    dims = (cfg.data.height, cfg.data.width)
    common = dict(
        task=cfg.data.task,
        n_classes=cfg.data.n_classes,
        dims=dims,
        noise=cfg.data.noise,
        n_frames=cfg.data.frames,
        frame_period=cfg.data.frame_period,
    )
    train_set = gen_synthetic(
        n_per_class=cfg.data.n_per_class, rng_seed=derive_seed(seed, "data", 0), **common
    )
    test_set = gen_synthetic(
        n_per_class=cfg.data.test_per_class, rng_seed=derive_seed(seed, "data", 1), **common
    )
    if frac < 1.0:
        keep = max(1, int(np.ceil(frac * cfg.data.n_per_class)))
        by_class: dict[int, int] = {}
        subset = []
        for seq, label in train_set:
            c = by_class.get(label, 0)
            if c < keep:
                subset.append((seq, label))
                by_class[label] = c + 1
        train_set = subset
    trains, labels = _encode_set(train_set, cfg)
    test_trains, test_labels = _encode_set(test_set, cfg)
    return trains, labels, test_trains, test_labels


def _n_inputs(cfg: ExperimentConfig) -> int:
    h = cfg.data.crop_height if cfg.data.crop_height > 0 else cfg.data.height
    w = cfg.data.crop_width if cfg.data.crop_width > 0 else cfg.data.width
    return h * w


def _grid_dims(cfg: ExperimentConfig, n: int) -> tuple[int, int, int]:
    if cfg.network.grid_x > 0:
        return (cfg.network.grid_x, cfg.network.grid_y, cfg.network.grid_z)
    g = int(np.ceil(n ** (1.0 / 3.0)))
    while g**3 < n:
        g += 1
    return (g, g, g)


def build_reservoir(
    cfg: ExperimentConfig,
    variant: str,
    seed: int,
    n_override: int | None = None,
    lam: float | None = None,
    w_scale: float | None = None,
    candidate: CandidateConfig | None = None,
) -> Reservoir:
    """Wire one reservoir instance for a heterogeneity variant.

    Optional overrides (neuron count, density, weight scale, or a search
    candidate binding lam/p_ir/tau means/plasticity-rate scale) support
    the sweep and optimizer commands without touching the config file.
    """
    het_n, het_s = VARIANTS[variant]
    net = cfg.network
    n = n_override if n_override is not None else net.n_recurrent
    lam = lam if lam is not None else net.lam
    w_scale = w_scale if w_scale is not None else net.w_scale
    p_ir = net.p_ir
    e_spec = GammaSpec(cfg.neuron.e_tau_shape, cfg.neuron.e_tau_scale)
    i_spec = GammaSpec(cfg.neuron.i_tau_shape, cfg.neuron.i_tau_scale)
    stdp_rate_scale = 1.0
    if candidate is not None:
        lam = max(candidate.value_of("lam"), 1e-6)
        p_ir = min(max(candidate.value_of("p_ir"), 0.0), 1.0)
        e_spec = GammaSpec(e_spec.shape, max(candidate.value_of("tau_e"), 1e-6) / e_spec.shape)
        i_spec = GammaSpec(i_spec.shape, max(candidate.value_of("tau_i"), 1e-6) / i_spec.shape)
        stdp_rate_scale = candidate.value_of("a_const") / 30.0

    w_input_scale = net.w_input_scale if net.w_input_scale > 0 else w_scale
    polarities = block_polarities(n, net.ei_ratio)
    c_map = {
        "EE": net.c_ee,
        "EI": net.c_ei,
        "IE": net.c_ie,
        "II": net.c_ii,
        "input": net.c_input,
    }
    topo = build_recurrent(
        n,
        lam,
        c_map,
        _grid_dims(cfg, n),
        rng_seed=derive_seed(seed, "topology"),
        polarities=polarities,
        w_scale=w_scale,
        inhib_gain=net.w_inhib_gain,
    )
    attach_io(
        topo,
        n_inputs=_n_inputs(cfg),
        p_ir=p_ir,
        target_fraction=net.input_fraction,
        input_seed=derive_seed(seed, "input"),
        n_outputs=net.n_outputs,
        taps_per_output=net.taps_per_output,
        readout_seed=derive_seed(seed, "readout"),
        w_input_scale=w_input_scale,
    )
    template = NeuronParams(
        tau_m=1.0,
        v_th=cfg.neuron.v_th,
        v_reset=cfg.neuron.v_reset,
        v_rest=cfg.neuron.v_rest,
        r_m=cfg.neuron.r_m,
        refrac=cfg.neuron.refrac,
    )
    neuron_params = sample_population(
        n,
        e_spec,
        i_spec,
        ei_ratio=net.ei_ratio,
        fixed_template=template,
        heterogeneous=het_n,
        rng_seed=derive_seed(seed, "neurons"),
    )
    if cfg.neuron.r_m_follows_tau:
        from dataclasses import replace as _replace

        from .lif import Polarity as _Pol

        neuron_params = [
            _replace(
                p,
                r_m=template.r_m
                * p.tau_m
                / (e_spec.mean if p.polarity is _Pol.EXCITATORY else i_spec.mean),
            )
            for p in neuron_params
        ]
    s = cfg.stdp
    specs = StdpSpecs(
        a_plus=GammaSpec(s.a_plus_shape, s.a_plus_scale * stdp_rate_scale),
        a_minus=GammaSpec(s.a_minus_shape, s.a_minus_scale * stdp_rate_scale),
        tau_plus=GammaSpec(s.tau_plus_shape, s.tau_plus_scale),
        tau_minus=GammaSpec(s.tau_minus_shape, s.tau_minus_scale),
        a_plus_incr=s.incr_plus,
        a_minus_incr=s.incr_minus,
    )
    stdp_params = sample_stdp_population(
        topo.n_rec_edges + topo.n_input_edges,
        specs,
        heterogeneous=het_s,
        rng_seed=derive_seed(seed, "stdp"),
    )
    w_max = s.w_max if s.w_max > 0 else max(
        1.0, w_scale, w_scale * net.w_inhib_gain, w_input_scale
    )
    return Reservoir(
        topo,
        neuron_params,
        stdp_params,
        dt=cfg.sim.dt,
        w_max=w_max,
        readout_tau=cfg.neuron.readout_tau,
    )


def evaluate_pipeline(
    cfg: ExperimentConfig,
    variant: str,
    seed: int,
    n_override: int | None = None,
    train_fraction: float | None = None,
    candidate: CandidateConfig | None = None,
) -> PipelineMetrics:
    """Train, extract states, fit the readout, and score held-out stimuli."""
    trains, labels, test_trains, test_labels = make_dataset(cfg, seed, train_fraction)
    reservoir = build_reservoir(
        cfg, variant, seed, n_override=n_override, candidate=candidate
    )
    reservoir.train_unsupervised(trains, epochs=cfg.sim.epochs)
    train_states = reservoir.extract_states(trains)
    model = fit_readout(train_states, labels)
    train_acc = float(np.mean(predict_batch(model, train_states) == labels))

    results = reservoir.run_dataset(test_trains)
    test_states = np.stack([r.state.readout_potentials for r in results])
    accuracy = float(np.mean(predict_batch(model, test_states) == test_labels))
    active: set[int] = set()
    for r in results:
        active.update(int(i) for i in np.unique(r.spike_ids))
    return PipelineMetrics(
        accuracy=accuracy,
        train_accuracy=train_acc,
        state_rank=linear_separation_rank(test_states),
        avg_activation=float(np.mean([r.report.avg_activation for r in results])),
        active_neurons=len(active),
        ac_ops=int(sum(r.report.ac_ops for r in results)),
    )


def rank_probe(cfg: ExperimentConfig, variant: str, rep: int, lam: float, w_scale: float):
    """One sweep cell: fresh untrained reservoir probed by the training set.

    Returns (effective rank of the probe state matrix, number of neurons
    active at least once across the probe set).
    """
    variant = variant if variant is not None else "HeNHeS"
    seed = cfg.run.seed + 7919 * rep
    trains, _, _, _ = make_dataset(cfg, seed)
    reservoir = build_reservoir(cfg, variant, seed, lam=lam, w_scale=w_scale)
    results = reservoir.run_dataset(trains)
    states = np.stack([r.state.readout_potentials for r in results])
    active: set[int] = set()
    for r in results:
        active.update(int(i) for i in np.unique(r.spike_ids))
    return linear_separation_rank(states), len(active)


def make_objective(cfg: ExperimentConfig, variant: str = "HeNHeS"):
    """Search space and deterministic objective for the optimizer command.

    The objective evaluates the full pipeline at a fixed evaluation seed
    with the candidate's bound entries applied, returning held-out
    accuracy. Unbound entries ride along without effect.
    """
    space = SearchSpace(
        template=default_candidate(),
        varied=("lam", "p_ir", "tau_e", "tau_i", "a_const"),
    )
    eval_seed = derive_seed(cfg.run.seed, "objective")

    def objective(candidate: CandidateConfig) -> float:
        metrics = evaluate_pipeline(cfg, variant, eval_seed, candidate=candidate)
        return metrics.accuracy

    return space, objective
