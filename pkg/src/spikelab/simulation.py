"""Time-stepped reservoir simulation with online plasticity.

The engine advances every recurrent neuron with the exponential-Euler
membrane update, delivers recurrent spikes with a one-step delay (a spike
at step t contributes current at t+1) while input events inject current
at their own step, and keeps per-synapse traces for the plasticity rule.
Readout neurons are non-spiking leaky integrators; their membrane
potential at the end of a stimulus is the reservoir state used downstream.

Each spike costs one accumulate operation per outgoing synapse (recurrent
edges plus readout taps for reservoir spikes, input edges for encoder
spikes); the engine counts these alongside the spike log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lif import NeuronParams, Polarity
from .stdp import StdpParams
from .spikes import SpikeTrain
from .topology import NetworkTopology

__all__ = [
    "ReservoirState",
    "ActivationReport",
    "TrialResult",
    "Reservoir",
    "average_activation",
    "ReadoutModel",
    "fit_readout",
    "predict",
    "predict_batch",
    "states_to_csv",
    "states_from_csv",
]


@dataclass(frozen=True)
class ReservoirState:
    """Output-neuron membrane potentials sampled at stimulus end."""

    readout_potentials: np.ndarray


@dataclass(frozen=True)
class ActivationReport:
    """Spiking/energy summary of one trial."""

    avg_activation: float
    active_neuron_count: int
    ac_ops: int


@dataclass(frozen=True)
class TrialResult:
    state: ReservoirState
    report: ActivationReport
    spike_ids: np.ndarray
    spike_times: np.ndarray


class Reservoir:
    """Simulation engine binding a topology to neuron and synapse parameters.

    Weights are clipped into the plasticity clamp interval at
    construction and stay there through any spike sequence. The engine is
    stateful across steps of one trial; `run_trial` resets membrane
    potentials, refractory windows, and traces afterwards so consecutive
    stimuli never leak into each other. Weight changes persist.
    """

    def __init__(
        self,
        topology: NetworkTopology,
        neuron_params: list[NeuronParams],
        stdp_params: list[StdpParams],
        dt: float = 1.0,
        w_max: float = 1.0,
        readout_tau: float = 50.0,
    ):
        n = topology.n_recurrent
        if len(neuron_params) != n:
            raise ValueError(f"got {len(neuron_params)} neuron params for {n} neurons")
        n_edges = topology.n_rec_edges + topology.n_input_edges
        if len(stdp_params) != n_edges:
            raise ValueError(f"got {len(stdp_params)} synapse params for {n_edges} synapses")
        if dt <= 0.0 or w_max <= 0.0 or readout_tau <= 0.0:
            raise ValueError("dt, w_max and readout_tau must be positive")
        self.topology = topology
        self.dt = float(dt)
        self.w_max = float(w_max)
        self.n = n
        self.n_inputs = topology.n_inputs
        self.n_outputs = topology.n_outputs

        self.tau = np.array([p.tau_m for p in neuron_params])
        self.decay = np.exp(-dt / self.tau)
        self.v_th = np.array([p.v_th for p in neuron_params])
        self.v_reset = np.array([p.v_reset for p in neuron_params])
        self.v_rest = np.array([p.v_rest for p in neuron_params])
        self.r_m = np.array([p.r_m for p in neuron_params])
        self.refrac = np.array([p.refrac for p in neuron_params])
        self.excitatory = np.array(
            [p.polarity is Polarity.EXCITATORY for p in neuron_params]
        )
        topo_exc = np.array([p is Polarity.EXCITATORY for p in topology.polarities])
        if not np.array_equal(self.excitatory, topo_exc):
            raise ValueError("neuron parameter polarities disagree with the topology")

        self.rec_pre = topology.rec_pre
        self.rec_post = topology.rec_post
        self.in_pre = topology.in_pre
        self.in_post = topology.in_post

        nr = topology.n_rec_edges
        self.rec_w = np.array(topology.rec_weight, dtype=np.float64)
        self.in_w = np.array(topology.in_weight, dtype=np.float64)
        # Clamp intervals follow presynaptic polarity; input edges are
        # excitatory encoders and share the recurrent bounds.
        pre_exc = self.excitatory[self.rec_pre]
        self.rec_lo = np.where(pre_exc, 0.0, -w_max)
        self.rec_hi = np.where(pre_exc, w_max, 0.0)
        self.in_lo = np.zeros(self.in_w.size)
        self.in_hi = np.full(self.in_w.size, w_max)
        np.clip(self.rec_w, self.rec_lo, self.rec_hi, out=self.rec_w)
        np.clip(self.in_w, self.in_lo, self.in_hi, out=self.in_w)

        def unpack(params, sl):
            return (
                np.array([p.a_plus_rate for p in params[sl]]),
                np.array([p.a_minus_rate for p in params[sl]]),
                np.array([p.a_plus_incr for p in params[sl]]),
                np.array([p.a_minus_incr for p in params[sl]]),
                np.array([p.tau_plus for p in params[sl]]),
                np.array([p.tau_minus for p in params[sl]]),
            )

        (self.rec_ap, self.rec_am, self.rec_api, self.rec_ami, rec_tp, rec_tm) = unpack(
            stdp_params, slice(0, nr)
        )
        (self.in_ap, self.in_am, self.in_api, self.in_ami, in_tp, in_tm) = unpack(
            stdp_params, slice(nr, n_edges)
        )
        self.rec_tp_decay = np.exp(-dt / rec_tp) if nr else np.zeros(0)
        self.rec_tm_decay = np.exp(-dt / rec_tm) if nr else np.zeros(0)
        self.in_tp_decay = np.exp(-dt / in_tp) if self.in_w.size else np.zeros(0)
        self.in_tm_decay = np.exp(-dt / in_tm) if self.in_w.size else np.zeros(0)

        self.readout_decay = math.exp(-dt / readout_tau)
        if self.n_outputs:
            self.tap_matrix = np.zeros((self.n_outputs, n))
            for o, (idx, w) in enumerate(zip(topology.tap_indices, topology.tap_weights)):
                self.tap_matrix[o, idx] = w
            tap_deg = np.zeros(n, dtype=np.int64)
            for idx in topology.tap_indices:
                tap_deg[idx] += 1
        else:
            self.tap_matrix = np.zeros((0, n))
            tap_deg = np.zeros(n, dtype=np.int64)

        rec_deg = np.bincount(self.rec_pre, minlength=n) if nr else np.zeros(n, dtype=np.int64)
        self.rec_fanout = rec_deg + tap_deg
        self.in_fanout = (
            np.bincount(self.in_pre, minlength=max(self.n_inputs, 1))
            if self.in_w.size
            else np.zeros(max(self.n_inputs, 1), dtype=np.int64)
        )

        self._alloc_state()

    def _alloc_state(self) -> None:
        self.v = self.v_reset.copy()
        self.v_out = np.zeros(self.n_outputs)
        self.refrac_until = np.full(self.n, -np.inf)
        self.prev_spikes = np.zeros(self.n, dtype=bool)
        self.rec_tpre = np.zeros(self.rec_w.size)
        self.rec_tpost = np.zeros(self.rec_w.size)
        self.in_tpre = np.zeros(self.in_w.size)
        self.in_tpost = np.zeros(self.in_w.size)

    def reset_state(self) -> None:
        """Return membranes, refractory windows, and traces to initial values."""
        self._alloc_state()

    def weights_snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        return self.rec_w.copy(), self.in_w.copy()

    def restore_weights(self, snapshot: tuple[np.ndarray, np.ndarray]) -> None:
        rec, inp = snapshot
        self.rec_w[:] = rec
        self.in_w[:] = inp

    def _bucket_events(self, train: SpikeTrain, n_steps: int) -> list[np.ndarray]:
        """Group event neuron ids by delivery step (1-based)."""
        if train.n_events == 0:
            return [np.zeros(0, dtype=np.int64)] * (n_steps + 1)
        steps = np.maximum(np.ceil(train.times / self.dt - 1e-9).astype(np.int64), 1)
        steps = np.minimum(steps, n_steps)
        buckets = [np.zeros(0, dtype=np.int64)] * (n_steps + 1)
        order = np.argsort(steps, kind="stable")
        sorted_steps = steps[order]
        sorted_ids = train.neuron_ids[order]
        bounds = np.searchsorted(sorted_steps, np.arange(1, n_steps + 1), side="right")
        start = 0
        for k in range(1, n_steps + 1):
            end = bounds[k - 1]
            buckets[k] = sorted_ids[start:end]
            start = end
        return buckets

    def run_trial(self, train: SpikeTrain, plasticity_on: bool = False) -> TrialResult:
        """Drive the reservoir with one spike train and capture the state."""
        if train.n_events and (
            self.n_inputs == 0
            or train.neuron_ids.min() < 0
            or train.neuron_ids.max() >= self.n_inputs
        ):
            raise ValueError(
                f"spike train references neuron ids outside [0, {self.n_inputs})"
            )
        n_steps = max(int(math.ceil(train.duration / self.dt - 1e-9)), 1)
        buckets = self._bucket_events(train, n_steps)

        spike_steps: list[np.ndarray] = []
        spike_ids: list[np.ndarray] = []
        ac_ops = 0
        spike_counts = np.zeros(self.n, dtype=np.int64)

        for k in range(1, n_steps + 1):
            t = k * self.dt

            if plasticity_on:
                self.rec_tpre *= self.rec_tp_decay
                self.rec_tpost *= self.rec_tm_decay
                self.in_tpre *= self.in_tp_decay
                self.in_tpost *= self.in_tm_decay

            # Current from last step's reservoir spikes plus this step's input events.
            current = np.zeros(self.n)
            rec_mask = None
            if self.prev_spikes.any():
                rec_mask = self.prev_spikes[self.rec_pre]
                current += np.bincount(
                    self.rec_post[rec_mask], weights=self.rec_w[rec_mask], minlength=self.n
                )
            events = buckets[k]
            in_mult = None
            if events.size:
                counts = np.bincount(events, minlength=max(self.n_inputs, 1))
                ac_ops += int(self.in_fanout[events].sum())
                if self.in_w.size:
                    in_mult = counts[self.in_pre]
                    hit = in_mult > 0
                    current += np.bincount(
                        self.in_post[hit],
                        weights=self.in_w[hit] * in_mult[hit],
                        minlength=self.n,
                    )

            if self.n_outputs and self.prev_spikes.any():
                i_out = self.tap_matrix @ self.prev_spikes.astype(np.float64)
                self.v_out = self.v_out * self.readout_decay + i_out * (1.0 - self.readout_decay)
            else:
                self.v_out = self.v_out * self.readout_decay

            active = t >= self.refrac_until
            v_new = (
                self.v_rest
                + (self.v - self.v_rest) * self.decay
                + self.r_m * current * (1.0 - self.decay)
            )
            self.v = np.where(active, v_new, self.v)
            spiked = active & (self.v >= self.v_th)
            if spiked.any():
                self.v[spiked] = self.v_reset[spiked]
                self.refrac_until[spiked] = t + self.refrac[spiked]
                spike_counts[spiked] += 1
                ids = np.nonzero(spiked)[0]
                spike_ids.append(ids)
                spike_steps.append(np.full(ids.size, k))
                ac_ops += int(self.rec_fanout[ids].sum())

            if plasticity_on:
                # Depression at presynaptic spikes, then potentiation at
                # postsynaptic spikes; simultaneous pairs compose in that order.
                if events.size and self.in_w.size:
                    pre_hits = in_mult > 0
                    mult = in_mult[pre_hits]
                    self.in_w[pre_hits] = np.clip(
                        self.in_w[pre_hits]
                        - self.in_am[pre_hits] * self.in_tpost[pre_hits] * mult,
                        self.in_lo[pre_hits],
                        self.in_hi[pre_hits],
                    )
                    self.in_tpre[pre_hits] += self.in_api[pre_hits] * mult
                if spiked.any():
                    if self.rec_w.size:
                        pre_sp = spiked[self.rec_pre]
                        if pre_sp.any():
                            self.rec_w[pre_sp] = np.clip(
                                self.rec_w[pre_sp]
                                - self.rec_am[pre_sp] * self.rec_tpost[pre_sp],
                                self.rec_lo[pre_sp],
                                self.rec_hi[pre_sp],
                            )
                            self.rec_tpre[pre_sp] += self.rec_api[pre_sp]
                        post_sp = spiked[self.rec_post]
                        if post_sp.any():
                            self.rec_w[post_sp] = np.clip(
                                self.rec_w[post_sp]
                                + self.rec_ap[post_sp] * self.rec_tpre[post_sp],
                                self.rec_lo[post_sp],
                                self.rec_hi[post_sp],
                            )
                            self.rec_tpost[post_sp] += self.rec_ami[post_sp]
                    if self.in_w.size:
                        post_sp = spiked[self.in_post]
                        if post_sp.any():
                            self.in_w[post_sp] = np.clip(
                                self.in_w[post_sp] + self.in_ap[post_sp] * self.in_tpre[post_sp],
                                self.in_lo[post_sp],
                                self.in_hi[post_sp],
                            )
                            self.in_tpost[post_sp] += self.in_ami[post_sp]

            self.prev_spikes = spiked

        state = ReservoirState(readout_potentials=self.v_out.copy())
        total = int(spike_counts.sum())
        report = ActivationReport(
            avg_activation=total / self.n,
            active_neuron_count=int(np.count_nonzero(spike_counts)),
            ac_ops=int(ac_ops),
        )
        ids = np.concatenate(spike_ids) if spike_ids else np.zeros(0, dtype=np.int64)
        steps = np.concatenate(spike_steps) if spike_steps else np.zeros(0, dtype=np.int64)
        self.reset_state()
        return TrialResult(
            state=state, report=report, spike_ids=ids, spike_times=steps * self.dt
        )

    def train_unsupervised(self, dataset: list[SpikeTrain], epochs: int = 1) -> None:
        """Expose the dataset with plasticity on for the given epoch count."""
        if not dataset:
            raise ValueError("training dataset is empty")
        if epochs < 1:
            raise ValueError(f"need at least one epoch, got {epochs}")
        for _ in range(epochs):
            for train in dataset:
                self.run_trial(train, plasticity_on=True)

    def extract_states(self, dataset: list[SpikeTrain]) -> np.ndarray:
        """Final-state matrix, one row per stimulus, plasticity frozen."""
        states = np.empty((len(dataset), self.n_outputs))
        for i, train in enumerate(dataset):
            states[i] = self.run_trial(train, plasticity_on=False).state.readout_potentials
        return states

    def run_dataset(self, dataset: list[SpikeTrain]) -> list[TrialResult]:
        return [self.run_trial(train, plasticity_on=False) for train in dataset]


def states_to_csv(states) -> str:
    """State matrix as CSV with an ``out_<i>`` header row."""
    x = np.asarray(states, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D state matrix, got shape {x.shape}")
    lines = [",".join(f"out_{j}" for j in range(x.shape[1]))]
    lines += [",".join(repr(float(v)) for v in row) for row in x]
    return "\n".join(lines) + "\n"


def states_from_csv(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("out_"):
        raise ValueError("missing state-matrix header row")
    return np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def average_activation(spike_times, n_recurrent: int, total_time: float) -> float:
    """Average neuronal activation: total spikes within the window per neuron."""
    if total_time <= 0.0:
        raise ValueError(f"time window must be positive, got {total_time}")
    if n_recurrent <= 0:
        raise ValueError("need at least one recurrent neuron")
    times = np.asarray(spike_times, dtype=np.float64)
    return float(np.count_nonzero(times <= total_time)) / n_recurrent


@dataclass(frozen=True)
class ReadoutModel:
    """One-vs-rest ridge classifier on reservoir states."""

    weights: np.ndarray
    classes: np.ndarray


def fit_readout(states, labels, ridge: float = 1e-3) -> ReadoutModel:
    """Regularized least squares from state rows to one-hot class targets.

    A single-class dataset yields a degenerate model that always predicts
    that class. Otherwise the row count must reach the class count so the
    normal equations see every class at least once.
    """
    x = np.asarray(states, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("states and labels disagree on the number of stimuli")
    classes = np.unique(y)
    if x.shape[0] < classes.size:
        raise ValueError(f"{x.shape[0]} stimuli cannot cover {classes.size} classes")
    if classes.size == 1:
        return ReadoutModel(weights=np.zeros((x.shape[1] + 1, 1)), classes=classes)
    onehot = (y[:, None] == classes[None, :]).astype(np.float64)
    xa = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
    gram = xa.T @ xa + ridge * np.eye(xa.shape[1])
    weights = np.linalg.solve(gram, xa.T @ onehot)
    return ReadoutModel(weights=weights, classes=classes)


def predict(model: ReadoutModel, state) -> int:
    """Argmax class score; ties break toward the lowest class index."""
    x = np.concatenate([np.asarray(state, dtype=np.float64).ravel(), [1.0]])
    scores = x @ model.weights
    return int(model.classes[int(np.argmax(scores))])


def predict_batch(model: ReadoutModel, states) -> np.ndarray:
    x = np.asarray(states, dtype=np.float64)
    xa = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
    scores = xa @ model.weights
    return model.classes[np.argmax(scores, axis=1)]
