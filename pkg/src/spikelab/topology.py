"""Three-layer network construction with distance-dependent recurrent wiring.

Recurrent neurons sit on a 3-D integer lattice filled in row-major order.
Every ordered pair (i, j), i != j, receives a directed synapse with
probability ``C * exp(-(d/lambda)^2)`` where d is the Euclidean lattice
distance and C the amplitude of the pair's synapse class (EE/EI/IE/II,
first letter presynaptic). Input neurons project onto a random 30% subset
of the recurrent layer with uniform probability, and each output neuron
reads a random subset of recurrent neurons through fixed random weights.

Edge sampling draws one uniform per ordered pair in a fixed order that
does not depend on lambda or the amplitudes, so for a fixed seed the edge
set grows monotonically with either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lif import Polarity

__all__ = [
    "SYNAPSE_CLASSES",
    "default_c_map",
    "NetworkTopology",
    "lattice_positions",
    "connection_probability",
    "build_recurrent",
    "connect_inputs",
    "build_readout",
    "serialize_topology",
    "parse_topology",
]

SYNAPSE_CLASSES = ("EE", "EI", "IE", "II", "input")


def default_c_map(c: float = 0.3) -> dict[str, float]:
    """Shared amplitude for every synapse class (the desk-scale default)."""
    return {cls: c for cls in SYNAPSE_CLASSES}


def block_polarities(n: int, ei_ratio: float = 0.8) -> list[Polarity]:
    """Deterministic polarity layout: first round(n*ei_ratio) excitatory."""
    n_exc = round(n * ei_ratio)
    return [Polarity.EXCITATORY] * n_exc + [Polarity.INHIBITORY] * (n - n_exc)


def lattice_positions(n: int, grid_dims: tuple[int, int, int]) -> np.ndarray:
    """Place ``n`` neurons on the integer lattice in row-major order."""
    gx, gy, gz = grid_dims
    capacity = gx * gy * gz
    if capacity < n:
        raise ValueError(f"lattice {grid_dims} holds {capacity} sites, need {n}")
    idx = np.arange(n)
    x = idx // (gy * gz)
    y = (idx // gz) % gy
    z = idx % gz
    return np.stack([x, y, z], axis=1).astype(np.float64)


def connection_probability(d: float, c: float, lam: float) -> float:
    """Distance-dependent connection probability ``c * exp(-(d/lambda)^2)``."""
    if lam <= 0.0:
        raise ValueError(f"density parameter lambda must be positive, got {lam}")
    if not (0.0 <= c <= 1.0):
        raise ValueError(f"amplitude must lie in [0, 1], got {c}")
    p = c * math.exp(-((d / lam) ** 2))
    return min(max(p, 0.0), 1.0)


@dataclass
class NetworkTopology:
    """Static wiring of one reservoir instance.

    Recurrent edges are ordered (pre, post) pairs with signed initial
    weights (sign follows presynaptic polarity). Input edges connect
    encoder neurons to the eligible target subset. Readout taps hold, per
    output neuron, the tapped recurrent indices and fixed positive
    weights; they are not plastic.
    """

    n_recurrent: int
    lam: float
    seed: int
    positions: np.ndarray
    polarities: list[Polarity]
    c_map: dict[str, float]
    rec_pre: np.ndarray
    rec_post: np.ndarray
    rec_weight: np.ndarray
    rec_class: list[str]
    n_inputs: int = 0
    in_pre: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    in_post: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    in_weight: np.ndarray = field(default_factory=lambda: np.zeros(0))
    input_targets: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_outputs: int = 0
    tap_indices: list[np.ndarray] = field(default_factory=list)
    tap_weights: list[np.ndarray] = field(default_factory=list)

    @property
    def n_rec_edges(self) -> int:
        return int(self.rec_pre.size)

    @property
    def n_input_edges(self) -> int:
        return int(self.in_pre.size)


def _edge_class(pre_pol: Polarity, post_pol: Polarity) -> str:
    return pre_pol.value + post_pol.value


def build_recurrent(
    n: int,
    lam: float,
    c_map: dict[str, float],
    grid_dims: tuple[int, int, int],
    rng_seed: int,
    polarities: list[Polarity] | None = None,
    w_scale: float = 1.0,
    inhib_gain: float = 1.0,
) -> NetworkTopology:
    """Sample the recurrent layer wiring on a 3-D lattice.

    One uniform is drawn per ordered pair in row-major pair order before
    any acceptance test, so the same seed yields nested edge sets as
    lambda or the class amplitudes grow. Initial weight magnitudes are
    uniform on [0, w_scale] from an independent draw, signed by the
    presynaptic polarity; inhibitory magnitudes carry the extra
    ``inhib_gain`` factor (inhibitory synapses are fewer but stronger in
    the usual liquid-state regime).
    """
    if n <= 0:
        raise ValueError(f"need at least one neuron, got {n}")
    positions = lattice_positions(n, grid_dims)
    if polarities is None:
        polarities = block_polarities(n)
    if len(polarities) != n:
        raise ValueError(f"got {len(polarities)} polarities for {n} neurons")
    for cls in ("EE", "EI", "IE", "II"):
        if cls not in c_map:
            raise ValueError(f"c_map missing class {cls}")

    rng = np.random.default_rng(rng_seed)
    # Pairwise distances on the lattice; ordered pairs enumerated row-major.
    diffs = positions[:, None, :] - positions[None, :, :]
    dists = np.sqrt(np.sum(diffs * diffs, axis=2))
    pol_e = np.array([p is Polarity.EXCITATORY for p in polarities])
    c_ee, c_ei, c_ie, c_ii = (c_map[k] for k in ("EE", "EI", "IE", "II"))
    amp = np.where(
        pol_e[:, None],
        np.where(pol_e[None, :], c_ee, c_ei),
        np.where(pol_e[None, :], c_ie, c_ii),
    )
    prob = np.clip(amp * np.exp(-((dists / lam) ** 2)), 0.0, 1.0)
    np.fill_diagonal(prob, 0.0)

    u = rng.random(n * (n - 1))
    mask = np.ones((n, n), dtype=bool)
    np.fill_diagonal(mask, False)
    flat_prob = prob[mask]
    accepted = u < flat_prob
    pre_idx, post_idx = np.nonzero(mask)
    rec_pre = pre_idx[accepted].astype(np.int64)
    rec_post = post_idx[accepted].astype(np.int64)

    mags = rng.random(rec_pre.size) * w_scale
    mags = np.where(pol_e[rec_pre], mags, mags * inhib_gain)
    signs = np.where(pol_e[rec_pre], 1.0, -1.0)
    rec_weight = mags * signs
    rec_class = [_edge_class(polarities[i], polarities[j]) for i, j in zip(rec_pre, rec_post)]

    return NetworkTopology(
        n_recurrent=n,
        lam=lam,
        seed=int(rng_seed),
        positions=positions,
        polarities=list(polarities),
        c_map=dict(c_map),
        rec_pre=rec_pre,
        rec_post=rec_post,
        rec_weight=rec_weight,
        rec_class=rec_class,
    )


def connect_inputs(
    n_inputs: int,
    n_recurrent: int,
    p_ir: float,
    target_fraction: float = 0.3,
    rng_seed: int = 0,
    w_scale: float = 1.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Wire encoder neurons onto a random eligible subset of the reservoir.

    Exactly ``round(target_fraction * n_recurrent)`` recurrent neurons are
    eligible; each (input, eligible) pair connects independently with
    probability ``p_ir``. Returns (in_pre, in_post, in_weight, targets).
    Input weights are positive, uniform on [0, w_scale].
    """
    if not (0.0 <= p_ir <= 1.0):
        raise ValueError(f"input connection probability must lie in [0, 1], got {p_ir}")
    if not (0.0 < target_fraction <= 1.0):
        raise ValueError(f"target fraction must lie in (0, 1], got {target_fraction}")
    rng = np.random.default_rng(rng_seed)
    n_targets = round(target_fraction * n_recurrent)
    targets = np.sort(rng.choice(n_recurrent, size=n_targets, replace=False)).astype(np.int64)
    u = rng.random((n_inputs, n_targets))
    src, tgt = np.nonzero(u < p_ir)
    in_pre = src.astype(np.int64)
    in_post = targets[tgt]
    in_weight = rng.random(in_pre.size) * w_scale
    return in_pre, in_post, in_weight, targets


def build_readout(
    n_recurrent: int,
    n_outputs: int,
    taps_per_output: int = 0,
    rng_seed: int = 0,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Fixed random projections from the reservoir to the output neurons.

    ``taps_per_output == 0`` taps the whole reservoir. Tap weights are
    uniform on [0, 1); they stay fixed (the readout is trained by the
    linear classifier on output potentials, not by plasticity).
    """
    if n_outputs <= 0:
        raise ValueError(f"need at least one output neuron, got {n_outputs}")
    size = n_recurrent if taps_per_output == 0 else taps_per_output
    if not (0 < size <= n_recurrent):
        raise ValueError(f"taps per output must lie in (0, {n_recurrent}], got {size}")
    rng = np.random.default_rng(rng_seed)
    indices, weights = [], []
    for _ in range(n_outputs):
        if size == n_recurrent:
            idx = np.arange(n_recurrent, dtype=np.int64)
        else:
            idx = np.sort(rng.choice(n_recurrent, size=size, replace=False)).astype(np.int64)
        indices.append(idx)
        weights.append(rng.random(size))
    return indices, weights


def attach_io(
    topo: NetworkTopology,
    n_inputs: int,
    p_ir: float,
    target_fraction: float,
    input_seed: int,
    n_outputs: int,
    taps_per_output: int = 0,
    readout_seed: int = 0,
    w_input_scale: float = 1.0,
) -> NetworkTopology:
    """Add input wiring and readout taps to a recurrent topology in place."""
    in_pre, in_post, in_w, targets = connect_inputs(
        n_inputs, topo.n_recurrent, p_ir, target_fraction, input_seed, w_input_scale
    )
    taps, tap_w = build_readout(topo.n_recurrent, n_outputs, taps_per_output, readout_seed)
    topo.n_inputs = n_inputs
    topo.in_pre, topo.in_post, topo.in_weight = in_pre, in_post, in_w
    topo.input_targets = targets
    topo.n_outputs = n_outputs
    topo.tap_indices, topo.tap_weights = taps, tap_w
    return topo


def serialize_topology(topo: NetworkTopology) -> str:
    """Line-oriented text form: header, then one edge per line.

    Header: ``n <n> lambda <lam> seed <seed>``. Edge lines read
    ``pre post weight class`` with class in {EE, EI, IE, II, input,
    readout}; readout lines use (recurrent index, output index, tap
    weight). Weights print with repr so parsing round-trips bit-exactly.
    """
    lines = [f"n {topo.n_recurrent} lambda {float(topo.lam)!r} seed {topo.seed}"]
    for i in range(topo.n_rec_edges):
        lines.append(
            f"{topo.rec_pre[i]} {topo.rec_post[i]} {float(topo.rec_weight[i])!r} {topo.rec_class[i]}"
        )
    for i in range(topo.n_input_edges):
        lines.append(f"{topo.in_pre[i]} {topo.in_post[i]} {float(topo.in_weight[i])!r} input")
    for o, (idx, w) in enumerate(zip(topo.tap_indices, topo.tap_weights)):
        for j in range(idx.size):
            lines.append(f"{idx[j]} {o} {float(w[j])!r} readout")
    return "\n".join(lines) + "\n"


def parse_topology(text: str) -> dict:
    """Parse the serialized form back into plain edge lists.

    Returns a dict with the header fields and per-class edge tuples; used
    for round-trip checks and external tooling rather than rebuilding a
    simulator-ready topology (positions are reproducible from n alone).
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "n" or head[2] != "lambda" or head[4] != "seed":
        raise ValueError(f"bad topology header: {lines[0]!r}")
    out = {
        "n": int(head[1]),
        "lambda": float(head[3]),
        "seed": int(head[5]),
        "edges": [],
    }
    for ln in lines[1:]:
        pre, post, w, cls = ln.split()
        if cls not in SYNAPSE_CLASSES + ("readout",):
            raise ValueError(f"unknown synapse class {cls!r}")
        out["edges"].append((int(pre), int(post), float(w), cls))
    return out
