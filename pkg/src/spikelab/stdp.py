"""Trace-based spike-timing-dependent plasticity with per-synapse constants.

Each synapse carries its own potentiation/depression rates and trace decay
time constants, so heterogeneous plasticity is a per-synapse draw rather
than a shared rule. Traces decay exponentially between spikes; a
presynaptic spike depresses the weight by ``a_minus_rate * t_post`` and
bumps the presynaptic trace, a postsynaptic spike potentiates by
``a_plus_rate * t_pre`` and bumps the postsynaptic trace. Weights are
clamped to the polarity's interval after every update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lif import GammaSpec

__all__ = [
    "StdpParams",
    "StdpSpecs",
    "SynapseState",
    "decay_traces",
    "on_pre_spike",
    "on_post_spike",
    "sample_stdp_population",
]


@dataclass(frozen=True)
class StdpParams:
    """Per-synapse plasticity constants.

    ``a_plus_rate``/``a_minus_rate`` scale the weight change at post/pre
    spikes, ``a_plus_incr``/``a_minus_incr`` are the discrete trace
    contributions of each pre/post spike, ``tau_plus``/``tau_minus`` the
    trace decay time constants in ms.
    """

    a_plus_rate: float = 0.01
    a_minus_rate: float = 0.0105
    a_plus_incr: float = 1.0
    a_minus_incr: float = 1.0
    tau_plus: float = 20.0
    tau_minus: float = 20.0

    def __post_init__(self) -> None:
        for name in ("a_plus_rate", "a_minus_rate", "a_plus_incr", "a_minus_incr"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not (self.tau_plus > 0.0 and self.tau_minus > 0.0):
            raise ValueError("trace decay constants must be positive")


@dataclass(frozen=True)
class SynapseState:
    """Weight plus the pre/post trace pair of one plastic synapse.

    ``w_lo``/``w_hi`` delimit the clamp interval; excitatory-origin
    synapses live in [0, w_max], inhibitory-origin in [-w_max, 0].
    """

    weight: float
    params: StdpParams
    t_pre: float = 0.0
    t_post: float = 0.0
    w_lo: float = 0.0
    w_hi: float = 1.0

    def __post_init__(self) -> None:
        if self.w_lo > self.w_hi:
            raise ValueError(f"empty clamp interval [{self.w_lo}, {self.w_hi}]")
        if self.t_pre < 0.0 or self.t_post < 0.0:
            raise ValueError("traces must be nonnegative")


def decay_traces(s: SynapseState, dt: float) -> SynapseState:
    """Decay both traces over ``dt`` ms."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return replace(
        s,
        t_pre=s.t_pre * math.exp(-dt / s.params.tau_plus),
        t_post=s.t_post * math.exp(-dt / s.params.tau_minus),
    )


def on_pre_spike(s: SynapseState) -> SynapseState:
    """Apply the presynaptic-spike rule: depress, then bump the pre trace.

    The weight change uses the trace values from before this spike, so a
    spike never depresses through its own trace contribution.
    """
    w = min(max(s.weight - s.params.a_minus_rate * s.t_post, s.w_lo), s.w_hi)
    return replace(s, weight=w, t_pre=s.t_pre + s.params.a_plus_incr)


def on_post_spike(s: SynapseState) -> SynapseState:
    """Apply the postsynaptic-spike rule: potentiate, then bump the post trace."""
    w = min(max(s.weight + s.params.a_plus_rate * s.t_pre, s.w_lo), s.w_hi)
    return replace(s, weight=w, t_post=s.t_post + s.params.a_minus_incr)


@dataclass(frozen=True)
class StdpSpecs:
    """Gamma specs for the heterogeneous plasticity constants.

    Heterogeneity covers the rate constants and the trace decay constants;
    the discrete trace increments stay shared across synapses.
    """

    a_plus: GammaSpec
    a_minus: GammaSpec
    tau_plus: GammaSpec
    tau_minus: GammaSpec
    a_plus_incr: float = 1.0
    a_minus_incr: float = 1.0


def sample_stdp_population(
    n_synapses: int,
    specs: StdpSpecs,
    heterogeneous: bool = True,
    rng_seed: int | np.random.SeedSequence = 0,
) -> list[StdpParams]:
    """Draw plasticity constants for ``n_synapses`` synapses.

    Heterogeneous populations draw rates and decay constants per synapse
    from their gamma specs; homogeneous populations use the spec means, so
    the two modes are mean-matched.
    """
    if n_synapses < 0:
        raise ValueError(f"synapse count must be >= 0, got {n_synapses}")
    if n_synapses == 0:
        return []
    rng = np.random.default_rng(rng_seed)
    if heterogeneous:
        ap = specs.a_plus.sample(rng, n_synapses)
        am = specs.a_minus.sample(rng, n_synapses)
        tp = specs.tau_plus.sample(rng, n_synapses)
        tm = specs.tau_minus.sample(rng, n_synapses)
    else:
        ap = np.full(n_synapses, specs.a_plus.mean)
        am = np.full(n_synapses, specs.a_minus.mean)
        tp = np.full(n_synapses, specs.tau_plus.mean)
        tm = np.full(n_synapses, specs.tau_minus.mean)
    return [
        StdpParams(
            a_plus_rate=float(ap[i]),
            a_minus_rate=float(am[i]),
            a_plus_incr=specs.a_plus_incr,
            a_minus_incr=specs.a_minus_incr,
            tau_plus=float(tp[i]),
            tau_minus=float(tm[i]),
        )
        for i in range(n_synapses)
    ]
