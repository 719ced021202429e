"""Leaky integrate-and-fire neurons with gamma-distributed heterogeneity.

Membrane dynamics follow the first-order leak equation
``tau_m dv/dt = v_rest + r_m * I - v`` integrated with exponential Euler,
which is exact for piecewise-constant input. Excitatory and inhibitory
populations draw their time constants from separate gamma distributions;
homogeneous populations pin every time constant to the distribution mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

__all__ = [
    "Polarity",
    "GammaSpec",
    "NeuronParams",
    "NeuronState",
    "step_neuron",
    "steady_state_potential",
    "sample_population",
]


class Polarity(Enum):
    """Sign of a neuron's postsynaptic influence."""

    EXCITATORY = "E"
    INHIBITORY = "I"


@dataclass(frozen=True)
class GammaSpec:
    """Shape/scale parametrisation of a gamma distribution."""

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (self.shape > 0.0 and math.isfinite(self.shape)):
            raise ValueError(f"gamma shape must be positive and finite, got {self.shape}")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError(f"gamma scale must be positive and finite, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.gamma(self.shape, self.scale, size=n)


@dataclass(frozen=True)
class NeuronParams:
    """Per-neuron membrane constants.

    ``v_rest`` is the resting potential the membrane decays toward,
    ``r_m`` the membrane resistance scaling input current, ``refrac``
    the absolute refractory period in ms.
    """

    tau_m: float
    v_th: float = 1.0
    v_reset: float = 0.0
    v_rest: float = 0.0
    r_m: float = 1.0
    refrac: float = 2.0
    polarity: Polarity = Polarity.EXCITATORY

    def __post_init__(self) -> None:
        if not (self.tau_m > 0.0):
            raise ValueError(f"tau_m must be positive, got {self.tau_m}")
        if self.refrac < 0.0:
            raise ValueError(f"refractory period must be >= 0, got {self.refrac}")
        if not (self.v_th > self.v_reset):
            raise ValueError(
                f"threshold must exceed reset potential, got v_th={self.v_th}, v_reset={self.v_reset}"
            )


@dataclass(frozen=True)
class NeuronState:
    """Dynamic state of one neuron.

    ``refrac_until`` is the simulation time (ms) before which the neuron
    is silenced; after a spike at time t it equals ``t + refrac``.
    """

    v: float = 0.0
    refrac_until: float = -math.inf
    spike_count: int = 0


def step_neuron(
    state: NeuronState,
    params: NeuronParams,
    input_current: float,
    t: float,
    dt: float,
) -> tuple[NeuronState, bool]:
    """Advance one neuron by ``dt`` ms under constant ``input_current``.

    Exponential-Euler update: v <- v_rest + (v - v_rest) * exp(-dt/tau)
    + r_m * I * (1 - exp(-dt/tau)). A refractory neuron (t < refrac_until)
    holds its membrane at the reset value and cannot spike. Crossing the
    threshold resets the membrane and starts a new refractory window.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not math.isfinite(input_current):
        raise ValueError(f"input current must be finite, got {input_current}")

    if t < state.refrac_until:
        return state, False

    decay = math.exp(-dt / params.tau_m)
    v = params.v_rest + (state.v - params.v_rest) * decay + params.r_m * input_current * (1.0 - decay)
    if v >= params.v_th:
        new = NeuronState(
            v=params.v_reset,
            refrac_until=t + params.refrac,
            spike_count=state.spike_count + 1,
        )
        return new, True
    return replace(state, v=v), False


def steady_state_potential(params: NeuronParams, input_current: float) -> float:
    """Fixed point of the membrane equation under constant input."""
    return params.v_rest + params.r_m * input_current


def sample_population(
    n: int,
    e_spec: GammaSpec,
    i_spec: GammaSpec,
    ei_ratio: float = 0.8,
    fixed_template: NeuronParams | None = None,
    heterogeneous: bool = True,
    rng_seed: int | np.random.SeedSequence = 0,
) -> list[NeuronParams]:
    """Draw membrane parameters for a mixed excitatory/inhibitory population.

    The first ``round(n * ei_ratio)`` neurons are excitatory, the rest
    inhibitory (``ei_ratio`` is the excitatory fraction; the default 0.8
    realises a 4:1 split). Heterogeneous populations draw each tau_m from
    the polarity's gamma spec; homogeneous populations use the spec mean,
    i.e. the degenerate single-point distribution, so the two modes are
    mean-matched. All other constants come from ``fixed_template``.
    """
    if n <= 0:
        raise ValueError(f"population size must be positive, got {n}")
    if not (0.0 < ei_ratio <= 1.0):
        raise ValueError(f"excitatory fraction must lie in (0, 1], got {ei_ratio}")
    template = fixed_template if fixed_template is not None else NeuronParams(tau_m=1.0)
    n_exc = round(n * ei_ratio)
    rng = np.random.default_rng(rng_seed)

    if heterogeneous:
        taus_e = e_spec.sample(rng, n_exc)
        taus_i = i_spec.sample(rng, n - n_exc)
    else:
        taus_e = np.full(n_exc, e_spec.mean)
        taus_i = np.full(n - n_exc, i_spec.mean)

    population = [
        replace(template, tau_m=float(tau), polarity=Polarity.EXCITATORY) for tau in taus_e
    ]
    population += [
        replace(template, tau_m=float(tau), polarity=Polarity.INHIBITORY) for tau in taus_i
    ]
    return population
