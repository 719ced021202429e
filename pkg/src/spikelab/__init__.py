"""Spiking-reservoir laboratory.

A desk-scale workbench for heterogeneous recurrent spiking networks:
gamma-distributed LIF neurons, per-synapse trace STDP, distance-dependent
topologies, effective-rank separability analysis, and Bayesian
optimization with a Matern kernel over Wasserstein distances between
hyperparameter distributions.
"""

from .lif import GammaSpec, NeuronParams, NeuronState, Polarity, sample_population, step_neuron
from .stdp import StdpParams, StdpSpecs, SynapseState, sample_stdp_population
from .topology import NetworkTopology, build_recurrent, connect_inputs, connection_probability
from .spikes import SpikeTrain
from .encoding import FrameSequence, encode_frames, filter_frames
from .datasets import gen_synthetic
from .simulation import ActivationReport, Reservoir, ReservoirState, fit_readout, predict
from .rank import RankReport, effective_rank, linear_separation_rank
from .wasserstein import EmpiricalDistribution, sinkhorn, sliced_w2, w2_1d
from .params import CandidateConfig, default_candidate, param_distribution_distance
from .bayesopt import MaternParams, bo_loop, expected_improvement, gp_fit, gp_posterior, matern_w
from .config import ExperimentConfig, load_config, parse_config, serialize_config

__version__ = "0.1.0"
