"""Stochastic-probability-adjusted spiking neural network simulator.

A two-layer competitive spiking network with Gaussian-gated synaptic
transmitter reception, adaptive repolarization, trace STDP, and
Ornstein-Uhlenbeck forecasting diagnostics for recorded observables.
"""

from .config import ConfigError, RunConfig
from .dataio import (
    Checkpoint,
    Dataset,
    load_checkpoint,
    load_dataset,
    load_idx_images,
    load_idx_labels,
    save_checkpoint,
)
from .forecast import ForecastWindow, check_bound, fit_ou, forecast_mse, forecast_value
from .learning import AdaptiveThreshold, StdpParams, TraceState, normalize_weights, stdp_update, update_traces
from .network import Network, SpikeEvent, TypeMatrix, build_network, encode_poisson, run_sample
from .neuron import NeuronState, fire_check, membrane_potential, repolarize, spike_effect
from .stochastic import (
    OuModel,
    ReceptionProcess,
    adapt_variance,
    bridge_expectation,
    hitting_probability,
    sample_reception,
    simulate_ou,
)
from .synapse import Cluster, SynapseState, cluster_totals, phase_delta_totals, register_spike, transmitter_conductance

__version__ = "0.1.0"
