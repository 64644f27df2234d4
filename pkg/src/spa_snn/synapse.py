"""Transmitter conductance and per-neuron cluster bookkeeping.

Every post-synaptic neuron owns one cluster: the set of its incoming
synapses plus one reception process.  Within a firing phase (the interval
between two consecutive output spikes of the post neuron) each synapse may
register at most one spike; further spikes on the same synapse spawn virtual
synapses so that every spike keeps its own decay clock.  Virtual synapses are
discarded when the phase closes.

The per-phase excitatory/inhibitory conductance totals feed the neuron's
adaptive repolarization; the distinct-synapse count feeds the sparse-phase
sigma reset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .stochastic import ReceptionProcess, adapt_variance

EXCITATORY = "excitatory"
INHIBITORY = "inhibitory"

# A phase in which fewer than MIN_ACTIVE_SYNAPSES distinct member synapses
# spiked is treated as statistically unreliable: the cluster's reception
# process restarts from sigma0 instead of adapting.
MIN_ACTIVE_SYNAPSES = 3


class UnknownSynapseError(KeyError):
    """Spike registered for a synapse id the cluster does not contain."""


class InsufficientHistoryError(ValueError):
    """Fewer completed firing phases than the operation requires."""


@dataclass
class SynapseState:
    """One incoming synapse: weight, excitatory/inhibitory kind, decay
    constant, and the spike bookkeeping for the current firing phase."""

    weight: float
    kind: str
    tau: float
    last_spike_time: float | None = None
    virtual_count: int = 0
    spiked_this_phase: bool = False

    def __post_init__(self):
        if self.kind not in (EXCITATORY, INHIBITORY):
            raise ValueError(f"kind must be excitatory or inhibitory, got {self.kind!r}")
        if self.weight < 0.0:
            raise ValueError(f"weight must be nonnegative, got {self.weight}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def transmitter_conductance(syn: SynapseState, delta: float, t_since_spike: float) -> float:
    """Conductance a spike contributes ``t_since_spike`` ms after arrival:
    delta * weight * exp(-t_since_spike / tau)."""
    if t_since_spike < 0.0:
        raise ValueError("t_since_spike must be nonnegative")
    return delta * syn.weight * math.exp(-t_since_spike / syn.tau)


@dataclass
class PhaseSummary:
    """Snapshot taken when a firing phase closes."""

    totals: tuple  # (sum_excitatory, sum_inhibitory) at close time
    distinct_spiking: int
    duration: float


@dataclass
class Cluster:
    """A post-synaptic neuron's incoming synapses plus reception process."""

    post_neuron_id: int
    synapses: dict = field(default_factory=dict)  # synapse id -> SynapseState
    reception: ReceptionProcess = None  # type: ignore[assignment]
    virtual: list = field(default_factory=list)  # virtual SynapseState handles
    totals_current: tuple | None = None  # last closed phase
    totals_previous: tuple | None = None  # phase before that
    phases_completed: int = 0

    def __post_init__(self):
        if self.reception is None:
            self.reception = ReceptionProcess(mu=0.75)

    def add_synapse(self, synapse_id, syn: SynapseState) -> None:
        self.synapses[synapse_id] = syn


def register_spike(cluster: Cluster, synapse_id, t: float) -> SynapseState:
    """Record a presynaptic spike at time ``t``.

    The first spike of a synapse within the current phase marks the synapse
    itself; any further spike is carried by a fresh virtual synapse with the
    same weight/kind/tau so the earlier spike's decay clock is preserved.
    Returns the handle (real or virtual) carrying this spike.
    """
    syn = cluster.synapses.get(synapse_id)
    if syn is None:
        raise UnknownSynapseError(f"unknown synapse id {synapse_id!r}")
    if not syn.spiked_this_phase:
        syn.spiked_this_phase = True
        syn.last_spike_time = t
        return syn
    twin = SynapseState(
        weight=syn.weight, kind=syn.kind, tau=syn.tau,
        last_spike_time=t, spiked_this_phase=True,
    )
    syn.virtual_count += 1
    cluster.virtual.append(twin)
    return twin


def cluster_totals(cluster: Cluster, t: float) -> tuple:
    """Sum transmitter conductance at time ``t`` over every real and virtual
    synapse that spiked in the current phase, split by kind.

    All member synapses share the cluster's current reception rate.
    """
    delta = cluster.reception.delta
    sum_e = 0.0
    sum_i = 0.0
    for syn in cluster.synapses.values():
        if syn.spiked_this_phase:
            g = transmitter_conductance(syn, delta, t - syn.last_spike_time)
            if syn.kind == EXCITATORY:
                sum_e += g
            else:
                sum_i += g
    for syn in cluster.virtual:
        g = transmitter_conductance(syn, delta, t - syn.last_spike_time)
        if syn.kind == EXCITATORY:
            sum_e += g
        else:
            sum_i += g
    return (sum_e, sum_i)


def phase_delta_totals(cluster: Cluster) -> tuple:
    """Componentwise drop of the conductance totals between the previous and
    the current completed phase: (prev_e - cur_e, prev_i - cur_i)."""
    if cluster.phases_completed < 2:
        raise InsufficientHistoryError("insufficient history")
    pe, pi = cluster.totals_previous
    ce, ci = cluster.totals_current
    return (pe - ce, pi - ci)


def close_phase(cluster: Cluster, t: float, rng=None) -> PhaseSummary:
    """Close the current firing phase at post-neuron fire time ``t``.

    Freezes the conductance totals, discards virtual synapses, clears the
    per-phase spike marks, advances the reception process (variance
    adaptation when two boundaries exist, sigma reset for sparse phases,
    fresh reception draw when ``rng`` is given) and returns the summary.
    """
    totals = cluster_totals(cluster, t)
    distinct = sum(1 for s in cluster.synapses.values() if s.spiked_this_phase)

    cluster.totals_previous = cluster.totals_current
    cluster.totals_current = totals
    cluster.phases_completed += 1

    for syn in cluster.synapses.values():
        syn.spiked_this_phase = False
        syn.virtual_count = 0
    cluster.virtual.clear()

    proc = cluster.reception
    times = proc.phase_start_times
    duration = t - times[-1] if times else t
    if len(times) >= 2:
        adapt_variance(proc, t)
    else:
        proc.record_boundary(t)
    if distinct < MIN_ACTIVE_SYNAPSES:
        proc.reset_sigma()
    if rng is not None:
        from .stochastic import sample_reception

        sample_reception(proc, rng)
    return PhaseSummary(totals=totals, distinct_spiking=distinct, duration=duration)
