"""Adaptive-repolarization spiking neuron.

The membrane potential is a resetting potential plus a sum of decaying
post-synaptic contributions.  Each arriving spike contributes the distance of
the membrane from the equilibrium potential, gated by the transmitter it
delivered, with the sign fixed by the synapse kind: excitatory depolarizes,
inhibitory hyperpolarizes.  After a fire the neuron enters an absolute
refractory window, and its resetting potential moves by a small bounded
amount decided by the excitatory/inhibitory balance of the two most recent
firing phases, which is what carries memory across phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .synapse import EXCITATORY, INHIBITORY


@dataclass
class NeuronState:
    """Membrane machinery for a single neuron."""

    v0: float = -65.0        # initial resting potential, mV
    v_thr: float = -52.0     # base firing threshold, mV
    e_eq: float = -80.0      # equilibrium potential, mV
    tau_v: float = 10.0      # membrane decay constant, ms
    t_ref: float = 5.0       # absolute refractory window, ms
    k_v: float = 1.0         # mV per unit of gated conductance integral
    dv_a_max: float = 3.0    # repolarization adjustment bound, mV
    v_res: float = field(default=None)  # type: ignore[assignment]
    refractory_until: float = -math.inf
    last_fire_time: float | None = None
    contributions: list = field(default_factory=list)  # (v_m, arrival time)

    def __post_init__(self):
        if self.v_res is None:
            self.v_res = self.v0

    def in_refractory(self, t: float) -> bool:
        return t < self.refractory_until

    def add_contribution(self, v_m: float, t: float) -> None:
        self.contributions.append((v_m, t))

    def reset(self) -> None:
        """Forget all transient state; used at sample onset."""
        self.v_res = self.v0
        self.refractory_until = -math.inf
        self.last_fire_time = None
        self.contributions.clear()


def spike_effect(neuron: NeuronState, g_integral: float, t: float, kind: str = EXCITATORY) -> float:
    """Membrane contribution of one arriving spike, in mV.

    The magnitude is k_v * |e_eq - v(t)| * g_integral where ``g_integral`` is
    the transmitter conductance integrated over the delivery step; the sign
    is + for excitatory and - for inhibitory synapses.
    """
    if g_integral < 0.0:
        raise ValueError("g_integral must be nonnegative")
    driving = abs(neuron.e_eq - membrane_potential(neuron, t))
    magnitude = neuron.k_v * driving * g_integral
    if kind == EXCITATORY:
        return magnitude
    if kind == INHIBITORY:
        return -magnitude
    raise ValueError(f"unknown synapse kind {kind!r}")


def membrane_potential(neuron: NeuronState, t: float) -> float:
    """v_res plus the decayed sum of recorded contributions; inside the
    refractory window the membrane is held at v_res."""
    if neuron.in_refractory(t):
        return neuron.v_res
    v = neuron.v_res
    tau_v = neuron.tau_v
    for v_m, t_i in neuron.contributions:
        v += v_m * math.exp(-(t - t_i) / tau_v)
    return v


def fire_check(neuron: NeuronState, t: float, theta: float = 0.0) -> bool:
    """Fire iff outside the refractory window and at or above threshold
    (base threshold plus the homeostatic offset ``theta``).

    On fire: record the fire time, clear pending contributions and enter the
    refractory window.
    """
    if neuron.in_refractory(t):
        return False
    if membrane_potential(neuron, t) < neuron.v_thr + theta:
        return False
    neuron.last_fire_time = t
    neuron.contributions.clear()
    neuron.refractory_until = t + neuron.t_ref
    return True


def repolarize(neuron: NeuronState, totals_prev: tuple, totals_cur: tuple) -> float:
    """Adjust the resetting potential after a fire.

    The balance factor is (sum_e - sum_i)/(sum_e + sum_i) over the phase just
    closed (0 when the phase carried no transmitter).  The direction is +1
    when the excitatory totals dropped at least as much as the inhibitory
    ones between the two phases, else -1.  The adjustment
    balance * (v_thr - v_res) * direction is clamped to +-dv_a_max and added
    onto the running v_res.  Returns the new v_res.
    """
    cur_e, cur_i = totals_cur
    prev_e, prev_i = totals_prev
    total = cur_e + cur_i
    alpha = 0.0 if total == 0.0 else (cur_e - cur_i) / total
    sign = 1.0 if (prev_e - cur_e) >= (prev_i - cur_i) else -1.0
    dv = neuron.v_thr - neuron.v_res
    dv_a = alpha * dv * sign
    if dv_a > neuron.dv_a_max:
        dv_a = neuron.dv_a_max
    elif dv_a < -neuron.dv_a_max:
        dv_a = -neuron.dv_a_max
    neuron.v_res = neuron.v_res + dv_a
    return neuron.v_res
