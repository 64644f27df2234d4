"""Trace-based STDP, homeostatic thresholds, and weight normalization.

Spike traces decay exponentially and jump by one on their own spike.  A
postsynaptic fire potentiates proportionally to the presynaptic trace with a
soft bound at w_max; a presynaptic spike depresses proportionally to the
postsynaptic trace and the current weight.  The alternative post-only mode
updates weights only on postsynaptic fires, with an exp(-w) saturating step.

The adaptive threshold raises a neuron's effective firing threshold a little
on every fire and lets it decay very slowly, spreading activity across the
population.  Weight normalization rescales every neuron's incoming weight
column to a fixed sum once per sample so competition stays bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TRACE_SOFT_BOUND = "trace-soft-bound"
POST_ONLY_EXP = "post-only-exp"

PRE = "pre"
POST = "post"


@dataclass
class StdpParams:
    a_plus: float = 0.01       # learning rate on postsynaptic fires
    a_minus: float = 0.0001    # learning rate on presynaptic spikes
    tau_trace: float = 20.0    # trace decay constant, ms
    x_tar: float = 0.0         # target presynaptic trace subtracted at post events
    w_max: float = 1.0
    mode: str = TRACE_SOFT_BOUND

    def __post_init__(self):
        if self.a_plus < 0.0 or self.a_minus < 0.0:
            raise ValueError("learning rates must be nonnegative")
        if self.tau_trace <= 0.0:
            raise ValueError("tau_trace must be positive")
        if self.mode not in (TRACE_SOFT_BOUND, POST_ONLY_EXP):
            raise ValueError(f"unknown STDP mode {self.mode!r}")


@dataclass
class TraceState:
    """Exponentially decaying spike traces, one per presynaptic source and
    one per postsynaptic neuron."""

    x_pre: np.ndarray
    x_post: np.ndarray

    @classmethod
    def zeros(cls, n_pre: int, n_post: int) -> "TraceState":
        return cls(x_pre=np.zeros(n_pre), x_post=np.zeros(n_post))

    def reset(self) -> None:
        self.x_pre.fill(0.0)
        self.x_post.fill(0.0)


def update_traces(traces: TraceState, dt: float, pre_spikes=(), post_spikes=(),
                  tau_trace: float = 20.0) -> TraceState:
    """Decay all traces over ``dt`` then add one for each spike event."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    decay = math.exp(-dt / tau_trace)
    traces.x_pre *= decay
    traces.x_post *= decay
    pre_spikes = np.asarray(pre_spikes, dtype=np.intp)
    post_spikes = np.asarray(post_spikes, dtype=np.intp)
    if pre_spikes.size:
        traces.x_pre[pre_spikes] += 1.0
    if post_spikes.size:
        traces.x_post[post_spikes] += 1.0
    return traces


def stdp_update(w, x_pre, x_post, event_kind: str, params: StdpParams):
    """Weight change for one STDP event; works on scalars or arrays.

    trace-soft-bound mode:
        post event:  a_plus  * (x_pre - x_tar) * (w_max - w)
        pre event:  -a_minus *  x_post         *  w
    post-only-exp mode:
        post event:  a_plus * exp(-w);  pre events do nothing.

    The result is clipped so w + dw stays inside [0, w_max].
    """
    if event_kind == POST:
        if params.mode == POST_ONLY_EXP:
            dw = params.a_plus * np.exp(-np.asarray(w, dtype=float))
        else:
            dw = params.a_plus * (np.asarray(x_pre, dtype=float) - params.x_tar) * (params.w_max - w)
    elif event_kind == PRE:
        if params.mode == POST_ONLY_EXP:
            dw = np.zeros_like(np.asarray(w, dtype=float))
        else:
            dw = -params.a_minus * np.asarray(x_post, dtype=float) * w
    else:
        raise ValueError(f"event_kind must be 'pre' or 'post', got {event_kind!r}")
    dw = np.clip(dw, -np.asarray(w, dtype=float), params.w_max - w)
    if np.ndim(dw) == 0:
        return float(dw)
    return dw


@dataclass
class AdaptiveThreshold:
    """Per-excitatory-neuron homeostatic threshold offset (mV, >= 0)."""

    theta: np.ndarray
    theta_plus: float = 0.05   # increment per fire, mV
    tau_theta: float = 1e7     # decay constant, ms

    @classmethod
    def zeros(cls, n: int, theta_plus: float = 0.05, tau_theta: float = 1e7) -> "AdaptiveThreshold":
        return cls(theta=np.zeros(n), theta_plus=theta_plus, tau_theta=tau_theta)

    def update(self, neuron_id: int, fired: bool, dt: float) -> float:
        """Single-neuron form: decay this neuron's offset over ``dt`` and bump
        it if the neuron fired.  Returns the new offset."""
        self.theta[neuron_id] *= math.exp(-dt / self.tau_theta)
        if fired:
            self.theta[neuron_id] += self.theta_plus
        return float(self.theta[neuron_id])

    def advance(self, dt: float, fired_ids=()) -> None:
        """Vectorized form: decay every offset, then bump the fired ones."""
        self.theta *= math.exp(-dt / self.tau_theta)
        fired_ids = np.asarray(fired_ids, dtype=np.intp)
        if fired_ids.size:
            self.theta[fired_ids] += self.theta_plus


def adapt_threshold(th: AdaptiveThreshold, neuron_id: int, fired: bool, dt: float) -> float:
    """Functional wrapper over AdaptiveThreshold.update."""
    return th.update(neuron_id, fired, dt)


def normalize_weights(weights: np.ndarray, target_sum: float) -> np.ndarray:
    """Rescale each column (one neuron's incoming weights) to ``target_sum``.

    All-zero columns are left unchanged.  Operates in place and returns the
    matrix.
    """
    if target_sum <= 0.0:
        raise ValueError("target_sum must be positive")
    sums = weights.sum(axis=0)
    nonzero = sums > 0.0
    weights[:, nonzero] *= target_sum / sums[nonzero]
    return weights
