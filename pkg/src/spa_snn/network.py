"""Two-layer competitive spiking network with clock-driven simulation.

Topology: a grid of Poisson input generators feeds every excitatory neuron
through plastic weights; each excitatory neuron drives one paired inhibitory
neuron through a fixed strong weight, and every inhibitory neuron feeds back
onto all excitatory neurons except its partner (lateral inhibition).  Neuron
types come from a boolean type matrix (True = excitatory).

Each post-synaptic neuron owns a cluster in the sense of `spa_snn.synapse`:
the per-phase conductance totals, the distinct-synapse counts and the
reception process are tracked here in flat arrays (one slot per neuron,
excitatory block first) so a step is a handful of vector operations.  Spikes
emitted in one step are delivered in the next.  All deliveries within a step
see the step-start membrane when computing the driving force.

With the stochastic adjustment disabled the reception rate is pinned to 1 and
repolarization and variance adaptation are skipped, which reduces every
neuron to a plain leaky integrator with reset: the regression baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .stochastic import CLAMP_EPS, SIGMA_MAX, SIGMA_MIN

# Presentation retry policy: a sample must evoke at least MIN_SPIKES
# excitatory spikes, else it is re-encoded at a boosted rate and re-presented.
MIN_SPIKES = 5
MAX_RETRIES = 5
RATE_BOOST = 0.5

# Sparse-phase threshold for the reception-process sigma reset.
MIN_ACTIVE_SYNAPSES = 3


@dataclass
class TypeMatrix:
    """Boolean neuron-type grid: True marks an excitatory unit."""

    entries: np.ndarray

    @classmethod
    def standard(cls, n_excitatory: int) -> "TypeMatrix":
        """The two-population layout: n excitatory then n inhibitory units."""
        entries = np.zeros(2 * n_excitatory, dtype=bool)
        entries[:n_excitatory] = True
        return cls(entries=entries)


@dataclass
class SpikeEvent:
    """One spike delivery on a network edge, timestamped on the dt grid."""

    source: int
    target: int
    time: float


def encode_poisson(image, duration_ms: float, dt_ms: float, max_rate_hz: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Rate-code an image as independent per-pixel Bernoulli spike trains.

    A pixel of intensity p (0..255) spikes each step with probability
    (p / 255) * max_rate_hz * dt_ms / 1000.  Returns a (steps, pixels) bool
    array.
    """
    if duration_ms <= 0 or dt_ms <= 0:
        raise ValueError("duration and dt must be positive")
    pixels = np.asarray(image, dtype=np.float64).ravel()
    steps = int(round(duration_ms / dt_ms))
    p = pixels * (max_rate_hz * dt_ms / (255.0 * 1000.0))
    return rng.random((steps, pixels.size)) < p[None, :]


def _per_step_indices(trains: np.ndarray) -> list:
    """Split a (steps, pixels) bool array into per-step spiking-pixel index
    arrays (row-major nonzero keeps steps ascending)."""
    step_ids, pixel_ids = np.nonzero(trains)
    bounds = np.searchsorted(step_ids, np.arange(trains.shape[0] + 1))
    return [pixel_ids[bounds[k]:bounds[k + 1]] for k in range(trains.shape[0])]


class Network:
    """Simulation state for one network instance.

    Neuron slots: global ids 0..n-1 are the excitatory units, n..2n-1 the
    inhibitory units.  All mutable state lives in flat float64 arrays indexed
    that way.  One `numpy` Generator drives every random draw, so a build +
    run is a deterministic function of (config, inputs).
    """

    def __init__(self, config: RunConfig, type_matrix: TypeMatrix | None = None,
                 n_inputs: int = 784):
        config.validate()
        n = config.neurons
        if type_matrix is None:
            type_matrix = TypeMatrix.standard(n)
        entries = np.asarray(type_matrix.entries, dtype=bool).ravel()
        if entries.size != 2 * n:
            raise ValueError(
                f"type matrix has {entries.size} entries, expected {2 * n}"
            )
        if int(entries.sum()) != n:
            raise ValueError(
                f"type matrix marks {int(entries.sum())} excitatory units, expected {n}"
            )
        self.config = config
        self.type_matrix = type_matrix
        self.n = n
        self.n_inputs = n_inputs
        self.rng = np.random.default_rng(config.seed)
        self.learning_enabled = True
        self.spa = bool(config.spa_enabled)

        # plastic input -> excitatory weights, one column per neuron
        self.W = self.rng.uniform(0.0, 0.3, size=(n_inputs, n))
        self.w_max = 1.0

        # per-cluster reception processes (excitatory block first)
        self.mu = self.rng.uniform(config.mu_min, config.mu_max, size=2 * n)
        self.sigma = np.full(2 * n, config.sigma0)
        self.delta = np.clip(self.mu, config.delta0, 1.0 - CLAMP_EPS)

        # membrane state
        self.S = np.zeros(2 * n)               # summed decaying contributions, mV
        self.v_res = np.full(2 * n, config.v0_mv)
        self.refractory_until = np.full(2 * n, -np.inf)

        # cluster phase state
        self.Ge = np.zeros(2 * n)              # per-phase excitatory totals
        self.Gi = np.zeros(2 * n)              # per-phase inhibitory totals
        self.prev_tot_e = np.zeros(2 * n)
        self.prev_tot_i = np.zeros(2 * n)
        self.phases_completed = np.zeros(2 * n, dtype=np.int64)
        self.phase_start = np.zeros(2 * n)
        self.bnd_last = np.zeros(2 * n)
        self.bnd_prev = np.zeros(2 * n)
        self.n_boundaries = np.ones(2 * n, dtype=np.int64)

        # learning state
        self.x_pre = np.zeros(n_inputs)
        self.x_post = np.zeros(n)
        self.theta = np.zeros(n)

        # last-spike times per source, for distinct-synapse counts
        self.input_last = np.full(n_inputs, -np.inf)
        self.exc_last = np.full(n, -np.inf)
        self.inh_last = np.full(n, -np.inf)

        # spikes emitted last step, delivered next step
        self.pending_exc = np.empty(0, dtype=np.intp)
        self.pending_inh = np.empty(0, dtype=np.intp)

        self.clock = 0.0
        self.step_count = 0
        # diagnostic hook: {(step_count, global unit id)} fires to suppress
        self.suppress_fires: set = set()

        c = config
        self._decay_v = math.exp(-c.dt_ms / c.tau_v_ms)
        self._decay_g1 = math.exp(-c.dt_ms / c.tau1_ms)
        self._decay_g2 = math.exp(-c.dt_ms / c.tau2_ms)
        self._decay_tr = math.exp(-c.dt_ms / c.tau_trace_ms)
        self._decay_th = math.exp(-c.dt_ms / c.tau_theta_ms)
        # transmitter integral over one delivery step, per kind
        self._int1 = c.tau1_ms * (1.0 - math.exp(-c.dt_ms / c.tau1_ms))
        self._int2 = c.tau2_ms * (1.0 - math.exp(-c.dt_ms / c.tau2_ms))

    # ------------------------------------------------------------------
    def membrane(self) -> np.ndarray:
        """Current membrane potential of every unit (refractory units sit at
        their resetting potential)."""
        v = self.v_res + self.S
        refr = self.clock < self.refractory_until
        v[refr] = self.v_res[refr]
        return v

    def _draw_reception(self, ids) -> None:
        c = self.config
        if np.ndim(ids) == 0:
            draw = self.mu[ids] + self.sigma[ids] * self.rng.standard_normal()
            self.delta[ids] = min(max(draw, c.delta0), 1.0 - CLAMP_EPS)
        else:
            draws = self.mu[ids] + self.sigma[ids] * self.rng.standard_normal(len(ids))
            self.delta[ids] = np.clip(draws, c.delta0, 1.0 - CLAMP_EPS)

    def reset_sample_state(self) -> None:
        """Clear all transient per-sample state at a presentation onset."""
        t = self.clock
        self.S.fill(0.0)
        self.v_res.fill(self.config.v0_mv)
        self.refractory_until.fill(-np.inf)
        self.Ge.fill(0.0)
        self.Gi.fill(0.0)
        self.prev_tot_e.fill(0.0)
        self.prev_tot_i.fill(0.0)
        self.phases_completed.fill(0)
        self.phase_start.fill(t)
        self.bnd_last.fill(t)
        self.bnd_prev.fill(t)
        self.n_boundaries.fill(1)
        self.x_pre.fill(0.0)
        self.x_post.fill(0.0)
        self.input_last.fill(-np.inf)
        self.exc_last.fill(-np.inf)
        self.inh_last.fill(-np.inf)
        self.pending_exc = np.empty(0, dtype=np.intp)
        self.pending_inh = np.empty(0, dtype=np.intp)
        if self.spa:
            self._draw_reception(np.arange(2 * self.n))
        else:
            self.delta.fill(1.0)

    # ------------------------------------------------------------------
    def _advance(self, input_idx: np.ndarray) -> tuple:
        """Advance one step; returns (fired excitatory ids, fired inhibitory
        ids) as local indices."""
        c = self.config
        n = self.n
        t = self.clock + c.dt_ms
        learning = self.learning_enabled

        self.S *= self._decay_v
        self.Ge *= self._decay_g1
        self.Gi *= self._decay_g2
        if learning:
            self.x_pre *= self._decay_tr
            self.x_post *= self._decay_tr
            self.theta *= self._decay_th

        # step-start membrane, used as the driving force for every delivery
        v_start = self.v_res + self.S
        refr = t < self.refractory_until
        if refr.any():
            v_start[refr] = self.v_res[refr]
        driving = np.abs(c.e_eq_mv - v_start)

        if input_idx.size:
            if learning:
                self.x_pre[input_idx] += 1.0
                if c.stdp_mode == "trace-soft-bound" and c.a_minus > 0.0:
                    factor = np.maximum(1.0 - c.a_minus * self.x_post, 0.0)
                    self.W[input_idx, :] *= factor[None, :]
            wsum = self.W[input_idx, :].sum(axis=0)
            g_in = self.delta[:n] * wsum if self.spa else wsum
            self.Ge[:n] += g_in
            self.S[:n] += (c.k_v_mv * self._int1) * driving[:n] * g_in
            self.input_last[input_idx] = t

        if self.pending_exc.size:
            tgt = self.pending_exc  # one-to-one onto paired inhibitory units
            g = self.delta[n + tgt] * c.w_exc_inh if self.spa else np.full(tgt.size, c.w_exc_inh)
            self.Ge[n + tgt] += g
            self.S[n + tgt] += (c.k_v_mv * self._int1) * driving[n + tgt] * g
            self.exc_last[tgt] = t

        if self.pending_inh.size:
            count = np.full(n, float(self.pending_inh.size))
            count[self.pending_inh] -= 1.0  # no synapse back onto the partner
            g_lat = c.w_inh_exc * count
            if self.spa:
                g_lat = self.delta[:n] * g_lat
            self.Gi[:n] += g_lat
            self.S[:n] -= (c.k_v_mv * self._int2) * driving[:n] * g_lat
            self.inh_last[self.pending_inh] = t

        v = self.v_res + self.S
        eligible = t >= self.refractory_until
        fired_exc = np.nonzero(eligible[:n] & (v[:n] >= c.v_thr_mv + self.theta))[0]
        fired_inh = np.nonzero(eligible[n:] & (v[n:] >= c.v_thr_mv))[0]

        if self.suppress_fires:
            fired_exc = np.array(
                [j for j in fired_exc if (self.step_count, j) not in self.suppress_fires],
                dtype=np.intp,
            )
            fired_inh = np.array(
                [j for j in fired_inh if (self.step_count, n + j) not in self.suppress_fires],
                dtype=np.intp,
            )

        for j in fired_exc:
            self._handle_fire(int(j), t, excitatory=True)
        for j in fired_inh:
            self._handle_fire(n + int(j), t, excitatory=False)

        self.pending_exc = np.asarray(fired_exc, dtype=np.intp)
        self.pending_inh = np.asarray(fired_inh, dtype=np.intp)
        self.clock = t
        self.step_count += 1
        return fired_exc, fired_inh

    def _handle_fire(self, g: int, t: float, excitatory: bool) -> None:
        """Close the neuron's firing phase and reset its membrane."""
        c = self.config
        n = self.n
        cur_e = float(self.Ge[g])
        cur_i = float(self.Gi[g])

        if self.spa:
            if self.phases_completed[g] >= 1:
                total = cur_e + cur_i
                alpha = 0.0 if total == 0.0 else (cur_e - cur_i) / total
                sign = 1.0 if (self.prev_tot_e[g] - cur_e) >= (self.prev_tot_i[g] - cur_i) else -1.0
                dv_a = alpha * (c.v_thr_mv - self.v_res[g]) * sign
                dv_a = max(-c.dv_a_max_mv, min(c.dv_a_max_mv, dv_a))
                self.v_res[g] += dv_a
            if self.n_boundaries[g] >= 2:
                prev_dur = self.bnd_last[g] - self.bnd_prev[g]
                sigma = self.sigma[g] * ((t - self.bnd_last[g]) / prev_dur)
                self.sigma[g] = min(max(sigma, SIGMA_MIN), SIGMA_MAX)
            self.bnd_prev[g] = self.bnd_last[g]
            self.bnd_last[g] = t
            self.n_boundaries[g] += 1
            start = self.phase_start[g]
            if excitatory:
                distinct = int((self.input_last >= start).sum())
                distinct += int((self.inh_last >= start).sum())
                if self.inh_last[g] >= start:  # partner does not synapse back
                    distinct -= 1
            else:
                distinct = int(self.exc_last[g - n] >= start)
            if distinct < MIN_ACTIVE_SYNAPSES:
                self.sigma[g] = c.sigma0
            self._draw_reception(g)

        self.prev_tot_e[g] = cur_e
        self.prev_tot_i[g] = cur_i
        self.phases_completed[g] += 1
        self.Ge[g] = 0.0
        self.Gi[g] = 0.0
        self.phase_start[g] = t
        self.S[g] = 0.0
        self.refractory_until[g] = t + c.t_ref_ms

        if excitatory and self.learning_enabled:
            self.theta[g] += c.theta_plus_mv
            col = self.W[:, g]
            if c.stdp_mode == "post-only-exp":
                col += c.a_plus * np.exp(-col)
            else:
                col += c.a_plus * self.x_pre * (self.w_max - col)
            np.clip(col, 0.0, self.w_max, out=col)
            self.x_post[g] += 1.0

    # ------------------------------------------------------------------
    def step(self, input_spikes=None) -> list:
        """Advance one step and return the spike deliveries it produced.

        ``input_spikes`` is an optional array of input-generator indices that
        spike this step.  Emitted events carry global unit ids (excitatory
        0..n-1, inhibitory n..2n-1) and the step-end timestamp.
        """
        idx = np.asarray(input_spikes if input_spikes is not None else [], dtype=np.intp)
        fired_exc, fired_inh = self._advance(idx)
        n = self.n
        t = self.clock
        events = []
        for j in fired_exc:
            events.append(SpikeEvent(source=int(j), target=n + int(j), time=t))
        for j in fired_inh:
            for k in range(n):
                if k != j:
                    events.append(SpikeEvent(source=n + int(j), target=int(k), time=t))
        return events


def build_network(n_excitatory: int, type_matrix: TypeMatrix | None = None,
                  config: RunConfig | None = None, n_inputs: int = 784) -> Network:
    """Construct a network; the config's neuron count is overridden by
    ``n_excitatory``."""
    if n_excitatory < 1:
        raise ValueError("n_excitatory must be >= 1")
    if config is None:
        config = RunConfig()
    if config.neurons != n_excitatory:
        config = RunConfig(**{**config.to_dict(), "neurons": n_excitatory})
    return Network(config, type_matrix=type_matrix, n_inputs=n_inputs)


@dataclass
class SampleResult:
    """Outcome of one sample presentation."""

    counts: np.ndarray        # spikes per excitatory neuron
    warned: bool              # True when retries could not reach MIN_SPIKES
    attempts: int
    mean_membrane: float      # mean excitatory membrane at presentation end
    mean_conductance: float   # mean excitatory-cluster conductance total at end


def run_sample(net: Network, trains: np.ndarray, reencode=None,
               collect_raster: bool = False):
    """Present one sample: reset transient state, normalize weights when
    learning, run every presentation step, then fast-forward the rest window.

    ``trains`` is a (steps, n_inputs) bool array.  If the sample evokes fewer
    than MIN_SPIKES excitatory spikes and ``reencode`` is given, the sample is
    re-presented with ``reencode(attempt)`` trains (rates boosted by the
    caller) up to MAX_RETRIES times; if it still undershoots, a zero count
    vector with a warning flag is returned.

    During the rest window the network receives no input and every transient
    quantity is reset at the next onset anyway, so the rest is applied
    analytically: the homeostatic thresholds decay by exp(-rest/tau_theta)
    and the clock advances.  Returns a SampleResult (and the raster as a
    second value when ``collect_raster``).
    """
    c = net.config
    n = net.n
    raster = [] if collect_raster else None
    attempt = 0
    # normalization is part of plasticity: with both rates at zero a
    # presentation must leave the weights bit-identical
    plastic = net.learning_enabled and c.stdp_mode == "trace-soft-bound" \
        and (c.a_plus > 0.0 or c.a_minus > 0.0)
    while True:
        net.reset_sample_state()
        if plastic:
            from .learning import normalize_weights

            normalize_weights(net.W, c.norm_target)
        counts = np.zeros(n, dtype=np.int64)
        for idx in _per_step_indices(trains):
            fired_exc, _ = net._advance(idx)
            if fired_exc.size:
                counts[fired_exc] += 1
                if collect_raster:
                    raster.extend((net.step_count - 1, int(j)) for j in fired_exc)
        total = int(counts.sum())
        if total >= MIN_SPIKES or reencode is None or attempt >= MAX_RETRIES:
            break
        attempt += 1
        trains = reencode(attempt)
        if collect_raster:
            raster.clear()

    warned = total < MIN_SPIKES
    if warned:
        counts = np.zeros(n, dtype=np.int64)

    v = net.membrane()[:n]
    result = SampleResult(
        counts=counts,
        warned=warned,
        attempts=attempt,
        mean_membrane=float(v.mean()),
        mean_conductance=float((net.Ge[:n] + net.Gi[:n]).mean()),
    )
    if c.rest_ms > 0.0:
        if net.learning_enabled:
            net.theta *= math.exp(-c.rest_ms / c.tau_theta_ms)
        net.clock += c.rest_ms
    if collect_raster:
        return result, raster
    return result
