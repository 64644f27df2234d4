"""Probability-space primitives: Gaussian reception sampling, Brownian bridge
and first-hitting-time utilities, and Ornstein-Uhlenbeck path simulation.

Synaptic transmitter reception is modelled per cluster as a Gaussian draw
whose standard deviation adapts to the duration of the cluster's firing
phases.  The Brownian helpers expose the bridge conditional expectation and
the two-sided first-hitting probability of a standard Brownian path.  The OU
simulator uses the exact (not Euler) one-step discretization so that long
paths have the correct stationary law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Reception draws are clamped into [delta0, 1 - CLAMP_EPS).  The ceiling stays
# strictly below 1 so a conductance built from delta never divides to zero.
CLAMP_EPS = 1e-6

# Adapted standard deviation is kept inside [SIGMA_MIN, SIGMA_MAX]: a long
# silent phase would otherwise inflate sigma without bound.
SIGMA_MIN = 1e-3
SIGMA_MAX = 1.0


class DegeneratePhaseError(ValueError):
    """Two phase boundaries coincide, so the duration ratio is undefined."""


@dataclass
class ReceptionProcess:
    """Per-cluster transmitter reception rate with phase-adaptive variance.

    The reception rate ``delta`` is redrawn from N(mu, sigma^2) at the start
    of every firing phase and clamped into [delta0, 1).  ``sigma`` is rescaled
    by the ratio of consecutive phase durations each time a phase completes.
    """

    mu: float
    sigma0: float = 0.25
    delta0: float = 0.1
    sigma: float = field(default=None)  # type: ignore[assignment]
    delta: float = field(default=None)  # type: ignore[assignment]
    phase_index: int = 0
    phase_start_times: list = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.delta0 < 1.0:
            raise ValueError(f"delta0 must lie in (0, 1), got {self.delta0}")
        if self.sigma0 <= 0.0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if self.sigma is None:
            self.sigma = self.sigma0
        if self.delta is None:
            self.delta = _clamp_reception(self.mu, self.delta0)

    def record_boundary(self, t: float) -> None:
        """Append a phase boundary without adapting sigma (used while fewer
        than two boundaries exist)."""
        if self.phase_start_times and t <= self.phase_start_times[-1]:
            raise ValueError("phase boundaries must be strictly increasing")
        self.phase_start_times.append(t)

    def reset_sigma(self) -> None:
        """Restore sigma to its initial value (sparse-phase cluster reset)."""
        self.sigma = self.sigma0

    def reset_phases(self, t0: float = 0.0) -> None:
        """Forget boundary history and start a fresh phase at ``t0``."""
        self.phase_start_times = [t0]
        self.phase_index = 0


def _clamp_reception(x: float, delta0: float) -> float:
    hi = 1.0 - CLAMP_EPS
    if x < delta0:
        return delta0
    if x > hi:
        return hi
    return x


def sample_reception(proc: ReceptionProcess, rng: np.random.Generator) -> float:
    """Draw a fresh reception rate from N(mu, sigma^2), clamped to
    [delta0, 1).  Updates and returns ``proc.delta``."""
    draw = proc.mu + proc.sigma * rng.standard_normal()
    proc.delta = _clamp_reception(draw, proc.delta0)
    return proc.delta


def adapt_variance(proc: ReceptionProcess, t_next_phase: float) -> float:
    """Rescale sigma by the ratio of the new phase duration to the previous
    one and record ``t_next_phase`` as the next boundary.

    Requires at least two recorded boundaries.  Raises DegeneratePhaseError
    when the previous phase has zero duration (two spikes at the same
    timestamp).
    """
    times = proc.phase_start_times
    if len(times) < 2:
        raise ValueError("need at least two phase boundaries before adapting")
    if t_next_phase <= times[-1]:
        raise ValueError("t_next_phase must exceed the last boundary")
    prev_duration = times[-1] - times[-2]
    if prev_duration == 0.0:
        raise DegeneratePhaseError("degenerate phase: zero previous duration")
    new_duration = t_next_phase - times[-1]
    sigma = proc.sigma * (new_duration / prev_duration)
    proc.sigma = min(max(sigma, SIGMA_MIN), SIGMA_MAX)
    times.append(t_next_phase)
    proc.phase_index += 1
    return proc.sigma


def bridge_expectation(a: float, b: float, t1: float, t2: float, t: float) -> float:
    """Expected value at time ``t`` of a Brownian path pinned to ``a`` at
    ``t1`` and ``b`` at ``t2``: the linear interpolant between the pins."""
    if not t1 < t < t2:
        raise ValueError("outside bridge interval")
    return a + (b - a) * (t - t1) / (t2 - t1)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the error function; |error| < 1e-7 over the
    whole real line (math.erf is correctly rounded to double precision)."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def hitting_probability(level: float, t: float) -> float:
    """First-passage probability of a standard Brownian motion started at 0:
    the chance of reaching ``level`` by elapsed time ``t`` is
    2 * (1 - Phi(|level| / sqrt(t))); the sign of the level is immaterial by
    symmetry (reflection principle)."""
    if t <= 0.0:
        raise ValueError("nonpositive horizon")
    return 2.0 * (1.0 - normal_cdf(abs(level) / math.sqrt(t)))


@dataclass
class OuModel:
    """Mean-reverting Gaussian process parameters.

    ``reversion_rate`` is the exponential pull toward ``mean`` (per ms);
    ``diffusion`` scales the driving noise.  The stationary variance is
    diffusion^2 / (2 * reversion_rate).
    """

    reversion_rate: float = 1.0
    mean: float = 0.0
    diffusion: float = 0.0

    def __post_init__(self):
        if self.reversion_rate <= 0.0:
            raise ValueError(f"reversion_rate must be positive, got {self.reversion_rate}")
        if self.diffusion < 0.0:
            raise ValueError(f"diffusion must be nonnegative, got {self.diffusion}")


def simulate_ou(
    model: OuModel,
    x0: float,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulate an OU path with the exact one-step transition.

    x_{k+1} = m + (x_k - m) e^{-lam dt} + diffusion * sqrt((1 - e^{-2 lam dt}) / (2 lam)) * z_k

    Returns an array of length ``n_steps + 1`` starting at ``x0``.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    lam = model.reversion_rate
    decay = math.exp(-lam * dt)
    noise_scale = model.diffusion * math.sqrt((1.0 - math.exp(-2.0 * lam * dt)) / (2.0 * lam))
    z = rng.standard_normal(n_steps)
    path = np.empty(n_steps + 1)
    path[0] = x0
    m = model.mean
    x = x0
    for k in range(n_steps):
        x = m + (x - m) * decay + noise_scale * z[k]
        path[k + 1] = x
    return path
