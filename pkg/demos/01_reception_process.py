"""Walk through the probability-space primitives.

Each cluster receives synaptic transmitter at a Gaussian-distributed rate
whose standard deviation adapts to the cluster's firing cadence.  This demo
draws reception rates through a few simulated firing phases, then exercises
the Brownian bridge expectation and the first-passage probability against
quick Monte-Carlo estimates.
"""

import numpy as np

from spa_snn import (
    ReceptionProcess,
    adapt_variance,
    bridge_expectation,
    hitting_probability,
    sample_reception,
)

rng = np.random.default_rng(0)

# --- Gaussian reception with adaptive variance ------------------------------
proc = ReceptionProcess(mu=0.8, sigma0=0.25, delta0=0.1)
proc.record_boundary(0.0)

print("phase  duration  sigma   reception draws")
t = 0.0
for phase, duration in enumerate([12.0, 6.0, 6.0, 18.0, 3.0]):
    draws = [sample_reception(proc, rng) for _ in range(4)]
    t += duration
    if len(proc.phase_start_times) >= 2:
        adapt_variance(proc, t)
    else:
        proc.record_boundary(t)
    print(f"{phase:5d}  {duration:7.1f}  {proc.sigma:.3f}   "
          + "  ".join(f"{d:.3f}" for d in draws))

print("\nshorter phases shrink sigma, longer phases grow it;")
print("draws always stay inside [0.1, 1).")

# --- bridge expectation ------------------------------------------------------
a, b, t1, t2, t_mid = 0.2, 0.9, 0.0, 10.0, 3.0
expect = bridge_expectation(a, b, t1, t2, t_mid)

n_paths, n_steps = 20000, 100
grid = np.linspace(t1, t2, n_steps + 1)
w = np.concatenate([np.zeros((n_paths, 1)),
                    np.cumsum(np.sqrt(np.diff(grid)) * rng.standard_normal((n_paths, n_steps)), axis=1)], axis=1)
frac = (grid - t1) / (t2 - t1)
pinned = a + w - frac * (w[:, -1:] - (b - a))
mc = pinned[:, np.argmin(np.abs(grid - t_mid))].mean()
print(f"\nbridge expectation at t={t_mid}: closed form {expect:.4f}, Monte Carlo {mc:.4f}")

# --- first-passage probability ----------------------------------------------
level, horizon = 1.5, 4.0
p = hitting_probability(level, horizon)
x = np.zeros(20000)
hit = np.zeros(20000, dtype=bool)
dt = 1e-3
for _ in range(int(horizon / dt)):
    x += np.sqrt(dt) * rng.standard_normal(20000)
    hit |= x >= level
print(f"first passage to {level} by t={horizon}: closed form {p:.4f}, Monte Carlo {hit.mean():.4f}")
