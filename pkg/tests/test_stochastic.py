import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from spa_snn.stochastic import (
    CLAMP_EPS,
    DegeneratePhaseError,
    OuModel,
    ReceptionProcess,
    adapt_variance,
    bridge_expectation,
    hitting_probability,
    normal_cdf,
    sample_reception,
    simulate_ou,
)

from oracles import mc_bridge_mean, mc_hitting_fraction


# ---------------------------------------------------------------------------
# reception sampling


def test_degenerate_gaussian_returns_mean(rng):
    proc = ReceptionProcess(mu=0.75, sigma=0.0)
    assert sample_reception(proc, rng) == 0.75
    assert proc.delta == 0.75


def test_samples_respect_floor(rng):
    proc = ReceptionProcess(mu=0.5, sigma=0.5, delta0=0.1)
    draws = [sample_reception(proc, rng) for _ in range(20000)]
    assert min(draws) >= 0.1  # Lower limit of reception rate 0.1
    assert max(draws) < 1.0


def test_sampling_law_mean_and_clamp():
    # the raw draw is mu + sigma * z from the generator; verify the law on
    # 1e5 draws and that each return equals the clamp of its raw draw
    mu, sigma = 0.5, 0.25
    proc = ReceptionProcess(mu=mu, sigma=sigma, delta0=0.1)
    rng = np.random.default_rng(7)
    rng_twin = np.random.default_rng(7)
    raws = []
    for _ in range(100_000):
        got = sample_reception(proc, rng)
        raw = mu + sigma * rng_twin.standard_normal()
        raws.append(raw)
        assert got == min(max(raw, 0.1), 1.0 - CLAMP_EPS)
    assert abs(np.mean(raws) - 0.5) < 0.005


def test_million_draws_stay_inside_interval():
    proc = ReceptionProcess(mu=0.75, sigma=1.0, delta0=0.1)
    rng = np.random.default_rng(3)
    draws = proc.mu + proc.sigma * rng.standard_normal(1_000_000)
    clamped = np.clip(draws, proc.delta0, 1.0 - CLAMP_EPS)
    assert clamped.min() >= 0.1 and clamped.max() < 1.0
    # spot-check the scalar path agrees on a slice
    rng2 = np.random.default_rng(3)
    for k in range(1000):
        assert sample_reception(proc, rng2) == clamped[k]


# ---------------------------------------------------------------------------
# variance adaptation


def make_proc(boundaries, sigma=0.25):
    proc = ReceptionProcess(mu=0.75, sigma=sigma)
    for t in boundaries:
        proc.record_boundary(t)
    return proc


def test_equal_durations_keep_sigma():
    proc = make_proc([0.0, 2.0], sigma=0.25)
    assert adapt_variance(proc, 4.0) == 0.25


def test_duration_ratio_scales_sigma():
    # previous phase 2 ms, next phase 4 ms: sigma doubles
    proc = make_proc([0.0, 2.0], sigma=0.25)
    assert adapt_variance(proc, 6.0) == pytest.approx(0.5)


def test_initial_sigma_is_quarter():
    # Initial value of variance 0.25
    proc = ReceptionProcess(mu=0.75)
    assert proc.sigma == 0.25
    assert proc.sigma0 == 0.25


def test_degenerate_phase_raises():
    proc = ReceptionProcess(mu=0.75)
    proc.phase_start_times = [1.0, 1.0]  # two spikes at identical timestamps
    with pytest.raises(DegeneratePhaseError):
        adapt_variance(proc, 2.0)


def test_needs_two_boundaries():
    proc = make_proc([0.0])
    with pytest.raises(ValueError):
        adapt_variance(proc, 1.0)


def test_adaptation_is_scale_free():
    for scale in (0.5, 3.0, 40.0):
        a = make_proc([0.0, 2.0], sigma=0.25)
        b = make_proc([0.0, 2.0 * scale], sigma=0.25)
        seq_a = [adapt_variance(a, t) for t in (5.0, 6.0, 9.0)]
        seq_b = [adapt_variance(b, t * scale) for t in (5.0, 6.0, 9.0)]
        assert seq_a == pytest.approx(seq_b)


def test_strictly_increasing_boundaries_enforced():
    proc = make_proc([0.0, 2.0])
    with pytest.raises(ValueError):
        adapt_variance(proc, 2.0)
    with pytest.raises(ValueError):
        proc.record_boundary(1.0)


# ---------------------------------------------------------------------------
# bridge expectation


def test_bridge_midpoint():
    assert bridge_expectation(0.2, 0.6, 0.0, 10.0, 5.0) == pytest.approx(0.4)


def test_bridge_constant():
    for t in (0.1, 3.3, 9.9):
        assert bridge_expectation(0.3, 0.3, 0.0, 10.0, t) == pytest.approx(0.3)


def test_bridge_quarter_point():
    assert bridge_expectation(0.1, 0.9, 0.0, 10.0, 2.5) == pytest.approx(0.3)


def test_bridge_against_pinned_path_monte_carlo(rng):
    mc = mc_bridge_mean(0.1, 0.9, 0.0, 10.0, 2.5, n_paths=40000, n_steps=200, rng=rng)
    assert abs(mc - bridge_expectation(0.1, 0.9, 0.0, 10.0, 2.5)) < 0.01


def test_bridge_outside_interval_raises():
    for t in (-1.0, 0.0, 10.0, 11.0):
        with pytest.raises(ValueError, match="outside bridge interval"):
            bridge_expectation(0.1, 0.9, 0.0, 10.0, t)


@given(
    a=st.floats(-5, 5), b=st.floats(-5, 5),
    t=st.floats(0.01, 0.99),
)
def test_bridge_linearity_symmetries(a, b, t):
    # swapped pins at the same time, and same pins at the mirrored time,
    # both complement the forward expectation to a + b
    fwd = bridge_expectation(a, b, 0.0, 1.0, t)
    swapped = bridge_expectation(b, a, 0.0, 1.0, t)
    mirrored = bridge_expectation(a, b, 0.0, 1.0, 1.0 - t)
    assert fwd + swapped == pytest.approx(a + b, abs=1e-9)
    assert fwd + mirrored == pytest.approx(a + b, abs=1e-9)


# ---------------------------------------------------------------------------
# first-hitting probability


def test_hitting_level_zero_is_certain():
    for t in (0.01, 1.0, 50.0):
        assert hitting_probability(0.0, t) == pytest.approx(1.0)


def test_hitting_unit_ratio():
    # |level| / sqrt(t) = 1
    assert hitting_probability(1.0, 1.0) == pytest.approx(0.3173, abs=1e-4)
    assert hitting_probability(2.0, 4.0) == pytest.approx(0.3173, abs=1e-4)


def test_normal_cdf_matches_scipy():
    xs = np.linspace(-8, 8, 161)
    ours = np.array([normal_cdf(x) for x in xs])
    assert np.max(np.abs(ours - norm.cdf(xs))) < 1e-7


def test_hitting_against_path_simulation(rng):
    mc = mc_hitting_fraction(2.0, 1.0, n_paths=100_000, dt=1e-3, rng=rng)
    assert abs(mc - hitting_probability(2.0, 1.0)) < 0.01


def test_hitting_nonpositive_horizon_raises():
    for t in (0.0, -1.0):
        with pytest.raises(ValueError, match="nonpositive horizon"):
            hitting_probability(1.0, t)


def test_hitting_monotonicity():
    ts = np.linspace(0.1, 20, 60)
    probs = [hitting_probability(1.5, t) for t in ts]
    assert all(b >= a - 1e-15 for a, b in zip(probs, probs[1:]))
    levels = np.linspace(0.0, 5.0, 60)
    probs = [hitting_probability(v, 2.0) for v in levels]
    assert all(b <= a + 1e-15 for a, b in zip(probs, probs[1:]))


# ---------------------------------------------------------------------------
# OU simulation


def test_ou_fixed_point_is_constant(rng):
    model = OuModel(reversion_rate=1.0, mean=2.0, diffusion=0.0)
    path = simulate_ou(model, x0=2.0, dt=0.1, n_steps=100, rng=rng)
    assert np.all(path == 2.0)


def test_ou_deterministic_relaxation(rng):
    model = OuModel(reversion_rate=1.0, mean=3.0, diffusion=0.0)
    path = simulate_ou(model, x0=4.0, dt=1.0, n_steps=1, rng=rng)
    assert path[-1] == pytest.approx(3.0 + math.exp(-1.0))


def test_ou_stationary_variance():
    model = OuModel(reversion_rate=1.0, mean=0.0, diffusion=1.0)
    rng = np.random.default_rng(11)
    path = simulate_ou(model, x0=0.0, dt=0.5, n_steps=1_000_000, rng=rng)
    assert np.var(path[1000:]) == pytest.approx(0.5, abs=0.02)


def test_ou_bit_reproducible():
    model = OuModel(reversion_rate=0.7, mean=1.0, diffusion=0.4)
    a = simulate_ou(model, 0.0, 0.1, 5000, np.random.default_rng(42))
    b = simulate_ou(model, 0.0, 0.1, 5000, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_ou_model_validation():
    with pytest.raises(ValueError):
        OuModel(reversion_rate=0.0)
    with pytest.raises(ValueError):
        OuModel(reversion_rate=1.0, diffusion=-0.1)
