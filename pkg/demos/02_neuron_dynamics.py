"""A single neuron from rest to fire to adaptive repolarization.

Feeds a neuron a burst of excitatory transmitter, watches the membrane climb
and fire, then shows how the balance of excitatory vs inhibitory transmitter
over consecutive firing phases nudges the resetting potential.
"""

from spa_snn import NeuronState, fire_check, membrane_potential, repolarize, spike_effect

neuron = NeuronState()  # -65 mV rest, -52 mV threshold, -80 mV equilibrium

print("=== charging the membrane ===")
t = 0.0
fired_at = None
for step in range(80):
    t = step * 0.5
    # one excitatory packet per step: reception 0.8, weight 0.15, integral
    # over the step of the transmitter decay
    g_integral = 0.8 * 0.15 * 1.0 * (1.0 - 2.718281828 ** -0.5)
    effect = spike_effect(neuron, g_integral, t, kind="excitatory")
    neuron.add_contribution(effect, t)
    v = membrane_potential(neuron, t)
    if step % 5 == 0:
        print(f"t={t:5.1f} ms  v={v:8.3f} mV")
    if fire_check(neuron, t):
        fired_at = t
        print(f"t={t:5.1f} ms  FIRE (threshold {neuron.v_thr} mV), refractory until {neuron.refractory_until} ms")
        break

assert fired_at is not None

print("\n=== adaptive repolarization across phases ===")
print(f"resetting potential starts at {neuron.v_res} mV")
# phase 1 -> 2: excitation dominated and dropping -> depolarizing adjustment
v1 = repolarize(neuron, totals_prev=(4.0, 1.0), totals_cur=(2.5, 1.0))
print(f"excitation fading:   v_res -> {v1:.2f} mV (easier to reach threshold)")
# phase 2 -> 3: excitation rising again -> hyperpolarizing adjustment
v2 = repolarize(neuron, totals_prev=(2.5, 1.0), totals_cur=(6.0, 1.0))
print(f"excitation surging:  v_res -> {v2:.2f} mV (harder to reach threshold)")
# the per-event adjustment is clamped to +-3 mV no matter how lopsided
v3 = repolarize(neuron, totals_prev=(100.0, 0.0), totals_cur=(0.5, 60.0))
print(f"extreme imbalance:   v_res -> {v3:.2f} mV (clamped step)")
