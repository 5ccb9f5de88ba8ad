"""Coherent sequences and their per-qubit entropy profiles.

Run with:  python3 demos/02_state_sequences.py
"""

import numpy as np

import qubitlab as q

print("=" * 72)
print("State sequences: one density operator per depth, coherent under tracing")
print("=" * 72)

uniform = q.tracial_state(20)
spike = q.pure_bitstring_state(q.prng_bits(20, seed=7), 20)
blocks = q.block_state(44)
powers = q.tensor_power_state(q.DensityOperator.diagonal(np.array([0.9, 0.1])), 24)

for state in (uniform, spike, blocks, powers):
    report = q.check_coherence(state, state.max_depth, 1e-8)
    print(f"{state.name:<12} coherent to depth {state.max_depth}: {report.passed}")

print("\nper-qubit entropy H(n)/n:")
print(f"{'n':>4} {'uniform':>9} {'bitstring':>10} {'blocks':>9} {'powers':>9}")
for n in (1, 2, 5, 9, 14, 20):
    cells = [uniform.entropy(n) / n, spike.entropy(n) / n, blocks.entropy(n) / n]
    cells.append(powers.entropy(n) / n if n <= 24 else float("nan"))
    print(f"{n:>4} " + " ".join(f"{c:>9.4f}" for c in [*cells]))

print("\nthe block sequence climbs toward 1, checkpoint by checkpoint:")
for m in range(1, 9):
    n = q.block_checkpoint(m)
    print(f"  block {m} completes at depth {n:>2}: H/n = {blocks.entropy(n) / n:.4f}")

profile = q.entropy_profile(powers, 24)
est = q.entropy_rate_estimate(profile, window=9)
h = q.shannon_entropy([0.9, 0.1])
print(f"\ntensor-power rate estimate over n={est.n_lo}..{est.n_hi}: {est.value:.4f}")
print(f"per-copy entropy of diag(0.9, 0.1):          {h:.4f}")

print("\nmeasure-induced sequences from a density on (0,1):")
spec = q.log_power_density(2)
state = q.measure_state(spec, 16)
print("  left-half mass:", float(state.density(1).probs[0]), "= 1/(1+ln 2)")
print("  coherent:", q.check_coherence(state, 16, 1e-8).passed)
gaps = [q.entropy_gap(spec, n) for n in (4, 8, 12, 16)]
print("  entropy gap H(n) - n at n=4,8,12,16:", [round(g, 4) for g in gaps])
print("  (drifts away from 0 without bound: the density is too singular)")
