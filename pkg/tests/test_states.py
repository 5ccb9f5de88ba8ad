import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

import qubitlab as q
from qubitlab.linalg import DimensionCapError
from qubitlab.states import SourceExhaustedError, _block_factors

from conftest import entropy_oracle, random_density_oracle


# --- tracial ------------------------------------------------------------------


def test_tracial_levels_and_entropy():
    t = q.tracial_state(20)
    assert np.allclose(t.density(1).probs, [0.5, 0.5])
    for n in range(1, 21):
        assert t.entropy(n) == pytest.approx(n, abs=1e-12)
    report = q.check_coherence(t, 20, 1e-12)
    assert report.passed and all(dev == 0.0 for _, dev in report.deviations)


# --- pure bitstring -----------------------------------------------------------


def test_pure_bitstring_levels():
    s = q.pure_bitstring_state("000000", 6)
    assert np.allclose(s.density(2).probs, [1, 0, 0, 0])
    z = q.pure_bitstring_state("0110100110", 10)
    for n in range(1, 11):
        assert z.entropy(n) == 0.0
    assert q.check_coherence(z, 10, 1e-15).passed


def test_pure_bitstring_index_convention():
    # first bit is the most significant index bit
    s = q.pure_bitstring_state("10", 2)
    assert np.allclose(s.density(2).probs, [0, 0, 1, 0])


def test_pure_bitstring_source_exhausted():
    with pytest.raises(SourceExhaustedError):
        q.pure_bitstring_state("0101", 10)
    assert len(q.prng_bits(30, 7)) == 30
    assert q.prng_bits(30, 7) == q.prng_bits(30, 7)


# --- block state ----------------------------------------------------------------


def test_block_checkpoint_values():
    assert [q.block_checkpoint(m) for m in (1, 2, 3)] == [2, 5, 9]
    assert q.block_checkpoint(8) == 44


def test_block_state_entropy_profile():
    b = q.block_state(44)
    assert b.entropy(9) == pytest.approx(6.0, abs=1e-12)  # checkpoint m=3
    for m in range(1, 9):
        n = q.block_checkpoint(m)
        assert b.entropy(n) == pytest.approx(n - m, abs=1e-10)
    # strictly between checkpoints: depth minus completed blocks minus 1
    for n in range(1, 45):
        m = max(k for k in range(0, 9) if q.block_checkpoint(k) <= n)
        expected = n - m if q.block_checkpoint(m) == n else n - m - 1
        assert b.entropy(n) == pytest.approx(expected, abs=1e-10)


def test_block_state_checkpoint_ratio_climbs():
    b = q.block_state(44)
    ratios = [b.entropy(q.block_checkpoint(m)) / q.block_checkpoint(m) for m in range(1, 9)]
    assert all(y > x for x, y in zip(ratios, ratios[1:]))


def test_block_state_coherence_deep_and_materialised():
    b = q.block_state(44)
    report = q.check_coherence(b, 44, 1e-10)
    assert report.passed
    # cross-check the factored representation against materialised vectors
    for n in range(1, 15):
        mat = b.density(n).probs
        kron = np.array([1.0])
        for f in _block_factors(n):
            kron = np.kron(kron, f)
        assert np.array_equal(mat, kron)
        assert b.entropy(n) == pytest.approx(entropy_oracle(mat), abs=1e-10)


def test_block_state_materialisation_cap():
    b = q.block_state(44)
    with pytest.raises(DimensionCapError):
        b.density(30)


# --- tensor powers ----------------------------------------------------------------


def test_tensor_power_of_uniform_is_tracial():
    t = q.tensor_power_state(q.DensityOperator.diagonal(np.array([0.5, 0.5])), 12)
    tr = q.tracial_state(12)
    for n in (1, 5, 12):
        assert np.allclose(t.density(n).probs, tr.density(n).probs)


def test_tensor_power_entropy_additive_diag():
    base = q.DensityOperator.diagonal(np.array([0.9, 0.1]))
    s = q.tensor_power_state(base, 24)
    h = entropy_oracle([0.9, 0.1])
    for n in range(1, 25):
        assert s.entropy(n) == pytest.approx(n * h, abs=1e-9)
    assert q.check_coherence(s, 24, 1e-10).passed


def test_tensor_power_rate_estimate_binary_entropy():
    base = q.DensityOperator.diagonal(np.array([0.9, 0.1]))
    s = q.tensor_power_state(base, 24)
    profile = q.entropy_profile(s, 24)
    est = q.entropy_rate_estimate(profile, 9)  # trailing n = 16..24
    assert est.n_lo == 16 and est.n_hi == 24
    assert est.value == pytest.approx(entropy_oracle([0.9, 0.1]), abs=0.02)


def test_tensor_power_dense_path(rng):
    base = random_density_oracle(rng, 2)
    s = q.tensor_power_state(base, 7)
    assert q.check_coherence(s, 7, 1e-8).passed
    h = q.von_neumann_entropy(base)
    assert s.entropy(6) == pytest.approx(3 * h, abs=1e-8)
    # off-multiple depths come from tracing the next full power
    assert s.density(5).qubits == 5


def test_tensor_power_dense_cap_at_construction():
    base = q.DensityOperator.dense(np.eye(4, dtype=complex) / 4)
    with pytest.raises(DimensionCapError):
        q.tensor_power_state(base, 20)


# --- profiles and estimates ---------------------------------------------------------


def test_entropy_profile_shapes():
    p = q.entropy_profile(q.tracial_state(8), 8)
    assert p.ratios() == pytest.approx([1.0] * 8)
    z = q.entropy_profile(q.pure_bitstring_state("0" * 8, 8), 8)
    assert z.ratios() == pytest.approx([0.0] * 8)
    est = q.entropy_rate_estimate(p, 3)
    assert est.value == 1.0 and est.window == 3
    with pytest.raises(ValueError):
        q.entropy_rate_estimate(p, 9)


# --- measure-induced states -----------------------------------------------------------


def test_uniform_density_gives_tracial():
    spec = q.DensitySpec(
        density=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        antiderivative=lambda x: np.asarray(x, dtype=float),
        name="uniform",
    )
    s = q.measure_state(spec, 10)
    tr = q.tracial_state(10)
    for n in (1, 4, 10):
        assert np.allclose(s.density(n).probs, tr.density(n).probs, atol=1e-15)


def test_log_power_cylinder_masses_closed_form():
    f2 = q.log_power_density(2)
    # mass of the left half-interval: antiderivative at 1/2
    assert f2.cylinder_masses(1)[0] == pytest.approx(1 / (1 + math.log(2)), abs=1e-12)
    f1 = q.log_power_density(3)
    assert float(f1.cylinder_masses(8).sum()) == pytest.approx(1.0, abs=1e-12)
    assert float(f2.cylinder_masses(12).sum()) == pytest.approx(1.0, abs=1e-12)


def test_log_power_antiderivative_consistent_with_density():
    # finite differences of the antiderivative recover the density
    for p in (2.0, 3.0):
        spec = q.log_power_density(p)
        xs = np.array([0.1, 0.3, 0.5, 0.9])
        h = 1e-7
        fd = (spec.antiderivative(xs + h) - spec.antiderivative(xs - h)) / (2 * h)
        assert np.allclose(fd, spec.density(xs), rtol=1e-5)


def test_measure_state_splits_are_exact():
    spec = q.log_power_density(2)
    s = q.measure_state(spec, 14)
    for n in (5, 10, 13):
        parent = s.density(n).probs
        child = s.density(n + 1).probs
        assert np.abs(child.reshape(-1, 2).sum(axis=1) - parent).max() <= 1e-12


def test_measure_state_quadrature_path_matches_closed_form():
    # density 2x integrates each cylinder to b^2 - a^2; no antiderivative given
    spec = q.DensitySpec(density=lambda x: 2.0 * x, name="linear-ramp")
    s = q.measure_state(spec, 8)
    masses = s.density(8).probs
    xs = np.linspace(0, 1, 257)
    assert np.abs(masses - np.diff(xs**2)).max() < 1e-10
    # leaf aggregation keeps coherence exact
    assert q.check_coherence(s, 8, 1e-15).passed


def test_measure_state_from_cylinder_callable():
    s = q.measure_state(lambda sigma: 2.0 ** -len(sigma), 6, name="uniform-cyl")
    assert np.allclose(s.density(3).probs, [1 / 8] * 8)


def test_density_must_normalise():
    with pytest.raises(q.linalg.WrongTraceError):
        q.DensitySpec(density=lambda x: 2.0 * np.ones_like(np.asarray(x, float)), name="double")


# --- coherence reports ------------------------------------------------------------------


def test_check_coherence_negative_control():
    levels = [
        q.DensityOperator.diagonal(np.array([0.5, 0.5])),
        q.DensityOperator.diagonal(np.array([0.25, 0.25, 0.25, 0.25])),
        q.DensityOperator.diagonal(np.array([0.5, 0.0, 0.25, 0.0, 0.25, 0.0, 0.0, 0.0])),
    ]
    broken = q.explicit_state("broken", levels)
    report = q.check_coherence(broken, 3, 1e-8)
    assert not report.passed
    assert report.first_failure == 3


def test_state_sequence_depth_bounds():
    t = q.tracial_state(5)
    with pytest.raises(q.linalg.BadDimensionError):
        t.density(6)
    with pytest.raises(q.linalg.BadDimensionError):
        t.density(0)


def test_state_sequence_thread_safe_memoisation():
    s = q.block_state(20)
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda _: s.density(12).probs.sum(), range(32)))
    assert all(r == results[0] for r in results)
