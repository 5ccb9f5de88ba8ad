"""Shared fixtures: small states and independent oracle helpers."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

import qubitlab as q


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture(scope="session")
def fixture_states():
    """The standard quartet used across weight/bridge checks (depth 10)."""
    dense_factor = random_density_oracle(np.random.default_rng(5), 1)
    return {
        "tracial": q.tracial_state(10),
        "pure": q.pure_bitstring_state("0110100110", 10),
        "block": q.block_state(10),
        "power-diag": q.tensor_power_state(
            q.DensityOperator.diagonal(np.array([0.9, 0.1])), 10
        ),
        "power-dense": q.tensor_power_state(dense_factor, 10),
    }


def random_density_oracle(rng, qubits: int) -> "q.DensityOperator":
    """Ginibre-style random density matrix, independent of library helpers."""
    dim = 1 << qubits
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    return q.validate_density(m / m.trace().real, 1e-8)


def haar_projection_oracle(rng, qubits: int, rank: int) -> "q.Projection":
    """Rank-k projection onto a Haar-random frame via QR."""
    dim = 1 << qubits
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    qmat, _ = np.linalg.qr(g)
    p = qmat @ qmat.conj().T
    return q.Projection(qubits=qubits, matrix=(p + p.conj().T) / 2)


def random_descending(rng, size: int, concentration: float = 1.0) -> np.ndarray:
    return np.sort(rng.dirichlet(np.full(size, concentration)))[::-1]


def entropy_oracle(p) -> float:
    """Plain-python Shannon entropy in bits."""
    return -sum(x * math.log2(x) for x in np.asarray(p, dtype=float) if x > 0)


def flatten_scan_oracle(alpha, cut: int):
    """Direct scan construction of the flattened vector, exact rationals.

    Copies the head, then appends the cut value while the running mass
    stays at most 1 (with the same 1e-12 dust allowance the library
    documents), then zeros.
    """
    alpha = [float(x) for x in alpha]
    r = alpha[:cut] + [0.0] * (len(alpha) - cut)
    total = Fraction(0)
    for x in alpha[:cut]:
        total += Fraction(x)
    pad = Fraction(alpha[cut - 1])
    limit = Fraction(1) + Fraction(1e-12)
    i = cut
    while pad > 0 and i < len(alpha) and total + pad <= limit:
        r[i] = alpha[cut - 1]
        total += pad
        i += 1
    return r


def binomial_top_sum_oracle(p0: float, p1: float, copies: int, rank: int) -> float:
    """Top-`rank` eigenvalue mass of an n-fold two-outcome tensor power.

    Enumerates eigenvalues p0^j p1^(n-j) with binomial multiplicities in
    descending order; no kron, no sort.
    """
    assert p0 >= p1
    remaining = rank
    total = 0.0
    for j in range(copies, -1, -1):
        mult = math.comb(copies, j)
        take = min(mult, remaining)
        total += take * (p0**j) * (p1 ** (copies - j))
        remaining -= take
        if remaining == 0:
            break
    return total
