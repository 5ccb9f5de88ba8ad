from fractions import Fraction

import pytest

from qubitlab.dyadic import as_fraction, pow2_ceil, pow2_floor, rank_ceil, rank_floor


def test_pow2_exact_exponents():
    assert pow2_ceil(6, 2) == 8
    assert pow2_floor(6, 2) == 8
    assert pow2_ceil(0, 1) == 1


@pytest.mark.parametrize("num,den", [(3, 2), (7, 3), (9, 10), (33, 10), (100, 7)])
def test_pow2_brackets_true_value(num, den):
    c, f = pow2_ceil(num, den), pow2_floor(num, den)
    # exact bracketing: f^den <= 2^num <= c^den, with width <= 1
    assert f**den <= 2**num <= c**den
    assert c - f in (0, 1)
    # agrees with float math away from boundaries
    approx = 2.0 ** (num / den)
    assert f <= approx + 1e-9 and c >= approx - 1e-9


def test_rank_helpers_match_definition():
    theta = Fraction(1, 2)
    for n in range(1, 30):
        k = rank_ceil(n, theta)
        assert (k - 1) ** 2 < 2**n <= k**2
    r = Fraction(3, 10)
    # the float boundary case that motivates exactness: 2^(10*0.3) == 8
    assert rank_floor(10, r) == 8
    assert rank_ceil(10, r) == 8


def test_as_fraction_coercions():
    assert as_fraction("3/10") == Fraction(3, 10)
    assert as_fraction(0.3) == Fraction(3, 10)
    assert as_fraction(0.5) == Fraction(1, 2)
    assert as_fraction(Fraction(2, 7)) == Fraction(2, 7)
    assert as_fraction(1) == 1
    with pytest.raises(TypeError):
        as_fraction(None)
    with pytest.raises(TypeError):
        as_fraction(True)


def test_pow2_rejects_negative():
    with pytest.raises(ValueError):
        pow2_ceil(-1, 2)
