"""Exact integer arithmetic for dyadic-exponent rank certificates.

Test builders promise bounds like ``rank * 2**-n < 2**-m`` where the rank
is ``ceil(2**(n*p/q))``.  An off-by-one from float ``pow`` near an integer
boundary silently invalidates such a certificate, so ranks and the
admissibility conditions are decided on Python bigints only.
"""

from __future__ import annotations

from fractions import Fraction

#: floats passed as rate parameters are snapped to the nicest nearby rational
MAX_DENOMINATOR = 10**6


def as_fraction(x: object) -> Fraction:
    """Coerce a rate parameter (theta, s, t, r) to an exact rational.

    Floats go through ``Fraction.limit_denominator`` so that 0.3 means 3/10
    rather than its 53-bit binary expansion.  Strings like "3/10" are exact.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("rate parameter cannot be a bool")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(MAX_DENOMINATOR)
    raise TypeError(f"cannot interpret {x!r} as a rational rate")


def pow2_ceil(num: int, den: int) -> int:
    """``ceil(2**(num/den))`` computed exactly (num >= 0, den >= 1)."""
    if num < 0 or den < 1:
        raise ValueError("need num >= 0 and den >= 1")
    q, r = divmod(num, den)
    if r == 0:
        return 1 << q
    target = 1 << num
    lo, hi = 1 << q, 1 << (q + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**den >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def pow2_floor(num: int, den: int) -> int:
    """``floor(2**(num/den))`` computed exactly (num >= 0, den >= 1)."""
    c = pow2_ceil(num, den)
    return c if c**den == 1 << num else c - 1


def rank_ceil(n: int, rate: Fraction) -> int:
    """Exact ``ceil(2**(n*rate))`` for a positive rational rate."""
    return pow2_ceil(n * rate.numerator, rate.denominator)


def rank_floor(n: int, rate: Fraction) -> int:
    """Exact ``floor(2**(n*rate))`` for a positive rational rate."""
    return pow2_floor(n * rate.numerator, rate.denominator)
