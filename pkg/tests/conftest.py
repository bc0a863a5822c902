"""Shared numeric helpers for the test suite."""

from __future__ import annotations

from fractions import Fraction

import gmpy2
import pytest

from hroots.precision import context, to_mpc


def absf(z) -> float:
    """Magnitude of an mpc/mpfr/complex as a float."""
    return float(gmpy2.sqrt(gmpy2.norm(to_mpc(z, 512))))


def rel_diff(a, b, bits: int = 512) -> float:
    """|a - b| / max(|a|, |b|), zero-safe and exponent-safe."""
    with context(bits):
        av = to_mpc(a, bits)
        bv = to_mpc(b, bits)
        na = gmpy2.sqrt(gmpy2.norm(av))
        nb = gmpy2.sqrt(gmpy2.norm(bv))
        scale = max(na, nb)
        if scale == 0:
            return 0.0
        return float(gmpy2.sqrt(gmpy2.norm(av - bv)) / scale)


def frac_to_mpc(q: Fraction, bits: int = 512):
    with context(bits):
        return to_mpc(q, bits)


@pytest.fixture(scope="session")
def quad():
    """z^2 - 3z + 2 = (z-1)(z-2), the workhorse fixture."""
    from hroots.poly import make_polynomial
    return make_polynomial([1, -3, 2])


@pytest.fixture(scope="session")
def pair_tie():
    """z^2 - 1: equal-modulus roots +1 and -1."""
    from hroots.poly import make_polynomial
    return make_polynomial([1, 0, -1])
