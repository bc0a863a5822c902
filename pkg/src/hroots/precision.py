"""High-precision complex arithmetic built on gmpy2 (MPFR/MPC).

Everything numeric in this package runs inside an explicit precision
context; values are plain ``gmpy2.mpc``/``gmpy2.mpfr`` except where
determinants need the mantissa/exponent split of :class:`ScaledComplex`.
"""

from __future__ import annotations

import math
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr

DEFAULT_PRECISION = 256
GUARD_BITS = 16


def context(bits: int):
    """Arithmetic context rounding every operation to `bits` of mantissa."""
    if bits < 2:
        raise ValueError(f"precision must be at least 2 bits, got {bits}")
    return gmpy2.context(precision=int(bits), allow_complex=True)


def to_mpc(value, bits: int = DEFAULT_PRECISION) -> mpc:
    """Convert a Python/gmpy2 number (or (re, im) pair) to mpc at `bits`."""
    with context(bits):
        if isinstance(value, mpc):
            return +value
        if isinstance(value, (tuple, list)) and len(value) == 2:
            return mpc(mpfr(value[0]), mpfr(value[1]))
        if isinstance(value, complex):
            return mpc(value.real, value.imag)
        if isinstance(value, Fraction):
            return mpc(gmpy2.mpq(value.numerator, value.denominator))
        return mpc(value)


def scale2(x, e: int):
    """Multiply by 2**e exactly (mpfr or mpc input)."""
    if e >= 0:
        return gmpy2.mul_2exp(x, e)
    return gmpy2.div_2exp(x, -e)


class ScaledComplex:
    """Complex value as (mantissa, binary exponent) with |mantissa| near 1.

    value = mantissa * 2**exponent; for nonzero values the mantissa
    magnitude is kept in [1/2, 2), so products of geometrically growing
    or decaying determinant entries never push the representation into
    an extreme exponent regime. Zero is (0, 0). Instances are treated as
    immutable; arithmetic must run inside a precision context.
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa, exponent: int = 0):
        mantissa = mantissa if isinstance(mantissa, mpc) else mpc(mantissa)
        n = gmpy2.norm(mantissa)
        if n == 0:
            self.mantissa = mpc(0)
            self.exponent = 0
        else:
            # frexp of |m|^2 gives the shift keeping |m| in [sqrt(.5), sqrt(2)).
            e2, _ = gmpy2.frexp(n)
            shift = e2 >> 1
            self.mantissa = scale2(mantissa, -shift) if shift else mantissa
            self.exponent = int(exponent) + shift

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls) -> "ScaledComplex":
        return cls(mpc(0), 0)

    @classmethod
    def one(cls) -> "ScaledComplex":
        return cls(mpc(1), 0)

    # -- predicates / accessors ---------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.mantissa == 0

    @property
    def value(self) -> mpc:
        """The represented number as a single mpc at the mantissa's precision.

        Scaling by a power of two is exact, so this never loses bits even
        when called outside a precision context.
        """
        bits = max(self.mantissa.precision)
        with gmpy2.context(precision=bits, allow_complex=True):
            return scale2(self.mantissa, self.exponent)

    def to_complex(self) -> complex:
        """Lossy conversion to a machine complex (inf on exponent overflow)."""
        m = complex(self.mantissa)
        try:
            return complex(math.ldexp(m.real, self.exponent),
                           math.ldexp(m.imag, self.exponent))
        except OverflowError:
            big = math.inf
            return complex(math.copysign(big, m.real), math.copysign(big, m.imag))

    def log2_abs(self) -> float:
        """log2 of the magnitude (-inf for zero)."""
        if self.is_zero:
            return -math.inf
        return self.exponent + 0.5 * math.log2(float(gmpy2.norm(self.mantissa)))

    # -- arithmetic ----------------------------------------------------

    def __neg__(self) -> "ScaledComplex":
        out = ScaledComplex.__new__(ScaledComplex)
        out.mantissa = -self.mantissa
        out.exponent = self.exponent
        return out

    def __mul__(self, other: "ScaledComplex") -> "ScaledComplex":
        return ScaledComplex(self.mantissa * other.mantissa,
                             self.exponent + other.exponent)

    def __truediv__(self, other: "ScaledComplex") -> "ScaledComplex":
        if other.is_zero:
            raise ZeroDivisionError("ScaledComplex division by zero")
        return ScaledComplex(self.mantissa / other.mantissa,
                             self.exponent - other.exponent)

    def __add__(self, other: "ScaledComplex") -> "ScaledComplex":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        big, small = (self, other) if self.exponent >= other.exponent else (other, self)
        gap = big.exponent - small.exponent
        if gap > gmpy2.get_context().precision + 8:
            return big
        return ScaledComplex(big.mantissa + scale2(small.mantissa, -gap), big.exponent)

    def __sub__(self, other: "ScaledComplex") -> "ScaledComplex":
        return self + (-other)

    # -- misc ------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScaledComplex):
            return NotImplemented
        return self.exponent == other.exponent and self.mantissa == other.mantissa

    def __hash__(self):
        return hash((str(self.mantissa), self.exponent))

    def __repr__(self) -> str:
        return f"ScaledComplex({self.mantissa} * 2**{self.exponent})"
