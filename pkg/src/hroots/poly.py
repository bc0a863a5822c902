"""Complex polynomials: construction, evaluation, differentiation, shifts.

Coefficients are stored in descending powers at a configurable mantissa
precision (default 256 bits); all operations round at that precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpc

from .errors import DegreeZero, EmptyInput, LeadingCoefficientZero
from .precision import DEFAULT_PRECISION, context, to_mpc


@dataclass(frozen=True)
class Polynomial:
    """P(z) = coeffs[0]*z^n + coeffs[1]*z^(n-1) + ... + coeffs[n]."""

    coeffs: tuple[mpc, ...]
    precision_bits: int = DEFAULT_PRECISION

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> mpc:
        return self.coeffs[0]

    @property
    def constant(self) -> mpc:
        return self.coeffs[-1]

    def ascending(self) -> tuple[mpc, ...]:
        """Coefficients reordered so index j multiplies z^j."""
        return tuple(reversed(self.coeffs))

    def __call__(self, z) -> mpc:
        return evaluate(self, z)

    def __repr__(self) -> str:
        return (f"Polynomial(degree={self.degree}, "
                f"coeffs={[complex(c) for c in self.coeffs]})")


@dataclass
class RootEntry:
    """One distinct root with its multiplicity and scaled residual."""

    root: mpc
    multiplicity: int
    residual: float
    source: str = ""


@dataclass
class RootSet:
    """Distinct nonzero roots plus the multiplicity of the root z = 0."""

    entries: list[RootEntry] = field(default_factory=list)
    zero_multiplicity: int = 0
    shifts_used: int = 0

    @property
    def distinct_count(self) -> int:
        return len(self.entries)

    def total_multiplicity(self) -> int:
        return sum(e.multiplicity for e in self.entries) + self.zero_multiplicity

    def expanded(self) -> list[mpc]:
        """All roots repeated by multiplicity (including zeros)."""
        out: list[mpc] = []
        for e in self.entries:
            out.extend([e.root] * e.multiplicity)
        out.extend([mpc(0)] * self.zero_multiplicity)
        return out


def make_polynomial(coeffs, precision_bits: int = DEFAULT_PRECISION) -> Polynomial:
    """Validate and convert a descending coefficient sequence.

    The constant term may be zero; zero roots are stripped by the solver,
    not here.
    """
    seq = list(coeffs)
    if not seq:
        raise EmptyInput("polynomial needs at least one coefficient")
    converted = tuple(to_mpc(c, precision_bits) for c in seq)
    if converted[0] == 0:
        raise LeadingCoefficientZero("leading coefficient is zero")
    return Polynomial(converted, precision_bits)


def strip_zero_roots(p: Polynomial) -> tuple[Polynomial, int]:
    """Split P(z) = z^count * Q(z) with Q(0) != 0; returns (Q, count)."""
    count = 0
    coeffs = list(p.coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
        count += 1
    return Polynomial(tuple(coeffs), p.precision_bits), count


def evaluate(p: Polynomial, z, precision_bits: int | None = None) -> mpc:
    """Horner evaluation of P(z) at working precision."""
    bits = precision_bits or p.precision_bits
    with context(bits):
        zz = to_mpc(z, bits)
        acc = mpc(0)
        for c in p.coeffs:
            acc = acc * zz + c
        return acc


def derivative(p: Polynomial) -> Polynomial:
    """Coefficient-wise derivative; degree must be at least 1."""
    n = p.degree
    if n < 1:
        raise DegreeZero("cannot differentiate a constant")
    with context(p.precision_bits):
        coeffs = tuple(p.coeffs[i] * (n - i) for i in range(n))
    return Polynomial(coeffs, p.precision_bits)


def shift(p: Polynomial, s) -> Polynomial:
    """Taylor shift: returns Q with Q(z) = P(z + s), so roots move to z_j - s.

    Computed by repeated synthetic division at full precision, which keeps
    integer and dyadic inputs exact.
    """
    bits = p.precision_bits
    with context(bits):
        sv = to_mpc(s, bits)
        work = list(p.coeffs)
        ascending: list[mpc] = []
        for _ in range(len(work)):
            acc = work[0]
            quotient = [acc]
            for c in work[1:]:
                acc = acc * sv + c
                quotient.append(acc)
            ascending.append(quotient.pop())
            work = quotient
        return Polynomial(tuple(reversed(ascending)), bits)


def from_roots(roots, a0=1, precision_bits: int = DEFAULT_PRECISION) -> Polynomial:
    """Expand a0 * prod (z - z_j)^{m_j} into coefficient form.

    `roots` is an iterable of (root, multiplicity) pairs.
    """
    lead = to_mpc(a0, precision_bits)
    if lead == 0:
        raise LeadingCoefficientZero("a0 must be nonzero")
    with context(precision_bits):
        coeffs: list[mpc] = [lead]
        for root, mult in roots:
            if mult < 1 or mult != int(mult):
                raise ValueError(f"multiplicity must be a positive integer, got {mult}")
            rv = to_mpc(root, precision_bits)
            for _ in range(int(mult)):
                nxt = [mpc(0)] * (len(coeffs) + 1)
                for i, c in enumerate(coeffs):
                    nxt[i] += c
                    nxt[i + 1] -= c * rv
                coeffs = nxt
        return Polynomial(tuple(coeffs), precision_bits)


def cauchy_bound(p: Polynomial) -> float:
    """1 + max |a_i / a_0|: every root has modulus below this."""
    with context(p.precision_bits):
        lead = gmpy2.sqrt(gmpy2.norm(p.leading))
        worst = 0.0
        for c in p.coeffs[1:]:
            worst = max(worst, float(gmpy2.sqrt(gmpy2.norm(c)) / lead))
    return 1.0 + worst


def fujiwara_bound(p: Polynomial) -> float:
    """2 max_i |a_i / a_0|^(1/i): a root bound that scales with the roots.

    Much tighter than the Cauchy bound when low-order coefficients are
    large (e.g. products of many integer roots), which matters wherever
    a length scale commensurate with the roots is needed.
    """
    with context(p.precision_bits):
        lead = gmpy2.sqrt(gmpy2.norm(p.leading))
        worst = 0.0
        for i, c in enumerate(p.coeffs[1:], start=1):
            mag = float(gmpy2.sqrt(gmpy2.norm(c)) / lead)
            if mag > 0:
                worst = max(worst, mag ** (1.0 / i))
    return 2.0 * worst if worst > 0 else 1.0


def scaled_residual(p: Polynomial, z, precision_bits: int | None = None) -> float:
    """|P(z)| / (|a_0| * max(1, |z|)^n), the residual metric used everywhere."""
    bits = precision_bits or 2 * p.precision_bits
    with context(bits):
        val = evaluate(p, z, bits)
        az = gmpy2.sqrt(gmpy2.norm(to_mpc(z, bits)))
        lead = gmpy2.sqrt(gmpy2.norm(p.leading))
        denom = lead * max(gmpy2.mpfr(1), az) ** p.degree
        r = gmpy2.sqrt(gmpy2.norm(val)) / denom
        try:
            return float(r)
        except OverflowError:
            return math.inf
