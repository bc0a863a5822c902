"""Coefficient streams of the logarithmic derivative P'/P.

Two dual expansions feed the determinant machinery:

* Taylor at 0:      P'/P = sum c_k z^k, valid when P(0) != 0; the c_k are
  negated power sums of the reciprocal roots.
* Laurent at inf:   P'/P = sum b_k / z^(k+1); the b_k are the power sums
  of the roots, b_0 = degree.

Both are produced by exact linear recurrences on the coefficients, never
by numerical differentiation, so binary-representable inputs stay exact.
"""

from __future__ import annotations

import enum
import threading

from gmpy2 import mpc

from .errors import ConstantTermZero, DegreeZero, InsufficientStream
from .poly import Polynomial
from .precision import context


class Side(enum.Enum):
    """Which expansion of P'/P a stream (or trace) is built from."""

    TAYLOR = "taylor"
    LAURENT = "laurent"

    @classmethod
    def parse(cls, text: str) -> "Side":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown side {text!r}; expected 'taylor' or 'laurent'")


class CoefficientStream:
    """Lazily extendable sequence of c_k (Taylor) or b_k (Laurent).

    Extension appends only, so already-produced prefixes never change.
    A lock keeps extension single-writer; reads of an existing prefix are
    safe from concurrent callers.
    """

    def __init__(self, source: Polynomial, kind: Side,
                 precision_bits: int | None = None,
                 max_len: int | None = None):
        self.source = source
        self.kind = kind
        self.precision_bits = precision_bits or source.precision_bits
        self.max_len = max_len
        self._values: list[mpc] = []
        self._lock = threading.Lock()
        if kind is Side.TAYLOR:
            if source.constant == 0:
                raise ConstantTermZero(
                    "Taylor stream needs P(0) != 0; strip zero roots first")
            self._asc = source.ascending()
        else:
            if source.degree < 1:
                raise DegreeZero("Laurent stream needs degree >= 1")

    def __len__(self) -> int:
        return len(self._values)

    def get(self, k: int) -> mpc:
        """Coefficient at index k, extending the stream on demand."""
        if k < 0:
            raise IndexError("stream index must be nonnegative")
        if len(self._values) <= k:
            if self.max_len is not None and k >= self.max_len:
                raise InsufficientStream(
                    f"stream capped at {self.max_len} coefficients, need index {k}")
            with self._lock:
                self._extend_to(k + 1)
        return self._values[k]

    __getitem__ = get

    def prefix(self, count: int) -> tuple[mpc, ...]:
        """The first `count` coefficients."""
        if count > 0:
            self.get(count - 1)
        return tuple(self._values[:count])

    # -- internals ---------------------------------------------------

    def _extend_to(self, need: int) -> None:
        have = len(self._values)
        if have >= need:
            return
        # amortized doubling so repeated small requests stay linear
        target = max(need, 2 * have, 8)
        if self.max_len is not None:
            target = min(target, self.max_len)
        with context(self.precision_bits):
            if self.kind is Side.TAYLOR:
                self._extend_taylor(target)
            else:
                self._extend_laurent(target)

    def _extend_taylor(self, target: int) -> None:
        # (j+1) p_{j+1} = sum_{i<=j} c_i p_{j-i}, ascending p_j, p_0 != 0
        p = self._asc
        n = len(p) - 1
        c = self._values
        p0 = p[0]
        for j in range(len(c), target):
            acc = (j + 1) * p[j + 1] if j + 1 <= n else mpc(0)
            lo = max(0, j - n)
            for i in range(lo, j):
                acc -= c[i] * p[j - i]
            c.append(acc / p0)

    def _extend_laurent(self, target: int) -> None:
        # Newton's identities on descending a_0..a_n
        a = self.source.coeffs
        n = self.source.degree
        b = self._values
        a0 = a[0]
        if not b and target > 0:
            b.append(mpc(n))
        for k in range(len(b), target):
            acc = k * a[k] if k <= n else mpc(0)
            for i in range(1, min(k - 1, n) + 1):
                acc += a[i] * b[k - i]
            b.append(-acc / a0)


def taylor_coeffs(p: Polynomial, count: int,
                  precision_bits: int | None = None) -> tuple[mpc, ...]:
    """First `count` Taylor coefficients c_k of P'/P at 0."""
    return CoefficientStream(p, Side.TAYLOR, precision_bits).prefix(count)


def laurent_coeffs(p: Polynomial, count: int,
                   precision_bits: int | None = None) -> tuple[mpc, ...]:
    """First `count` Laurent coefficients b_k of P'/P at infinity.

    These are the power sums of the roots counted with multiplicity;
    in particular b_0 equals the degree exactly.
    """
    return CoefficientStream(p, Side.LAURENT, precision_bits).prefix(count)
