"""Hankel determinants over coefficient streams, with cancellation control.

The r x r determinant with entries stream[k+i+j] collapses geometrically
in k while its entries do not, so every cell carries a cancellation
margin: the gap (in bits) between the Hadamard magnitude ceiling of the
matrix and the computed determinant. Margins close to the precision
budget mean the value is noise; a whole window of such cells certifies a
structural zero (rank deficiency) to the extent precision allows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import gmpy2

from .precision import GUARD_BITS, ScaledComplex, context
from .series import CoefficientStream


@dataclass
class HankelCell:
    """One determinant value H_{k,r} with its trust diagnostics."""

    k: int
    r: int
    value: ScaledComplex
    cancellation_margin: float
    precision_bits: int
    ceiling_log2: float = 0.0  # log2 of the Hadamard magnitude bound

    @property
    def is_zero(self) -> bool:
        return self.value.is_zero

    def certified_zero(self, guard_bits: int = GUARD_BITS) -> bool:
        """True when the value is zero to the full extent precision certifies."""
        return self.is_zero or self.cancellation_margin >= self.precision_bits - guard_bits

    def good_bits(self) -> float:
        """Mantissa bits left after cancellation."""
        return self.precision_bits - self.cancellation_margin

    def trusted(self, min_good_bits: float) -> bool:
        return not self.is_zero and self.good_bits() >= min_good_bits


class StructuralZeroStatus(enum.Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    INCONCLUSIVE = "inconclusive"

    def __bool__(self) -> bool:
        return self is StructuralZeroStatus.ZERO


def _det_scaled(matrix: list[list[ScaledComplex]]) -> ScaledComplex:
    """LU with partial pivoting on ScaledComplex; returns the determinant.

    Sequential elimination order, so results are reproducible bit for bit.
    """
    r = len(matrix)
    m = [row[:] for row in matrix]
    det = ScaledComplex.one()
    sign = 1
    for col in range(r):
        pivot_row = col
        pivot_mag = m[col][col].log2_abs()
        for row in range(col + 1, r):
            mag = m[row][col].log2_abs()
            if mag > pivot_mag:
                pivot_row, pivot_mag = row, mag
        if m[pivot_row][col].is_zero:
            return ScaledComplex.zero()
        if pivot_row != col:
            m[col], m[pivot_row] = m[pivot_row], m[col]
            sign = -sign
        pivot = m[col][col]
        det = det * pivot
        for row in range(col + 1, r):
            if m[row][col].is_zero:
                continue
            factor = m[row][col] / pivot
            for j in range(col + 1, r):
                m[row][j] = m[row][j] - factor * m[col][j]
    return -det if sign < 0 else det


def _hadamard_bound_log2(matrix: list[list[ScaledComplex]]) -> float:
    """log2 of prod_i ||row_i||_2, the magnitude ceiling for |det|."""
    total = 0.0
    for row in matrix:
        top = max(e.exponent for e in row if not e.is_zero)
        s = gmpy2.mpfr(0)
        for e in row:
            if not e.is_zero:
                shift = 2 * (e.exponent - top)
                s += gmpy2.mul_2exp(gmpy2.norm(e.mantissa), shift) if shift >= 0 \
                    else gmpy2.div_2exp(gmpy2.norm(e.mantissa), -shift)
        total += 0.5 * (math.log2(float(s)) + 2 * top)
    return total


def hadamard_det(stream: CoefficientStream, k: int, r: int) -> HankelCell:
    """Determinant of the r x r Hankel matrix with entries stream[k+i+j].

    Computed by pivoted LU on scaled arithmetic at the stream's precision;
    the cell's cancellation_margin reports log2(ceiling / |det|).
    """
    if r < 1:
        raise ValueError(f"order r must be >= 1, got {r}")
    if k < 0:
        raise ValueError(f"index k must be >= 0, got {k}")
    bits = stream.precision_bits
    top = k + 2 * (r - 1)
    stream.get(top)  # raises InsufficientStream on capped streams
    with context(bits):
        entries = [ScaledComplex(stream.get(i)) for i in range(k, top + 1)]
        matrix = [[entries[i + j] for j in range(r)] for i in range(r)]
        if all(e.is_zero for row in matrix for e in row):
            return HankelCell(k, r, ScaledComplex.zero(), math.inf, bits, -math.inf)
        det = _det_scaled(matrix)
        bound = _hadamard_bound_log2(matrix)
        if det.is_zero:
            margin = math.inf
        else:
            margin = max(0.0, bound - det.log2_abs())
        return HankelCell(k, r, det, margin, bits, bound)


def det_row(stream: CoefficientStream, k_from: int, k_to: int,
            r: int) -> list[HankelCell]:
    """Cells for every k in [k_from, k_to]; identical to per-cell calls."""
    if k_to < k_from:
        raise ValueError("k_to must be >= k_from")
    return [hadamard_det(stream, k, r) for k in range(k_from, k_to + 1)]


def is_structural_zero(cells: list[HankelCell],
                       guard_bits: int = GUARD_BITS,
                       min_window: int = 5) -> StructuralZeroStatus:
    """Decide whether a k-window of same-order cells is identically zero.

    ZERO: every cell is below 2^-(precision-guard) of its magnitude
    ceiling, i.e. zero as far as the precision budget can certify.
    NONZERO: at least one cell is a clearly trusted nonzero value.
    INCONCLUSIVE: the window mixes noise-floor cells with values too
    close to the floor to trust either way; callers escalate precision.
    """
    if len(cells) < min_window:
        raise ValueError(f"need a window of >= {min_window} cells, got {len(cells)}")
    if all(c.certified_zero(guard_bits) for c in cells):
        return StructuralZeroStatus.ZERO
    if any(not c.is_zero and c.cancellation_margin
           <= c.precision_bits - 2 * guard_bits for c in cells):
        return StructuralZeroStatus.NONZERO
    return StructuralZeroStatus.INCONCLUSIVE
