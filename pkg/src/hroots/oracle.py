"""Independent ground truth for tests, acceptance and `hroots verify`.

Everything here reaches the same quantities as the solver by a different
road: Vandermonde products instead of LU, closed-form determinant sums
over root subsets instead of coefficient streams, theoretical error
constants instead of fitted ones, and a simultaneous root iteration that
shares no code with the determinant pipeline.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpc

from .errors import NoConvergence, NoModulusGap
from .poly import Polynomial, evaluate, fujiwara_bound, scaled_residual
from .precision import DEFAULT_PRECISION, context, to_mpc
from .series import Side

# Closed-form determinant sums over root subsets can be written with or
# without an r! prefactor; only one matches the direct determinant, and
# a 2x2 desk expansion fixes which (see determine_factorial_convention).
INCLUDE_FACTORIAL = False


def _absf(z) -> float:
    try:
        return float(gmpy2.sqrt(gmpy2.norm(z)))
    except (OverflowError, ValueError):
        return math.inf


def vandermonde(args, precision_bits: int = DEFAULT_PRECISION) -> mpc:
    """prod_{i<j} (a_j - a_i); equals the determinant of the power matrix.

    A single argument gives 1 by convention.
    """
    vals = [to_mpc(a, precision_bits) for a in args]
    if not vals:
        raise ValueError("need at least one argument")
    with context(precision_bits):
        acc = mpc(1)
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                acc *= vals[j] - vals[i]
        return acc


def _det_mpc(rows: list[list[mpc]]) -> mpc:
    """Plain LU determinant with partial pivoting at the ambient precision."""
    n = len(rows)
    m = [row[:] for row in rows]
    det = mpc(1)
    for col in range(n):
        piv = max(range(col, n), key=lambda i: gmpy2.norm(m[i][col]))
        if m[piv][col] == 0:
            return mpc(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        for i in range(col + 1, n):
            f = m[i][col] / m[col][col]
            for j in range(col + 1, n):
                m[i][j] -= f * m[col][j]
    return det


def vandermonde_inversed(args, precision_bits: int = DEFAULT_PRECISION) -> mpc:
    """Determinant of the row-reversed power matrix (highest powers first).

    Computed as an actual determinant, so the sign relation against
    :func:`vandermonde` is a genuine two-route check.
    """
    vals = [to_mpc(a, precision_bits) for a in args]
    if not vals:
        raise ValueError("need at least one argument")
    s = len(vals)
    if s == 1:
        return to_mpc(1, precision_bits)
    with context(precision_bits):
        rows = [[v ** (s - 1 - i) for v in vals] for i in range(s)]
        return _det_mpc(rows)


def hadamard_via_roots(roots, mults, k: int, r: int, side: Side,
                       include_factorial: bool = INCLUDE_FACTORIAL,
                       precision_bits: int = 2 * DEFAULT_PRECISION) -> mpc:
    """Closed-form Hankel determinant from the roots and multiplicities.

    Taylor side: (-1)^r sum over r-subsets of m-products times
    V(subset)^2 / (prod subset)^(k+2r-1); Laurent side drops the sign
    and uses (prod subset)^k. Orders above the number of distinct roots
    give exactly zero.
    """
    roots = list(roots)
    mults = list(mults)
    if len(roots) != len(mults):
        raise ValueError("roots and multiplicities differ in length")
    p = len(roots)
    if r < 1:
        raise ValueError("order r must be >= 1")
    if r > p:
        return to_mpc(0, precision_bits)
    with context(precision_bits):
        rs = [to_mpc(z, precision_bits) for z in roots]
        acc = mpc(0)
        for subset in itertools.combinations(range(p), r):
            prod_roots = mpc(1)
            prod_mults = 1
            for j in subset:
                prod_roots *= rs[j]
                prod_mults *= mults[j]
            v = vandermonde([rs[j] for j in subset], precision_bits)
            if side is Side.TAYLOR:
                term = prod_mults * v * v / prod_roots ** (k + 2 * r - 1)
            else:
                term = prod_mults * v * v * prod_roots ** k
            acc += term
        if side is Side.TAYLOR and r % 2 == 1:
            acc = -acc
        if include_factorial:
            acc *= math.factorial(r)
        return acc


def determine_factorial_convention(precision_bits: int = DEFAULT_PRECISION) -> bool:
    """Match the closed form against a direct 2x2 determinant.

    Uses roots {1, 2}: the Taylor coefficients are -(1 + 2^-(k+1)), so
    H_{0,2} = c_0 c_2 - c_1^2 = 27/16 - 25/16 = 1/8 exactly. Returns the
    include_factorial flag that reproduces it.
    """
    direct = to_mpc(0.125, precision_bits)
    for flag in (False, True):
        value = hadamard_via_roots([1, 2], [1, 1], 0, 2, Side.TAYLOR,
                                   include_factorial=flag,
                                   precision_bits=precision_bits)
        with context(precision_bits):
            if _absf(value - direct) < 1e-30:
                return flag
    raise AssertionError("neither prefactor convention matches the direct determinant")


@dataclass
class ErrorBound:
    """Theoretical geometric error model |R_r(k) - product| < C * q^exponent.

    exponent is k + 2r - 1 on the Taylor side and k on the Laurent side,
    valid once k >= k_threshold.
    """

    constant: float          # C
    decay_ratio: float       # q
    k_threshold: int
    weight_sum: float        # D, the sum of competing subset weights

    def taylor_bound(self, k: int, r: int) -> float:
        return self.constant * self.decay_ratio ** (k + 2 * r - 1)

    def laurent_bound(self, k: int) -> float:
        return self.constant * self.decay_ratio ** k


def _sorted_by_modulus(roots, mults, precision_bits):
    rs = [to_mpc(z, precision_bits) for z in roots]
    order = sorted(range(len(rs)), key=lambda i: (_absf(rs[i]), float(gmpy2.phase(rs[i]))))
    return [rs[i] for i in order], [mults[i] for i in order]


def theoretical_error_constant(roots, mults, r: int, side: Side,
                               eps: float = 0.4,
                               precision_bits: int = 2 * DEFAULT_PRECISION,
                               ) -> ErrorBound:
    """Error constant C, rate q, weight sum D and the k threshold.

    The weights d over competing r-subsets compare multiplicity products
    and squared Vandermonde ratios against the reference subset (the r
    smallest-modulus roots on the Taylor side, the r largest on the
    Laurent side); C = |reference product| * 2D * (1 + 2 eps), valid once
    q^(k+2r) D < eps (Taylor) or q^k D < eps (Laurent), with eps < 1/2.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    p = len(list(roots))
    if not 1 <= r <= p:
        raise ValueError(f"order r must be in [1, p]; got {r}")
    rs, ms = _sorted_by_modulus(list(roots), list(mults), precision_bits)
    with context(precision_bits):
        if side is Side.TAYLOR:
            reference = tuple(range(r))
            if r < p:
                lo, hi = _absf(rs[r - 1]), _absf(rs[r])
                if not lo < hi * (1 - 1e-12):
                    raise NoModulusGap(f"|z_{r}| is not strictly below |z_{r+1}|")
                q = lo / hi
            else:
                q = 0.0
        else:
            reference = tuple(range(p - r, p))
            if r < p:
                lo, hi = _absf(rs[p - r - 1]), _absf(rs[p - r])
                if not lo < hi * (1 - 1e-12):
                    raise NoModulusGap(
                        f"|z_{p - r}| is not strictly below |z_{p - r + 1}|")
                q = lo / hi
            else:
                q = 0.0
        v_ref = vandermonde([rs[j] for j in reference], precision_bits)
        m_ref = 1
        prod_ref = mpc(1)
        for j in reference:
            m_ref *= ms[j]
            prod_ref *= rs[j]
        d_sum = 0.0
        for subset in itertools.combinations(range(p), r):
            if subset == reference:
                continue
            v = vandermonde([rs[j] for j in subset], precision_bits)
            m_prod = 1
            for j in subset:
                m_prod *= ms[j]
            ratio = v / v_ref
            d_sum += (m_prod / m_ref) * float(gmpy2.norm(ratio))
        constant = _absf(prod_ref) * 2.0 * d_sum * (1.0 + 2.0 * eps)
        if d_sum == 0.0 or q == 0.0:
            threshold = 0
        else:
            # smallest k with q^(k + offset) * D < eps
            offset = 2 * r if side is Side.TAYLOR else 0
            threshold = max(0, math.ceil((math.log(eps / d_sum)) / math.log(q)) - offset)
            while q ** (threshold + offset) * d_sum >= eps:
                threshold += 1
        return ErrorBound(constant, q, threshold, d_sum)


def coarse_error_constant(roots, mults, side: Side,
                          precision_bits: int = 2 * DEFAULT_PRECISION,
                          ) -> ErrorBound:
    """Simpler r = 1 constant C = |z_extreme| * 4(n-1), no subset sums.

    Valid once q^(k+2) (n-1) < 1/2 on the Taylor side or q^k (n-1) < 1/2
    on the Laurent side; coarser than theoretical_error_constant but
    computable from the degree alone.
    """
    rs, ms = _sorted_by_modulus(list(roots), list(mults), precision_bits)
    p = len(rs)
    n = sum(ms)
    if p < 2:
        raise NoModulusGap("need at least two distinct roots")
    with context(precision_bits):
        if side is Side.TAYLOR:
            lo, hi = _absf(rs[0]), _absf(rs[1])
            extreme = _absf(rs[0])
        else:
            lo, hi = _absf(rs[p - 2]), _absf(rs[p - 1])
            extreme = _absf(rs[p - 1])
        if not lo < hi * (1 - 1e-12):
            raise NoModulusGap("no strict gap at the extreme position")
        q = lo / hi
    constant = extreme * 4.0 * (n - 1)
    offset = 2 if side is Side.TAYLOR else 0
    threshold = 0
    while q ** (threshold + offset) * (n - 1) >= 0.5:
        threshold += 1
    return ErrorBound(constant, q, threshold, float(n - 1))


def independent_roots(p: Polynomial, seed: int = 0,
                      precision_bits: int | None = None,
                      max_iter: int = 500, restarts: int = 3,
                      residual_target: float = 1e-12) -> list[mpc]:
    """All n roots (with repetition) by simultaneous Weierstrass iteration.

    Method-independent of the determinant pipeline; used as the oracle.
    Initial guesses sit on a randomly phased circle of Cauchy-bound
    radius; each restart redraws the phases.
    """
    if p.degree < 1:
        raise ValueError("need degree >= 1")
    bits = precision_bits or max(p.precision_bits, 256)
    n = p.degree
    rng = random.Random(seed)
    radius = fujiwara_bound(p)
    with context(bits):
        monic = [c / p.coeffs[0] for c in p.coeffs]
        mp = Polynomial(tuple(monic), bits)
        step_floor = gmpy2.mpfr(2) ** (-(bits - 48))
        for _restart in range(restarts + 1):
            phase0 = rng.random()
            zs = []
            for i in range(n):
                ang = 2 * math.pi * (i + phase0 + 0.3 * rng.random()) / n
                rad = radius * (0.55 + 0.4 * rng.random())
                zs.append(mpc(rad * math.cos(ang), rad * math.sin(ang)))
            for _it in range(max_iter):
                worst_step = gmpy2.mpfr(0)
                for i in range(n):
                    num = evaluate(mp, zs[i], bits)
                    den = mpc(1)
                    for j in range(n):
                        if j != i:
                            den *= zs[i] - zs[j]
                    if den == 0:
                        den = mpc(step_floor)
                    w = num / den
                    zs[i] = zs[i] - w
                    rel = gmpy2.sqrt(gmpy2.norm(w)) / (1 + gmpy2.sqrt(gmpy2.norm(zs[i])))
                    worst_step = max(worst_step, rel)
                if worst_step < step_floor:
                    break
            worst = max(scaled_residual(p, z, 2 * bits) for z in zs)
            if worst < residual_target:
                return [+z for z in zs]
    raise NoConvergence(
        f"simultaneous iteration missed the residual target {residual_target}")


def cluster_roots(values, tol: float = 1e-6) -> list[tuple[mpc, int]]:
    """Greedy clustering of repeated root approximations into (center, count)."""
    pending = [to_mpc(v, 256) for v in values]
    clusters: list[tuple[mpc, int]] = []
    with context(512):
        while pending:
            seedv = pending.pop(0)
            members = [seedv]
            rest = []
            for v in pending:
                if _absf(v - seedv) <= tol * (1.0 + _absf(seedv)):
                    members.append(v)
                else:
                    rest.append(v)
            pending = rest
            center = sum(members, mpc(0)) / len(members)
            clusters.append((center, len(members)))
    clusters.sort(key=lambda cm: (_absf(cm[0]), float(gmpy2.phase(cm[0]))))
    return clusters


def verify_ratio_bounds(roots, mults, side: Side, r: int,
                        trace_points, eps: float = 0.4) -> dict:
    """Check |ratio(k) - reference product| against the theoretical bound.

    trace_points is an iterable of (k, ratio). Returns a report dict with
    the bound parameters and any violations past the threshold.
    """
    bound = theoretical_error_constant(roots, mults, r, side, eps)
    rs, ms = _sorted_by_modulus(list(roots), list(mults), 2 * DEFAULT_PRECISION)
    p = len(rs)
    with context(2 * DEFAULT_PRECISION):
        target = mpc(1)
        idx = range(r) if side is Side.TAYLOR else range(p - r, p)
        for j in idx:
            target *= rs[j]
        checked = 0
        violations = []
        for k, ratio in trace_points:
            if k < bound.k_threshold:
                continue
            err = _absf(to_mpc(ratio, 512) - target)
            limit = bound.taylor_bound(k, r) if side is Side.TAYLOR \
                else bound.laurent_bound(k)
            checked += 1
            if err > limit:
                violations.append((k, err, limit))
        return {
            "constant": bound.constant,
            "decay_ratio": bound.decay_ratio,
            "k_threshold": bound.k_threshold,
            "weight_sum": bound.weight_sum,
            "checked": checked,
            "violations": violations,
        }
