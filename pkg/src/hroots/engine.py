"""The solver: ratio traces, verdicts, root products, ties, multiplicities.

Pipeline: strip zero roots, count distinct roots by structural-zero
probing, build determinant ratio traces from both series ends, classify
each as convergent (geometric decay) or oscillating (modulus tie),
recover roots as successive quotients of the converged products, break
ties with random complex shifts, then solve the power-sum system for
multiplicities and polish.
"""

from __future__ import annotations

import enum
import math
import random
import statistics
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpc

from .errors import (
    ConstantTermZero,
    DegreeZero,
    GapInProducts,
    IllConditionedSystem,
    NonIntegerMultiplicity,
    PrecisionExhausted,
    ResidualCheckFailed,
    ShiftBudgetExhausted,
    TooFewPoints,
)
from .hankel import HankelCell, StructuralZeroStatus, hadamard_det, is_structural_zero
from .poly import (
    Polynomial,
    RootEntry,
    RootSet,
    derivative,
    evaluate,
    fujiwara_bound,
    scaled_residual,
    shift,
    strip_zero_roots,
)
from .precision import context, to_mpc
from .series import CoefficientStream, Side, laurent_coeffs


def _absf(z) -> float:
    """Magnitude of an mpc as a float, inf on overflow."""
    try:
        return float(gmpy2.sqrt(gmpy2.norm(z)))
    except (OverflowError, ValueError):
        return math.inf


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class SolverConfig:
    """Knobs for the solver; defaults match the CLI defaults."""

    precision_bits: int = 256
    k_max: int = 256
    tol: float = 1e-12
    window: int = 8
    max_shifts: int = 5
    shift_seed: int = 0
    residual_tol: float = 1e-12
    guard_bits: int = 16
    oscillation_threshold: float = 0.98
    zero_window: int = 5
    seed_tol: float = 1e-6
    max_precision_bits: int = 4096
    newton_steps: int = 8
    k_step: int = 16
    min_k_oscillation: int = 64

    def __post_init__(self):
        if self.precision_bits < 64:
            raise ValueError("precision_bits must be >= 64")
        if not (0 < self.tol < 1):
            raise ValueError("tol must lie in (0, 1)")
        if self.window < 3:
            raise ValueError("window must be >= 3")
        if self.k_max < self.window + 2:
            raise ValueError("k_max must be >= window + 2")
        if self.max_precision_bits < self.precision_bits:
            self.max_precision_bits = self.precision_bits

    def effective_tol(self) -> float:
        """Trace tolerance used while solving; polish restores full accuracy."""
        return max(self.tol, self.seed_tol)


def _needed_good_bits(tol: float) -> float:
    return max(48.0, -math.log2(tol) + 32.0)


# ---------------------------------------------------------------------------
# ratio traces
# ---------------------------------------------------------------------------

class TraceStatus(enum.Enum):
    CONVERGED = "converged"
    OSCILLATING = "oscillating"
    INCONCLUSIVE = "inconclusive"


@dataclass
class RatioTrace:
    """Sequence of determinant ratios for one (side, r).

    Taylor points are H_{k,r}/H_{k+1,r}; Laurent points use the inverted
    orientation H_{k+1,r}/H_{k,r}, so both tend to a product of r
    extreme-modulus roots. Gaps record k where a needed determinant is a
    structural zero ("zero") or lost to cancellation ("floor").
    """

    side: Side
    r: int
    points: list[tuple[int, mpc]]
    gaps: list[tuple[int, str]] = field(default_factory=list)
    precision_bits: int = 256
    k_max: int = 0

    def diffs(self) -> list[float]:
        """|ratio - previous usable ratio| magnitudes, aligned with points[1:]."""
        vals = [v for _, v in self.points]
        return [_absf(vals[i + 1] - vals[i]) for i in range(len(vals) - 1)]

    def gap_ks(self) -> list[int]:
        return [k for k, _ in self.gaps]

    def floor_gap_ks(self) -> list[int]:
        return [k for k, reason in self.gaps if reason == "floor"]

    @classmethod
    def from_points(cls, side: Side, r: int, points: list[tuple[int, mpc]],
                    precision_bits: int = 256) -> "RatioTrace":
        """Rebuild a trace from (k, ratio) pairs (e.g. parsed CSV rows).

        Missing k values between the first and last point become gaps.
        """
        pts = sorted(points, key=lambda kv: kv[0])
        seen = {k for k, _ in pts}
        gaps: list[tuple[int, str]] = []
        if pts:
            for k in range(pts[0][0], pts[-1][0] + 1):
                if k not in seen:
                    gaps.append((k, "zero"))
        k_max = pts[-1][0] if pts else 0
        return cls(side, r, pts, gaps, precision_bits, k_max)


@dataclass
class TraceVerdict:
    """Limit classification of a ratio trace."""

    status: TraceStatus
    limit: mpc | None = None
    q_estimate: float | None = None
    error_estimate: float = math.inf

    def relative_error(self) -> float:
        if self.limit is None:
            return math.inf
        mag = _absf(self.limit)
        return self.error_estimate / mag if mag > 0 else self.error_estimate


# ---------------------------------------------------------------------------
# workspace: streams and determinant cells cached per precision
# ---------------------------------------------------------------------------

class _Workspace:
    """Per-polynomial caches so traces, probes and retries share cells."""

    def __init__(self, p: Polynomial, config: SolverConfig):
        self.poly = p
        self.config = config
        self._streams: dict[tuple[Side, int], CoefficientStream] = {}
        self._cells: dict[tuple[Side, int, int], dict[int, HankelCell]] = {}

    def stream(self, side: Side, bits: int) -> CoefficientStream:
        key = (side, bits)
        if key not in self._streams:
            self._streams[key] = CoefficientStream(self.poly, side, bits)
        return self._streams[key]

    def cell(self, side: Side, r: int, k: int, bits: int) -> HankelCell:
        key = (side, r, bits)
        row = self._cells.setdefault(key, {})
        if k not in row:
            row[k] = hadamard_det(self.stream(side, bits), k, r)
        return row[k]

    def trace(self, side: Side, r: int, k_max: int, bits: int,
              needed_good_bits: float) -> RatioTrace:
        """Assemble the ratio trace for k = 0..k_max at one precision."""
        points: list[tuple[int, mpc]] = []
        gaps: list[tuple[int, str]] = []
        with context(bits):
            for k in range(k_max + 1):
                lo = self.cell(side, r, k, bits)
                hi = self.cell(side, r, k + 1, bits)
                num, den = (lo, hi) if side is Side.TAYLOR else (hi, lo)
                if den.is_zero:
                    gaps.append((k, "zero"))
                    continue
                if not den.trusted(needed_good_bits):
                    gaps.append((k, "floor"))
                    continue
                if num.is_zero:
                    points.append((k, mpc(0)))
                    continue
                if not num.trusted(needed_good_bits):
                    gaps.append((k, "floor"))
                    continue
                points.append((k, (num.value / den.value).value))
        return RatioTrace(side, r, points, gaps, bits, k_max)


# ---------------------------------------------------------------------------
# public trace building and classification
# ---------------------------------------------------------------------------

def ratio_trace(p: Polynomial, side: Side, r: int, k_max: int,
                config: SolverConfig | None = None) -> RatioTrace:
    """Ratio trace for k = 0..k_max at fixed configured precision.

    Deterministic for a fixed precision; gaps are recorded where the
    needed determinants are structural zeros or cancellation noise.
    """
    config = config or SolverConfig()
    if not 1 <= r <= p.degree:
        raise ValueError(f"order r must be in [1, degree]; got r={r}")
    if side is Side.TAYLOR and p.constant == 0:
        raise ConstantTermZero("Taylor trace needs P(0) != 0")
    ws = _Workspace(p, config)
    return ws.trace(side, r, k_max, config.precision_bits,
                    _needed_good_bits(config.tol))


def classify(trace: RatioTrace, config: SolverConfig | None = None,
             tol: float | None = None) -> TraceVerdict:
    """Converged / Oscillating / Inconclusive verdict on a ratio trace.

    Converged: tail diffs decay at a stable ratio below the oscillation
    threshold and the extrapolated geometric tail is below tolerance;
    the limit is the last point plus d*q/(1-q) (d = last complex diff).
    Oscillating: diffs stay bounded away from zero over the window (or
    the denominator determinant keeps vanishing), the observable
    signature of a modulus tie.
    """
    config = config or SolverConfig()
    tol = tol if tol is not None else config.tol
    w = config.window
    pts = trace.points
    if len(pts) < w:
        raise TooFewPoints(
            f"need {w} usable points, trace has {len(pts)}")

    tail = pts[-w:]
    ks = [k for k, _ in tail]
    vals = [v for _, v in tail]
    with context(trace.precision_bits):
        dv = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
        mags = [_absf(d) for d in dv]
        scale = max(_absf(vals[-1]), 1e-300)

        # recurring zero denominators inside the tail span: no limit there
        span_gaps = [k for k in trace.gap_ks() if ks[0] <= k <= ks[-1]]
        if len(span_gaps) >= 2:
            return TraceVerdict(TraceStatus.OSCILLATING,
                                error_estimate=max(mags, default=0.0))

        # wild swings past double range: noise ratios near a tie
        if not all(math.isfinite(m) for m in mags):
            return TraceVerdict(TraceStatus.OSCILLATING, error_estimate=math.inf)

        if all(m == 0 for m in mags):
            return TraceVerdict(TraceStatus.CONVERGED, vals[-1], None, 0.0)

        plateau = tol * scale
        if max(mags) <= plateau:
            return TraceVerdict(TraceStatus.CONVERGED, vals[-1], None, max(mags))

        ratios = [mags[i + 1] / mags[i] for i in range(len(mags) - 1) if mags[i] > 0]
        if not ratios:
            return TraceVerdict(TraceStatus.INCONCLUSIVE, error_estimate=max(mags))
        q_med = statistics.median(ratios)
        gm = (mags[-1] / mags[0]) ** (1.0 / (len(mags) - 1)) if mags[0] > 0 else 1.0

        # long-window oscillation signatures: quasi-periodic diffs keep a
        # flat envelope, and pole spikes (near-vanishing denominators)
        # recur; medians resist the spikes' wildly varying heights
        all_diffs = trace.diffs()
        envelope_flat = False
        wild_spikes = False
        if len(all_diffs) >= 2 * w:
            window_diffs = [d for d in all_diffs[-min(len(all_diffs), 64):]
                            if math.isfinite(d)]
            half = len(window_diffs) // 2
            if half >= 2:
                early = statistics.median(window_diffs[:half])
                late = statistics.median(window_diffs[half:])
                envelope_flat = early > 0 and late >= 0.25 * early \
                    and late > 8 * plateau
                recent = all_diffs[-2 * w:]
                wild_spikes = max(recent) > 2 * scale and late > 8 * plateau

        osc = config.oscillation_threshold
        non_decaying = q_med >= osc or gm >= osc or envelope_flat or wild_spikes
        if non_decaying and max(mags) > 8 * plateau:
            return TraceVerdict(TraceStatus.OSCILLATING, None, min(q_med, 2.0),
                                error_estimate=max(mags))

        # decaying: extrapolate the geometric tail
        q_hat = min(max(q_med, gm), 0.995)
        if q_hat <= 0:
            q_hat = gm if gm > 0 else 0.5
        err = max(mags[-2:]) * q_hat / (1.0 - q_hat)
        half_decay = max(mags[:max(1, len(mags) // 2)]) >= max(mags[len(mags) // 2:])
        if q_med < osc and err <= plateau and half_decay:
            d_last = dv[-1]
            limit = vals[-1] + d_last * gmpy2.mpfr(q_hat / (1.0 - q_hat))
            return TraceVerdict(TraceStatus.CONVERGED, limit, q_med, err)
        return TraceVerdict(TraceStatus.INCONCLUSIVE, None, q_med, err)


def trusted_cells(p: Polynomial, side: Side, r: int, k_lo: int, k_hi: int,
                  config: SolverConfig | None = None,
                  need_bits: float = 96.0,
                  raise_on_failure: bool = True) -> list[HankelCell]:
    """Determinant cells for a k range, escalating precision until each
    cell is either exactly zero or carries `need_bits` of trusted mantissa.

    This is the precision-escalation policy in isolation: cancellation in
    the cells deepens linearly in k, so no fixed precision serves all k.
    With raise_on_failure=False, cells that stay fully cancelled at the
    precision cap (values that are zero to every tested precision) are
    returned as they are instead of raising.
    """
    config = config or SolverConfig()
    bits = config.precision_bits
    while True:
        ws = _Workspace(p, config)
        cells = [ws.cell(side, r, k, bits) for k in range(k_lo, k_hi + 1)]
        bad = [c for c in cells if not (c.is_zero or c.trusted(need_bits))]
        if not bad:
            return cells
        if bits * 2 > config.max_precision_bits:
            if raise_on_failure:
                raise PrecisionExhausted(
                    f"cells at k={bad[0].k}, r={r} untrusted at "
                    f"{config.max_precision_bits} bits", k=bad[0].k, r=r)
            return cells
        bits *= 2


def trusted_ratios(p: Polynomial, side: Side, r: int, k_lo: int, k_hi: int,
                   config: SolverConfig | None = None,
                   need_bits: float = 96.0) -> list[mpc | None]:
    """Determinant ratios for k in [k_lo, k_hi] with escalated precision.

    Entries are None where the denominator vanishes. Taylor ratios are
    H_k/H_{k+1}; Laurent ratios are H_{k+1}/H_k.
    """
    cells = trusted_cells(p, side, r, k_lo, k_hi + 1, config, need_bits)
    out: list[mpc | None] = []
    with context(cells[0].precision_bits):
        for i in range(len(cells) - 1):
            lo, hi = cells[i], cells[i + 1]
            num, den = (lo, hi) if side is Side.TAYLOR else (hi, lo)
            if den.is_zero:
                out.append(None)
            else:
                out.append((num.value / den.value).value)
    return out


def fit_decay_ratio(trace: RatioTrace, k_lo: int, k_hi: int) -> float:
    """Median of consecutive diff-magnitude ratios over a k range.

    Estimates the geometric rate q of the trace's error decay.
    """
    pts = [(k, v) for k, v in trace.points if k_lo <= k <= k_hi]
    if len(pts) < 4:
        raise TooFewPoints("need at least 4 points to fit a decay ratio")
    vals = [v for _, v in pts]
    with context(trace.precision_bits):
        mags = [_absf(vals[i + 1] - vals[i]) for i in range(len(vals) - 1)]
    ratios = [mags[i + 1] / mags[i] for i in range(len(mags) - 1) if mags[i] > 0]
    if not ratios:
        raise TooFewPoints("diffs vanished; no decay ratio to fit")
    return float(statistics.median(ratios))


# ---------------------------------------------------------------------------
# distinct-root count via structural zeros
# ---------------------------------------------------------------------------

def count_distinct_roots(p: Polynomial, config: SolverConfig | None = None,
                         _ws: _Workspace | None = None) -> int:
    """Number of distinct roots: the largest order with nonvanishing cells.

    Probes determinant orders from the degree downward on the Laurent
    stream; orders above the count are structurally zero. Escalates
    precision while a window stays inconclusive.
    """
    config = config or SolverConfig()
    if p.degree < 1:
        raise DegreeZero("need degree >= 1")
    if p.constant == 0:
        raise ConstantTermZero("strip zero roots before counting")
    ws = _ws or _Workspace(p, config)
    window = config.zero_window
    for r_test in range(p.degree, 0, -1):
        bits = config.precision_bits
        while True:
            cells = [ws.cell(Side.LAURENT, r_test, k, bits) for k in range(window)]
            status = is_structural_zero(cells, config.guard_bits, window)
            if status is StructuralZeroStatus.INCONCLUSIVE \
                    and bits * 2 <= config.max_precision_bits:
                bits *= 2
                continue
            break
        if status is StructuralZeroStatus.NONZERO:
            return r_test
        if status is StructuralZeroStatus.INCONCLUSIVE:
            raise PrecisionExhausted(
                f"cannot certify order {r_test} window at "
                f"{config.max_precision_bits} bits", r=r_test)
    raise PrecisionExhausted("every probe window vanished", r=0)


# ---------------------------------------------------------------------------
# products of extreme-modulus roots
# ---------------------------------------------------------------------------

def _verdict_with_policy(ws: _Workspace, side: Side, r: int,
                         config: SolverConfig,
                         tol: float) -> tuple[RatioTrace, TraceVerdict]:
    """Schedule a trace in k windows, escalating precision when needed."""
    bits = config.precision_bits
    ngb = _needed_good_bits(tol)
    k_hi = 0
    trace = None
    verdict = TraceVerdict(TraceStatus.INCONCLUSIVE)
    while True:
        k_hi = min(k_hi + config.k_step, config.k_max)
        trace = ws.trace(side, r, k_hi, bits, ngb)
        if len(trace.points) >= config.window:
            verdict = classify(trace, config, tol)
            if verdict.status is TraceStatus.CONVERGED:
                return trace, verdict
            if verdict.status is TraceStatus.OSCILLATING and \
                    k_hi >= min(config.min_k_oscillation, config.k_max):
                return trace, verdict
        # cancellation ate the recent cells: rerun deeper mantissa
        recent_floor = [k for k in trace.floor_gap_ks() if k > k_hi - config.k_step]
        if recent_floor and bits * 2 <= config.max_precision_bits:
            bits *= 2
            k_hi = max(0, k_hi - config.k_step)
            continue
        if k_hi >= config.k_max:
            if len(trace.points) < config.window and trace.floor_gap_ks():
                raise PrecisionExhausted(
                    f"trace {side.value} r={r} unusable at "
                    f"{config.max_precision_bits} bits",
                    k=trace.floor_gap_ks()[0], r=r)
            return trace, verdict


def _product_traces(ws: _Workspace, side: Side, p_count: int,
                    config: SolverConfig, tol: float,
                    ) -> list[tuple[int, RatioTrace, TraceVerdict]]:
    out = []
    for r in range(1, p_count + 1):
        trace, verdict = _verdict_with_policy(ws, side, r, config, tol)
        out.append((r, trace, verdict))
    return out


def products_from_traces(p: Polynomial, side: Side, p_count: int,
                         config: SolverConfig | None = None,
                         tol: float | None = None,
                         _ws: _Workspace | None = None,
                         ) -> list[tuple[int, TraceVerdict]]:
    """Verdicts for the products of r extreme-modulus roots, r = 1..p.

    Taylor verdicts target z_1...z_r (smallest moduli first), Laurent
    verdicts target z_{p-r+1}...z_p (largest first). The r = p entry is
    the exactly constant ratio and always converges.
    """
    config = config or SolverConfig()
    tol = tol if tol is not None else config.tol
    ws = _ws or _Workspace(p, config)
    return [(r, verdict)
            for r, _trace, verdict in _product_traces(ws, side, p_count, config, tol)]


@dataclass
class RootEstimate:
    """A root candidate extracted from consecutive product quotients."""

    root: mpc
    error: float
    source: str = ""


def roots_from_products(products: list[tuple[int, TraceVerdict]],
                        require_complete: bool = False,
                        ) -> list[RootEstimate | None]:
    """Successive quotients z_r = Pi_r / Pi_{r-1} with propagated error.

    Entry i (order r = i+1) is None when either needed product did not
    converge; with require_complete=True that raises GapInProducts.
    """
    out: list[RootEstimate | None] = []
    prev_limit: mpc | None = to_mpc(1)
    prev_rel = 0.0
    bits = max((max(v.limit.precision) if isinstance(v.limit, mpc) else 0
                for _, v in products), default=0) or 256
    with context(2 * bits):
        for r, verdict in products:
            if verdict.status is not TraceStatus.CONVERGED or prev_limit is None:
                if require_complete:
                    raise GapInProducts(f"product at r={r} did not converge")
                out.append(None)
                prev_limit = verdict.limit if verdict.status is TraceStatus.CONVERGED else None
                prev_rel = verdict.relative_error() if prev_limit is not None else 0.0
                continue
            limit = verdict.limit
            root = limit / prev_limit
            rel = verdict.relative_error() + prev_rel
            out.append(RootEstimate(root, _absf(root) * rel))
            prev_limit = limit
            prev_rel = verdict.relative_error()
    return out


# ---------------------------------------------------------------------------
# multiplicities from power sums
# ---------------------------------------------------------------------------

def _gauss_solve(a: list[list[mpc]], rhs: list[mpc]) -> list[mpc]:
    """In-place Gaussian elimination with partial pivoting (small systems)."""
    n = len(a)
    m = [row[:] + [rhs[i]] for i, row in enumerate(a)]
    bits = gmpy2.get_context().precision
    top = max((_absf(m[i][j]) for i in range(n) for j in range(n)), default=0.0)
    floor = top * 2.0 ** (-(bits // 2)) if top > 0 else 0.0
    for col in range(n):
        piv = max(range(col, n), key=lambda i: _absf(m[i][col]))
        if _absf(m[piv][col]) <= floor:
            raise IllConditionedSystem(
                f"pivot collapsed at column {col}; roots nearly coincide?")
        m[col], m[piv] = m[piv], m[col]
        for i in range(col + 1, n):
            f = m[i][col] / m[col][col]
            for j in range(col, n + 1):
                m[i][j] = m[i][j] - f * m[col][j]
    x = [mpc(0)] * n
    for i in range(n - 1, -1, -1):
        acc = m[i][n]
        for j in range(i + 1, n):
            acc -= m[i][j] * x[j]
        x[i] = acc / m[i][i]
    return x


def _power_sum_solve(p: Polynomial, roots: list[mpc], bits: int) -> list[mpc]:
    """Solve sum_j m_j z_j^k = b_k for k = 0..p-1 (transposed Vandermonde)."""
    count = len(roots)
    with context(bits):
        rs = [to_mpc(z, bits) for z in roots]
        b = list(laurent_coeffs(p, count, bits))
        rows = [[rs[j] ** k for j in range(count)] for k in range(count)]
        return _gauss_solve(rows, b)


def multiplicities(p: Polynomial, roots, config: SolverConfig | None = None,
                   rounding_tol: float = 0.1) -> list[int]:
    """Integer multiplicities of the given distinct roots of P.

    Solves the p x p power-sum system, rounds, and verifies the rounding
    residual and that the multiplicities sum to the degree.
    """
    config = config or SolverConfig()
    roots = list(roots)
    if not roots:
        raise ValueError("need at least one root")
    bits = max(2 * config.precision_bits, 128)
    raw = _power_sum_solve(p, roots, bits)
    out: list[int] = []
    for j, v in enumerate(raw):
        re, im = float(v.real), float(v.imag)
        candidate = round(re)
        if abs(im) > rounding_tol or abs(re - candidate) > rounding_tol or candidate < 1:
            raise NonIntegerMultiplicity(
                f"root {j} solved to {re:+.6f}{im:+.6f}i, not a positive integer "
                f"within {rounding_tol}")
        out.append(int(candidate))
    if sum(out) != p.degree:
        raise NonIntegerMultiplicity(
            f"multiplicities {out} sum to {sum(out)}, degree is {p.degree}")
    return out


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------

@dataclass
class _CoreResult:
    p: int
    complete: bool
    roots: list[mpc]
    errors: list[float]
    sources: list[str]
    resolved: list[tuple[mpc, float]]
    missing: list[int]


@dataclass
class _ProductValue:
    """A product of extreme-modulus roots: converged limit or window band."""

    value: mpc
    rel_error: float
    hard: bool  # True for converged verdicts, False for band centers


def _product_values(side_traces: list[tuple[int, RatioTrace, TraceVerdict]],
                    bits: int) -> list[_ProductValue | None]:
    """Index r = 0..p; non-converged traces contribute coarse band centers.

    A band center is the mean of the last window of points: useless under
    a true modulus tie, but a workable seed when convergence is merely
    slow; downstream validation decides which.
    """
    out: list[_ProductValue | None] = [_ProductValue(to_mpc(1, bits), 0.0, True)]
    with context(2 * bits):
        for _r, trace, verdict in side_traces:
            if verdict.status is TraceStatus.CONVERGED and verdict.limit is not None:
                out.append(_ProductValue(verdict.limit, verdict.relative_error(), True))
                continue
            pts = [v for _, v in trace.points[-8:]]
            if len(pts) < 2:
                out.append(None)
                continue
            center = sum(pts, mpc(0)) / len(pts)
            mag = _absf(center)
            if mag == 0:
                out.append(None)
                continue
            band = max(_absf(v - center) for v in pts)
            out.append(_ProductValue(center, band / mag, False))
    return out


def _position_routes(pos: int, p_count: int,
                     t_val: list[_ProductValue | None],
                     l_val: list[_ProductValue | None],
                     total: _ProductValue | None):
    """Candidate quotient routes for the root at modulus position pos.

    Yields (relative_error, root, source, hard). Direct routes divide
    consecutive products of one side; the mixed route divides the exact
    full product by the resolved products below (Taylor) and above
    (Laurent) the position.
    """
    tiny = 1e-280

    def emit(num: _ProductValue, den_parts: list[_ProductValue], src: str):
        denom = den_parts[0].value
        for part in den_parts[1:]:
            denom = denom * part.value
        if _absf(denom) <= tiny:
            return None
        root = num.value / denom
        rel = num.rel_error + sum(p.rel_error for p in den_parts)
        hard = num.hard and all(p.hard for p in den_parts)
        return rel, root, src, hard

    a, b = t_val[pos], t_val[pos - 1]
    if a is not None and b is not None:
        route = emit(a, [b], f"taylor:r={pos}")
        if route:
            yield route
    r = p_count - pos + 1
    a, b = l_val[r], l_val[r - 1]
    if a is not None and b is not None:
        route = emit(a, [b], f"laurent:r={r}")
        if route:
            yield route
    if total is not None:
        b, c = t_val[pos - 1], l_val[p_count - pos]
        if b is not None and c is not None:
            route = emit(total, [b, c], f"mixed:r={pos}")
            if route:
                yield route


def _solve_core(q: Polynomial, config: SolverConfig) -> _CoreResult:
    """Root estimates of a zero-root-free polynomial, positions 1..p."""
    n = q.degree
    bits = config.precision_bits
    if n == 1:
        with context(2 * bits):
            root = -q.coeffs[1] / q.coeffs[0]
        return _CoreResult(1, True, [root], [0.0], ["direct"],
                           [(root, 0.0)], [])
    ws = _Workspace(q, config)
    p_count = count_distinct_roots(q, config, _ws=ws)
    if p_count == 1:
        # single distinct root: the mean of the roots is the root itself
        with context(2 * bits):
            root = ws.stream(Side.LAURENT, bits).get(1) / n
        return _CoreResult(1, True, [root], [0.0], ["power-sum"],
                           [(root, 0.0)], [])
    eff_tol = config.effective_tol()
    taylor = _product_traces(ws, Side.TAYLOR, p_count, config, eff_tol)
    laurent = _product_traces(ws, Side.LAURENT, p_count, config, eff_tol)
    t_val = _product_values(taylor, bits)
    l_val = _product_values(laurent, bits)

    roots: list[mpc] = []
    errors: list[float] = []
    sources: list[str] = []
    resolved: list[tuple[mpc, float]] = []
    missing: list[int] = []
    with context(2 * bits):
        total = min((v for v in (t_val[p_count], l_val[p_count])
                     if v is not None and v.hard),
                    key=lambda v: v.rel_error, default=None)
        for pos in range(1, p_count + 1):
            hard: list[tuple[float, mpc, str]] = []
            coarse: list[tuple[float, mpc, str]] = []
            for rel, root, src, is_hard in _position_routes(
                    pos, p_count, t_val, l_val, total):
                bucket = hard if is_hard else coarse
                bucket.append((_absf(root) * rel, root, src))
            choices = hard or coarse
            if not choices:
                missing.append(pos)
                continue
            choices.sort(key=lambda c: (c[0], c[2]))
            err, root, src = choices[0]
            roots.append(root)
            errors.append(err)
            sources.append(src)
            if hard:
                resolved.append((root, err))
    return _CoreResult(p_count, not missing, roots, errors, sources,
                       resolved, missing)


def _sample_shift(rng: random.Random, q: Polynomial, config: SolverConfig) -> mpc:
    """Random complex shift from a quarter root-bound disk.

    Both components are kept away from zero: a purely real shift can
    never separate the moduli of a conjugate pair. The radius uses the
    Fujiwara root bound; a looser bound (Cauchy) can exceed the root
    scale by orders of magnitude, and a shift that large leaves every
    pair of shifted roots nearly tied in modulus.
    """
    rho = fujiwara_bound(q)
    for _ in range(128):
        radius = 0.25 * rho * math.sqrt(rng.random())
        angle = 2.0 * math.pi * rng.random()
        re = radius * math.cos(angle)
        im = radius * math.sin(angle)
        # components well away from the axes, or the moduli barely separate
        if abs(re) < rho / 64.0 or abs(im) < rho / 64.0:
            continue
        s = to_mpc(complex(re, im), config.precision_bits)
        if scaled_residual(q, s) < 1e-20:  # suspiciously close to a root
            continue
        return s
    raise ShiftBudgetExhausted("could not sample a usable shift")


def _newton_polish(q: Polynomial, dq: Polynomial, z: mpc, mult: int,
                   steps: int, bits: int) -> mpc:
    """Multiplicity-aware Newton steps; keeps the best residual seen."""
    with context(bits):
        best = to_mpc(z, bits)
        best_mag = gmpy2.norm(evaluate(q, best, bits))
        cur = best
        for _ in range(steps):
            f = evaluate(q, cur, bits)
            if f == 0:
                return cur
            df = evaluate(dq, cur, bits)
            if df == 0:
                break
            cur = cur - mult * f / df
            mag = gmpy2.norm(evaluate(q, cur, bits))
            if mag < best_mag:
                best, best_mag = cur, mag
            else:
                break
        return best


def _match_reference(reference: list[tuple[mpc, float]],
                     roots: list[mpc]) -> bool:
    """Shifted-frame results must reproduce the solidly resolved roots.

    Only references with tight error estimates can veto; coarse ones
    cannot distinguish geometries and are skipped.
    """
    for ref, err in reference:
        scale = 1.0 + _absf(ref)
        if err > 1e-6 * scale:
            continue
        tol = max(1e-3 * scale, 1e3 * err)
        if min((_absf(ref - z) for z in roots), default=math.inf) > tol:
            return False
    return True


def _finalize(q: Polynomial, original: Polynomial,
              roots: list[mpc], sources: list[str],
              config: SolverConfig) -> list[RootEntry]:
    """Multiplicities, polish, separation and residual checks."""
    bits = 2 * config.precision_bits
    dq = derivative(q)

    # tentative multiplicities from the raw estimates (loose rounding)
    raw = _power_sum_solve(q, [to_mpc(z, bits) for z in roots], bits)
    mults: list[int] = []
    for v in raw:
        re, im = float(v.real), float(v.imag)
        cand = round(re)
        if abs(im) > 0.45 or abs(re - cand) > 0.45 or cand < 1:
            raise NonIntegerMultiplicity(
                f"tentative multiplicity {re:+.4f}{im:+.4f}i not near a positive integer")
        mults.append(int(cand))
    if sum(mults) != q.degree:
        raise NonIntegerMultiplicity(
            f"tentative multiplicities {mults} do not sum to degree {q.degree}")

    polished = [_newton_polish(q, dq, z, m, config.newton_steps, bits)
                for z, m in zip(roots, mults)]

    # strict multiplicity solve on the polished roots
    strict = multiplicities(q, polished, config)
    if strict != mults:
        polished = [_newton_polish(q, dq, z, m, config.newton_steps, bits)
                    for z, m in zip(polished, strict)]
        strict = multiplicities(q, polished, config)

    # distinctness: collapsed estimates mean a wrong geometry
    for i in range(len(polished)):
        for j in range(i + 1, len(polished)):
            sep = _absf(polished[i] - polished[j])
            scale = 1.0 + max(_absf(polished[i]), _absf(polished[j]))
            if sep <= 1e-9 * scale:
                raise IllConditionedSystem(
                    f"roots {i} and {j} collapsed to the same value")

    entries: list[RootEntry] = []
    for z, m, src in zip(polished, strict, sources):
        res = scaled_residual(original, z)
        if not res < config.residual_tol:
            raise ResidualCheckFailed(
                f"residual {res:.3e} at root {complex(z)} exceeds "
                f"{config.residual_tol}")
        entries.append(RootEntry(z, m, res, src))
    entries.sort(key=lambda e: (_absf(e.root), float(gmpy2.phase(e.root))))
    return entries


def solve(p: Polynomial, config: SolverConfig | None = None) -> RootSet:
    """All roots of P with multiplicities, residuals and provenance.

    Runs the full pipeline; when a modulus tie (or stubborn near-tie)
    blocks some product of roots, retries on randomly shifted copies of
    the polynomial and maps the roots back.
    """
    config = config or SolverConfig()
    if p.degree < 1:
        raise DegreeZero("cannot solve a constant polynomial")
    q, zero_mult = strip_zero_roots(p)
    if q.degree == 0:
        return RootSet([], zero_mult, 0)

    rng = random.Random(config.shift_seed)
    reference: list[tuple[mpc, float]] = []
    failures: list[Exception] = []
    shifts_used = 0

    for attempt in range(config.max_shifts + 1):
        if attempt == 0:
            target, back = q, None
        else:
            back = _sample_shift(rng, q, config)
            target = shift(q, back)
            shifts_used += 1
        try:
            core = _solve_core(target, config)
        except (PrecisionExhausted, IllConditionedSystem, NonIntegerMultiplicity) as exc:
            failures.append(exc)
            continue
        if attempt == 0 and core.resolved:
            reference = core.resolved
        if not core.complete:
            failures.append(GapInProducts(
                f"positions {core.missing} unresolved (modulus ties)"))
            continue
        if back is None:
            mapped = core.roots
        else:
            with context(2 * config.precision_bits):
                mapped = [z + back for z in core.roots]
        sources = core.sources if back is None else \
            [f"shift+{s}" for s in core.sources]
        try:
            entries = _finalize(q, p, mapped, sources, config)
        except (NonIntegerMultiplicity, IllConditionedSystem,
                ResidualCheckFailed) as exc:
            failures.append(exc)
            continue
        if back is not None and reference and \
                not _match_reference(reference, [e.root for e in entries]):
            failures.append(GapInProducts(
                "shifted solution inconsistent with resolved roots"))
            continue
        return RootSet(entries, zero_mult, shifts_used)

    last = failures[-1] if failures else None
    if isinstance(last, ResidualCheckFailed):
        raise last
    raise ShiftBudgetExhausted(
        f"no clean solution after {shifts_used} shifts "
        f"(last failure: {last})") from last
