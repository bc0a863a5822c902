"""Ratio traces, verdicts, root counting, multiplicities and solve."""

from __future__ import annotations

from fractions import Fraction

import pytest

from hroots.engine import (
    RatioTrace,
    SolverConfig,
    TraceStatus,
    classify,
    count_distinct_roots,
    fit_decay_ratio,
    multiplicities,
    products_from_traces,
    ratio_trace,
    roots_from_products,
    solve,
    trusted_cells,
    trusted_ratios,
)
from hroots.errors import (
    DegreeZero,
    GapInProducts,
    IllConditionedSystem,
    NonIntegerMultiplicity,
    ShiftBudgetExhausted,
    TooFewPoints,
)
from hroots.poly import evaluate, from_roots, make_polynomial, shift
from hroots.series import Side

from conftest import absf, frac_to_mpc, rel_diff


class TestRatioTrace:
    def test_taylor_r1_values(self, quad):
        tr = ratio_trace(quad, Side.TAYLOR, 1, 3)
        got = [(k, v) for k, v in tr.points]
        assert [k for k, _ in got] == [0, 1, 2, 3]
        for (k, v), want in zip(got, [Fraction(6, 5), Fraction(10, 9),
                                      Fraction(18, 17), Fraction(34, 33)]):
            assert rel_diff(v, want) < 1e-70

    def test_taylor_r2_constant_product(self, quad):
        tr = ratio_trace(quad, Side.TAYLOR, 2, 12)
        assert len(tr.points) == 13
        assert all(rel_diff(v, 2) < 1e-60 for _, v in tr.points)

    def test_laurent_r1_values(self, quad):
        tr = ratio_trace(quad, Side.LAURENT, 1, 3)
        for (k, v), want in zip(tr.points, [Fraction(3, 2), Fraction(5, 3),
                                            Fraction(9, 5), Fraction(17, 9)]):
            assert rel_diff(v, want) < 1e-70

    def test_tie_trace_has_gaps(self, pair_tie):
        tr = ratio_trace(pair_tie, Side.TAYLOR, 1, 64)
        assert tr.gap_ks()  # zero denominators recur
        assert all(complex(v) == 0 for _, v in tr.points)

    def test_r_out_of_range(self, quad):
        with pytest.raises(ValueError):
            ratio_trace(quad, Side.TAYLOR, 3, 20)

    def test_from_points_round_trip(self, quad):
        tr = ratio_trace(quad, Side.TAYLOR, 1, 30)
        rebuilt = RatioTrace.from_points(Side.TAYLOR, 1, tr.points,
                                         tr.precision_bits)
        assert rebuilt.points == tr.points
        assert rebuilt.gap_ks() == []


class TestClassify:
    def test_converged_to_smallest_root(self, quad):
        tr = ratio_trace(quad, Side.TAYLOR, 1, 40)
        v = classify(tr)
        assert v.status is TraceStatus.CONVERGED
        assert absf(v.limit - 1) < 1e-9
        assert abs(v.q_estimate - 0.5) <= 0.15 * 0.5
        assert v.error_estimate < 1e-12

    def test_constant_trace_zero_error(self):
        pts = [(k, frac_to_mpc(Fraction(2), 256)) for k in range(12)]
        tr = RatioTrace.from_points(Side.TAYLOR, 2, pts, 256)
        v = classify(tr)
        assert v.status is TraceStatus.CONVERGED
        assert complex(v.limit) == 2
        assert v.error_estimate == 0.0

    def test_tie_is_oscillating(self, pair_tie):
        tr = ratio_trace(pair_tie, Side.TAYLOR, 1, 64)
        assert classify(tr).status is TraceStatus.OSCILLATING

    def test_too_few_points(self, quad):
        tr = ratio_trace(quad, Side.TAYLOR, 1, 4)
        with pytest.raises(TooFewPoints):
            classify(tr)

    def test_fit_decay_ratio(self, quad):
        tr = ratio_trace(quad, Side.TAYLOR, 1, 40)
        q = fit_decay_ratio(tr, 8, 40)
        assert abs(q - 0.5) < 0.05


class TestCountDistinctRoots:
    @pytest.mark.parametrize("roots,expected", [
        ([(1, 1), (2, 1)], 2),
        ([(1, 2), (3, 1)], 2),
        ([(5, 3)], 1),
        ([(1, 1), (-1, 1)], 2),
        ([(2, 1), (-2, 1), (3, 2), (complex(1, 1), 1)], 4),
    ])
    def test_counts(self, roots, expected):
        p = from_roots(roots)
        assert count_distinct_roots(p) == expected

    def test_degree_matches_simple_case(self, quad):
        assert count_distinct_roots(quad) == 2


class TestProductsAndQuotients:
    def test_three_simple_roots_taylor(self):
        p = from_roots([(1, 1), (2, 1), (3, 1)])
        prods = products_from_traces(p, Side.TAYLOR, 3)
        assert [r for r, _ in prods] == [1, 2, 3]
        limits = [v.limit for _, v in prods]
        for limit, want in zip(limits, [1, 2, 6]):
            assert rel_diff(limit, want) < 1e-9
        assert prods[-1][1].error_estimate < 1e-40  # r = p ratio is exact

    def test_three_simple_roots_laurent(self):
        p = from_roots([(1, 1), (2, 1), (3, 1)])
        prods = products_from_traces(p, Side.LAURENT, 3)
        for (_, v), want in zip(prods, [3, 6, 6]):
            assert v.status is TraceStatus.CONVERGED
            assert rel_diff(v.limit, want) < 1e-9

    def test_modulus_tie_blocks_only_tied_order(self):
        # (z^2 - z + 1)(z - 2): two roots exactly on the unit circle, one at 2
        p = make_polynomial([1, -3, 3, -2])
        prods = products_from_traces(p, Side.TAYLOR, 3)
        assert prods[0][1].status is TraceStatus.OSCILLATING
        assert prods[1][1].status is TraceStatus.CONVERGED
        assert rel_diff(prods[1][1].limit, 1) < 1e-9
        assert prods[2][1].status is TraceStatus.CONVERGED
        assert rel_diff(prods[2][1].limit, 2) < 1e-20

    def test_quotients(self):
        p = from_roots([(1, 1), (2, 1), (3, 1)])
        prods = products_from_traces(p, Side.TAYLOR, 3)
        ests = roots_from_products(prods)
        for est, want in zip(ests, [1, 2, 3]):
            assert est is not None
            assert rel_diff(est.root, want) < 1e-8
            assert est.error < 1e-6

    def test_laurent_quotients_descend(self):
        p = from_roots([(1, 1), (2, 1), (3, 1)])
        prods = products_from_traces(p, Side.LAURENT, 3)
        ests = roots_from_products(prods)
        for est, want in zip(ests, [3, 2, 1]):
            assert rel_diff(est.root, want) < 1e-8

    def test_gap_raises_when_complete_required(self):
        p = make_polynomial([1, -3, 3, -2])
        prods = products_from_traces(p, Side.TAYLOR, 3)
        ests = roots_from_products(prods)
        assert ests[0] is None
        with pytest.raises(GapInProducts):
            roots_from_products(prods, require_complete=True)


class TestMultiplicities:
    def test_double_root(self):
        p = from_roots([(1, 2), (3, 1)])
        assert multiplicities(p, [1, 3]) == [2, 1]

    def test_simple_roots(self, quad):
        assert multiplicities(quad, [1, 2]) == [1, 1]

    def test_triple_root(self):
        p = from_roots([(5, 3)])
        assert multiplicities(p, [5]) == [3]

    def test_wrong_roots_rejected(self, quad):
        with pytest.raises(NonIntegerMultiplicity):
            multiplicities(quad, [1.5, 2.7])

    def test_duplicate_roots_ill_conditioned(self, quad):
        with pytest.raises((IllConditionedSystem, NonIntegerMultiplicity)):
            multiplicities(quad, [1, 1])


class TestSolve:
    def test_quad(self, quad):
        rs = solve(quad)
        roots = [complex(e.root) for e in rs.entries]
        assert len(roots) == 2
        assert abs(roots[0] - 1) < 1e-12 and abs(roots[1] - 2) < 1e-12
        assert [e.multiplicity for e in rs.entries] == [1, 1]
        assert rs.zero_multiplicity == 0

    def test_pair_tie_needs_shift(self, pair_tie):
        rs = solve(pair_tie)
        assert rs.shifts_used >= 1
        roots = sorted(complex(e.root).real for e in rs.entries)
        assert abs(roots[0] + 1) < 1e-12 and abs(roots[1] - 1) < 1e-12
        assert all(e.residual < 1e-12 for e in rs.entries)

    def test_conjugate_pair(self):
        rs = solve(make_polynomial([1, 0, 1]))
        got = sorted((complex(e.root) for e in rs.entries), key=lambda z: z.imag)
        assert abs(got[0] + 1j) < 1e-12 and abs(got[1] - 1j) < 1e-12

    def test_multiple_root(self):
        rs = solve(from_roots([(1, 2), (3, 1)]))
        by_mult = sorted(rs.entries, key=lambda e: -e.multiplicity)
        assert by_mult[0].multiplicity == 2
        assert abs(complex(by_mult[0].root) - 1) < 1e-12
        assert by_mult[1].multiplicity == 1
        assert abs(complex(by_mult[1].root) - 3) < 1e-12

    def test_zero_roots_stripped(self):
        rs = solve(make_polynomial([1, -1, 0, 0]))
        assert rs.zero_multiplicity == 2
        assert len(rs.entries) == 1
        assert abs(complex(rs.entries[0].root) - 1) < 1e-12
        assert rs.total_multiplicity() == 3

    def test_pure_power(self):
        rs = solve(make_polynomial([2, 0, 0]))
        assert rs.zero_multiplicity == 2
        assert rs.entries == []

    def test_zero_root_combined_with_tie(self):
        rs = solve(make_polynomial([1, 0, -1, 0]))  # z(z-1)(z+1)
        assert rs.zero_multiplicity == 1
        assert rs.shifts_used >= 1
        got = sorted(complex(e.root).real for e in rs.entries)
        assert abs(got[0] + 1) < 1e-12 and abs(got[1] - 1) < 1e-12

    def test_linear(self):
        rs = solve(make_polynomial([2, -5]))
        assert abs(complex(rs.entries[0].root) - 2.5) < 1e-15

    def test_degree_zero_rejected(self):
        with pytest.raises(DegreeZero):
            solve(make_polynomial([3]))

    def test_totality_invariant(self):
        for roots in ([(2, 2), (-3, 1)], [(1, 1), (2, 1), (4, 1)],
                      [(complex(1, 1), 1), (complex(1, -1), 1), (-2, 1)]):
            p = from_roots(roots)
            rs = solve(p)
            assert rs.total_multiplicity() == p.degree
            for e in rs.entries:
                assert e.residual < 1e-12

    def test_shift_budget_exhausted(self, pair_tie):
        with pytest.raises(ShiftBudgetExhausted):
            solve(pair_tie, SolverConfig(max_shifts=0))

    def test_leading_coefficient_scaling(self):
        # P'/P and hence the whole pipeline ignores an overall constant
        base = solve(from_roots([(1, 1), (2, 1), (4, 1)]))
        scaled = solve(from_roots([(1, 1), (2, 1), (4, 1)], a0=complex(0, 3)))
        for a, b in zip(base.entries, scaled.entries):
            assert absf(a.root - b.root) < 1e-20
            assert a.multiplicity == b.multiplicity

    def test_shift_invariance_of_answer(self):
        p = from_roots([(1, 1), (2, 1), (4, 1)])
        direct = solve(p)
        s = complex(0.3, 0.7)
        shifted = solve(shift(p, s))
        mapped = sorted((complex(e.root) + s for e in shifted.entries),
                        key=lambda z: (abs(z), z.real))
        want = sorted((complex(e.root) for e in direct.entries),
                      key=lambda z: (abs(z), z.real))
        assert all(abs(a - b) < 1e-9 for a, b in zip(mapped, want))

    def test_determinism(self, pair_tie):
        a = solve(pair_tie, SolverConfig(shift_seed=7))
        b = solve(pair_tie, SolverConfig(shift_seed=7))
        assert [(str(e.root), e.multiplicity) for e in a.entries] == \
               [(str(e.root), e.multiplicity) for e in b.entries]
        assert a.shifts_used == b.shifts_used

    def test_residuals_evaluated_against_input(self):
        p = from_roots([(complex(2, 1), 1), (complex(-1, 3), 2)])
        rs = solve(p)
        for e in rs.entries:
            assert absf(evaluate(p, e.root)) < 1e-30

    @pytest.mark.parametrize("roots", [
        [(2, 3), (-1, 2)],
        [(5, 4)],
        [(complex(1, 2), 2), (complex(1, -2), 2), (3, 1)],  # tied double pair
        [(-7, 3), (2, 2), (9, 1)],
    ])
    def test_multiple_roots_end_to_end(self, roots):
        rs = solve(from_roots(roots))
        got = sorted((round(complex(e.root).real, 6),
                      round(complex(e.root).imag, 6),
                      e.multiplicity) for e in rs.entries)
        want = sorted((round(complex(z).real, 6),
                       round(complex(z).imag, 6), m) for z, m in roots)
        assert got == want


class TestTrustedHelpers:
    def test_trusted_ratios_top_order(self, quad):
        vals = trusted_ratios(quad, Side.TAYLOR, 2, 0, 10)
        assert all(v is not None for v in vals)
        assert max(rel_diff(v, 2) for v in vals) < 1e-25

    def test_trusted_ratios_handle_zero_denominators(self, pair_tie):
        vals = trusted_ratios(pair_tie, Side.TAYLOR, 1, 0, 10)
        assert any(v is None for v in vals)

    def test_escalation_cap_raises(self):
        # cancellation at this depth needs far more than the capped budget
        from hroots.errors import PrecisionExhausted
        p = from_roots([(2, 1), (3, 1)])
        cfg = SolverConfig(precision_bits=64, max_precision_bits=128)
        with pytest.raises(PrecisionExhausted) as exc:
            trusted_cells(p, Side.LAURENT, 2, 400, 405, cfg, need_bits=48)
        assert exc.value.r == 2

    def test_cap_soft_mode_returns_cells(self):
        p = from_roots([(2, 1), (3, 1)])
        cfg = SolverConfig(precision_bits=64, max_precision_bits=128)
        cells = trusted_cells(p, Side.LAURENT, 2, 400, 405, cfg,
                              need_bits=48, raise_on_failure=False)
        assert len(cells) == 6
        assert any(c.certified_zero() for c in cells)
