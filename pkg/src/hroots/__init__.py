"""hroots: all roots of a complex polynomial from Hankel determinant ratios.

The limits of ratios of consecutive Hankel determinants built on the
Taylor (at 0) and Laurent (at infinity) coefficients of P'/P converge to
products of the smallest- and largest-modulus roots; successive quotients
of those products recover every root, power sums recover multiplicities,
and random complex shifts break modulus ties.
"""

from .engine import (
    RatioTrace,
    RootEstimate,
    SolverConfig,
    TraceStatus,
    TraceVerdict,
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
from .errors import HrootsError
from .hankel import HankelCell, StructuralZeroStatus, det_row, hadamard_det, is_structural_zero
from .poly import (
    Polynomial,
    RootEntry,
    RootSet,
    derivative,
    evaluate,
    from_roots,
    make_polynomial,
    shift,
    strip_zero_roots,
)
from .precision import DEFAULT_PRECISION, ScaledComplex
from .series import CoefficientStream, Side, laurent_coeffs, taylor_coeffs

__version__ = "0.1.0"

__all__ = [
    "CoefficientStream",
    "DEFAULT_PRECISION",
    "HankelCell",
    "HrootsError",
    "Polynomial",
    "RatioTrace",
    "RootEntry",
    "RootSet",
    "ScaledComplex",
    "Side",
    "SolverConfig",
    "StructuralZeroStatus",
    "TraceStatus",
    "TraceVerdict",
    "RootEstimate",
    "classify",
    "count_distinct_roots",
    "derivative",
    "det_row",
    "evaluate",
    "fit_decay_ratio",
    "from_roots",
    "hadamard_det",
    "is_structural_zero",
    "laurent_coeffs",
    "make_polynomial",
    "multiplicities",
    "products_from_traces",
    "ratio_trace",
    "roots_from_products",
    "shift",
    "solve",
    "strip_zero_roots",
    "taylor_coeffs",
    "trusted_cells",
    "trusted_ratios",
    "__version__",
]
