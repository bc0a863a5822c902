"""Command-line front end: roots, trace, series, dets and verify.

stdout carries data (JSON or CSV), stderr carries diagnostics; exit
status is 0 on success, 1 on usage errors, 2 on numerical failure.
Numbers are serialized as the shortest round-trip decimal of the nearest
double; --exact switches to hex floats for regression goldens.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import gmpy2

from . import engine, oracle
from .errors import (
    ConstantTermZero,
    DegreeZero,
    EmptyInput,
    HrootsError,
    LeadingCoefficientZero,
    ParseError,
)
from .hankel import hadamard_det
from .poly import Polynomial, make_polynomial
from .precision import DEFAULT_PRECISION, context, to_mpc
from .series import CoefficientStream, Side

_ENV_PREFIX = "HROOTS_"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting with 2."""

    def error(self, message):
        raise _UsageError(message)


def _env_default(name: str, fallback, cast):
    raw = os.environ.get(_ENV_PREFIX + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise _UsageError(f"bad value for {_ENV_PREFIX}{name}: {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hroots",
                     description="Polynomial roots from Hankel determinant ratio limits")
    common = _Parser(add_help=False)
    common.add_argument("input", nargs="?", default="-",
                        help="polynomial: inline text ('1 -3 2' or JSON), a file path, "
                             "or '-' for stdin")
    common.add_argument("--precision", type=int,
                        default=_env_default("PRECISION", DEFAULT_PRECISION, int),
                        help="mantissa bits (default 256)")
    common.add_argument("--kmax", type=int,
                        default=_env_default("KMAX", 256, int),
                        help="maximum determinant index k (default 256)")
    common.add_argument("--tol", type=float,
                        default=_env_default("TOL", 1e-12, float),
                        help="relative tolerance for limits (default 1e-12)")
    common.add_argument("--seed", type=int,
                        default=_env_default("SEED", 0, int),
                        help="seed for shift sampling (default 0)")
    common.add_argument("--max-shifts", type=int, dest="max_shifts",
                        default=_env_default("MAX_SHIFTS", 5, int),
                        help="shift retry budget for modulus ties (default 5)")
    common.add_argument("--format", choices=("json", "csv"),
                        default=_env_default("FORMAT", "json", str),
                        help="output format where both make sense")
    common.add_argument("--exact", action="store_true",
                        help="serialize numbers as hex floats of the nearest double")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("roots", parents=[common],
                   help="all roots with multiplicities and residuals")

    p_trace = sub.add_parser("trace", parents=[common],
                             help="CSV of determinant ratios for one (side, r)")
    p_trace.add_argument("--side", required=True, help="taylor or laurent")
    p_trace.add_argument("--r", type=int, required=True, help="determinant order")

    p_series = sub.add_parser("series", parents=[common],
                              help="CSV of Taylor or Laurent coefficients")
    p_series.add_argument("--side", required=True, help="taylor or laurent")
    p_series.add_argument("--count", type=int, default=32,
                          help="number of coefficients (default 32)")

    p_dets = sub.add_parser("dets", parents=[common],
                            help="CSV of scaled Hankel determinants for one (side, r)")
    p_dets.add_argument("--side", required=True, help="taylor or laurent")
    p_dets.add_argument("--r", type=int, required=True, help="determinant order")

    sub.add_parser("verify", parents=[common],
                   help="cross-check the solver against the closed-form oracle")
    return parser


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------

def parse_input(text: str, precision_bits: int = DEFAULT_PRECISION) -> Polynomial:
    """Parse polynomial text: JSON {"coefficients": [[re, im], ...]} or
    whitespace-separated real coefficients, both in descending powers."""
    stripped = text.strip()
    if not stripped:
        raise EmptyInput("no coefficients in input")
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", exc.lineno, exc.colno)
        if not isinstance(obj, dict) or "coefficients" not in obj:
            raise ParseError("JSON input needs a 'coefficients' key")
        coeffs = []
        for i, item in enumerate(obj["coefficients"]):
            if isinstance(item, (list, tuple)):
                if len(item) != 2 or not all(isinstance(x, (int, float)) for x in item):
                    raise ParseError(f"coefficient {i} must be [re, im]")
                coeffs.append((item[0], item[1]))
            elif isinstance(item, (int, float)):
                coeffs.append(item)
            else:
                raise ParseError(f"coefficient {i} must be a number or [re, im]")
        return make_polynomial(coeffs, precision_bits)
    coeffs = []
    for ln, line in enumerate(text.splitlines(), start=1):
        col = 1
        for token in line.split():
            col = line.index(token, col - 1) + 1
            try:
                coeffs.append(float(token))
            except ValueError:
                raise ParseError(f"not a number: {token!r}", ln, col)
            col += len(token)
    if not coeffs:
        raise EmptyInput("no coefficients in input")
    return make_polynomial(coeffs, precision_bits)


def _load_source(arg: str, stdin) -> str:
    if arg == "-":
        return stdin.read()
    if os.path.exists(arg) and os.path.isfile(arg):
        with open(arg, "r", encoding="utf-8") as fh:
            return fh.read()
    return arg


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _fmt(x: float, exact: bool) -> str:
    v = float(x)
    if exact and math.isfinite(v):
        return v.hex()
    return repr(v)


def _num(x: float, exact: bool):
    """JSON payload number: float normally, hex string in exact mode."""
    v = float(x)
    if exact and math.isfinite(v):
        return v.hex()
    return v


def _emit_roots(result, exact: bool, fmt: str, out) -> None:
    if fmt == "csv":
        out.write("re,im,multiplicity,residual\n")
        for e in result.entries:
            z = complex(e.root)
            out.write(f"{_fmt(z.real, exact)},{_fmt(z.imag, exact)},"
                      f"{e.multiplicity},{_fmt(e.residual, exact)}\n")
        return
    payload = {
        "roots": [
            {
                "re": _num(complex(e.root).real, exact),
                "im": _num(complex(e.root).imag, exact),
                "multiplicity": e.multiplicity,
                "residual": _num(e.residual, exact),
            }
            for e in result.entries
        ],
        "zero_multiplicity": result.zero_multiplicity,
        "distinct_count": result.distinct_count,
        "shifts_used": result.shifts_used,
    }
    out.write(json.dumps(payload) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _config_from(args) -> engine.SolverConfig:
    return engine.SolverConfig(
        precision_bits=args.precision,
        k_max=args.kmax,
        tol=args.tol,
        shift_seed=args.seed,
        max_shifts=args.max_shifts,
    )


def _diagnostic_config(args) -> engine.SolverConfig:
    """Config for trace/dets, where --kmax bounds the output, not the solver."""
    return engine.SolverConfig(
        precision_bits=args.precision,
        tol=args.tol,
        shift_seed=args.seed,
        max_shifts=args.max_shifts,
    )


def _cmd_roots(args, poly, out) -> int:
    result = engine.solve(poly, _config_from(args))
    _emit_roots(result, args.exact, args.format, out)
    return 0


def _cmd_trace(args, poly, out) -> int:
    side = Side.parse(args.side)
    trace = engine.ratio_trace(poly, side, args.r, args.kmax, _diagnostic_config(args))
    out.write("k,re,im,diff\n")
    prev = None
    with context(2 * args.precision):
        for k, v in trace.points:
            z = complex(v)
            diff = "" if prev is None else _fmt(
                float(gmpy2.sqrt(gmpy2.norm(v - prev))), args.exact)
            out.write(f"{k},{_fmt(z.real, args.exact)},{_fmt(z.imag, args.exact)},{diff}\n")
            prev = v
    return 0


def _cmd_series(args, poly, out) -> int:
    side = Side.parse(args.side)
    stream = CoefficientStream(poly, side, args.precision)
    out.write("k,re,im\n")
    for k in range(args.count):
        z = complex(stream.get(k))
        out.write(f"{k},{_fmt(z.real, args.exact)},{_fmt(z.imag, args.exact)}\n")
    return 0


def _cmd_dets(args, poly, out) -> int:
    side = Side.parse(args.side)
    stream = CoefficientStream(poly, side, args.precision)
    out.write("k,re_mantissa,im_mantissa,exp2,cancellation_bits\n")
    for k in range(args.kmax + 1):
        cell = hadamard_det(stream, k, args.r)
        man = complex(cell.value.mantissa)
        out.write(f"{k},{_fmt(man.real, args.exact)},{_fmt(man.imag, args.exact)},"
                  f"{cell.value.exponent},{_fmt(cell.cancellation_margin, args.exact)}\n")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _relative_gap(a, b) -> float:
    with context(512):
        am = float(gmpy2.sqrt(gmpy2.norm(to_mpc(a, 512))))
        d = float(gmpy2.sqrt(gmpy2.norm(to_mpc(a, 512) - to_mpc(b, 512))))
    return d / am if am > 0 else d


def _cmd_verify(args, poly, out) -> int:
    checks = []
    bits = args.precision
    rng_tuples = [[complex(((i * 7 + j * 3) % 11) - 5, ((i * 5 + j) % 7) - 3) or 1 + 1j
                   for j in range(2 + i % 5)] for i in range(8)]

    # sign relation between the two Vandermonde routes
    ok = True
    detail = ""
    for tup in rng_tuples:
        s = len(tup)
        v = oracle.vandermonde(tup, bits)
        vb = oracle.vandermonde_inversed(tup, bits)
        with context(bits):
            lhs = v
            rhs = (-1) ** (s // 2) * vb
        gap = _relative_gap(lhs, rhs) if lhs != 0 else abs(complex(lhs - rhs))
        if gap > 1e-20:
            ok, detail = False, f"sign relation off by {gap:.2e} for s={s}"
            break
    checks.append({"name": "vandermonde-identities", "passed": ok, "detail": detail})

    checks.append({
        "name": "factorial-convention",
        "passed": oracle.determine_factorial_convention() == oracle.INCLUDE_FACTORIAL,
        "detail": "",
    })

    # oracle roots once, shared by the remaining checks
    approx = oracle.independent_roots(poly, seed=args.seed)
    clusters = oracle.cluster_roots(approx)
    roots = [c for c, _ in clusters]
    mults = [m for _, m in clusters]

    cfg = _diagnostic_config(args)
    ok = True
    detail = ""
    try:
        for side in (Side.TAYLOR, Side.LAURENT):
            for r in range(1, len(roots) + 1):
                cells = engine.trusted_cells(poly, side, r, 0, 5, cfg)
                for cell in cells:
                    closed = oracle.hadamard_via_roots(roots, mults, cell.k, r, side,
                                                       precision_bits=2 * bits)
                    if cell.is_zero and abs(complex(closed)) < 1e-18:
                        continue
                    gap = _relative_gap(closed, cell.value.value)
                    if gap > 1e-15:
                        ok = False
                        detail = f"{side.value} k={cell.k} r={r} gap {gap:.2e}"
                        break
                if not ok:
                    break
            if not ok:
                break
    except HrootsError as exc:
        ok, detail = False, str(exc)
    checks.append({"name": "closed-form-determinants", "passed": ok, "detail": detail})

    ok = True
    detail = ""
    try:
        for side in (Side.TAYLOR, Side.LAURENT):
            p_count = len(roots)
            vals = [v for v in engine.trusted_ratios(poly, side, p_count, 0, 5, cfg)
                    if v is not None]
            if len(vals) < 2:
                ok, detail = False, f"{side.value}: too few trusted top ratios"
                break
            worst = max(_relative_gap(vals[0], v) for v in vals[1:])
            if worst > 1e-15:
                ok, detail = False, f"{side.value}: top ratio drifts {worst:.2e}"
                break
    except HrootsError as exc:
        ok, detail = False, str(exc)
    checks.append({"name": "top-ratio-constancy", "passed": ok, "detail": detail})

    ok = True
    detail = ""
    try:
        checked = 0
        for side in (Side.TAYLOR, Side.LAURENT):
            mags = [abs(complex(z)) for z in roots]
            lo, hi = (mags[0], mags[1]) if side is Side.TAYLOR else (mags[-2], mags[-1])
            if len(roots) < 2 or not lo < hi * (1 - 1e-9):
                continue  # no strict gap at the extreme position
            bound = oracle.theoretical_error_constant(roots, mults, 1, side)
            if bound.k_threshold > 40:
                continue
            target = roots[0] if side is Side.TAYLOR else roots[-1]
            ratios = engine.trusted_ratios(poly, side, 1, bound.k_threshold,
                                           bound.k_threshold + 8, cfg)
            for i, value in enumerate(ratios):
                if value is None:
                    continue
                k = bound.k_threshold + i
                err = abs(complex(value) - complex(target))
                limit = bound.taylor_bound(k, 1) if side is Side.TAYLOR \
                    else bound.laurent_bound(k)
                checked += 1
                if err > limit:
                    ok, detail = False, (f"{side.value} k={k}: "
                                         f"err {err:.3e} > bound {limit:.3e}")
        if ok:
            detail = f"{checked} ratio points checked"
    except HrootsError as exc:
        ok, detail = False, str(exc)
    checks.append({"name": "error-bounds", "passed": ok, "detail": detail})

    ok = True
    detail = ""
    try:
        solved = engine.solve(poly, _diagnostic_config(args))
        got = sorted((complex(z) for z in solved.expanded()),
                     key=lambda z: (abs(z), z.real, z.imag))
        want = sorted((complex(z) for z in approx),
                      key=lambda z: (abs(z), z.real, z.imag))
        worst = max((abs(g - w) / max(1.0, abs(w)) for g, w in zip(got, want)),
                    default=0.0)
        if len(got) != len(want) or worst > 1e-8:
            ok, detail = False, f"root mismatch {worst:.2e}"
    except HrootsError as exc:
        ok, detail = False, f"solve failed: {exc}"
    checks.append({"name": "solve-vs-oracle", "passed": ok, "detail": detail})

    passed = all(c["passed"] for c in checks)
    out.write(json.dumps({"checks": checks, "passed": passed}) + "\n")
    return 0 if passed else 2


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "roots": _cmd_roots,
    "trace": _cmd_trace,
    "series": _cmd_series,
    "dets": _cmd_dets,
    "verify": _cmd_verify,
}


def _error_payload(stage: str, exc: Exception) -> str:
    return json.dumps({"error": {
        "stage": stage,
        "type": type(exc).__name__,
        "message": str(exc),
    }})


def main(argv=None, stdout=None, stderr=None) -> int:
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    stage = "usage"
    try:
        args = parser.parse_args(argv)
        stage = "parse-input"
        source = _load_source(args.input, sys.stdin)
        poly = parse_input(source, args.precision)
        stage = args.command
        return _COMMANDS[args.command](args, poly, out)
    except _UsageError as exc:
        err.write(_error_payload(stage, exc) + "\n")
        return 1
    except (ParseError, EmptyInput, LeadingCoefficientZero, DegreeZero,
            ConstantTermZero, ValueError) as exc:
        # bad input or flags, not a numerical failure
        err.write(_error_payload(stage, exc) + "\n")
        return 1
    except OSError as exc:
        err.write(_error_payload(stage, exc) + "\n")
        return 1
    except HrootsError as exc:
        err.write(_error_payload(stage, exc) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
