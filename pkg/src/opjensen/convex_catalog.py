"""Catalog of scalar test functions with convexity metadata, plus sampled
convexity and operator-convexity checkers.

Operator-convexity flags record standard facts (t^2 and t^p for p in [1, 2]
are operator convex; |t|, t^4, exp are convex but not operator convex) and
are defended numerically by check_operator_convex rather than proved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnknownFunctionError
from .intervals import Interval, REAL_LINE
from .linalg_core import (
    hermitian_eig,
    matrix_function,
    random_hermitian,
    rng_stream,
)

__all__ = [
    "ScalarFunction",
    "get_function",
    "catalog_names",
    "parse_function_spec",
    "check_convex",
    "find_convexity_violation",
    "check_operator_convex",
    "OperatorConvexityReport",
]

_POSITIVE_AXIS = Interval.at_least(0.0)
_STRICT_POSITIVE = Interval.greater_than(0.0)


@dataclass(frozen=True)
class ScalarFunction:
    name: str
    params: tuple[float, ...]
    fn: Callable[[float], float]
    domain: Interval
    is_convex: bool
    is_operator_convex: bool
    vanishes_at_zero: bool

    def __call__(self, t: float) -> float:
        return float(self.fn(t))

    @property
    def label(self) -> str:
        """Stable identifier, e.g. 'hinge:0' or 'square'."""
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(repr(p) for p in self.params)

    def defined_at_zero(self) -> bool:
        return self.domain.contains(0.0)


def _entropy(t: float) -> float:
    return 0.0 if t == 0.0 else t * math.log(t)


def _make_square(params):
    return ScalarFunction("square", (), lambda t: t * t, REAL_LINE, True, True, True)


def _make_abs(params):
    return ScalarFunction("abs", (), abs, REAL_LINE, True, False, True)


def _make_quartic(params):
    return ScalarFunction("quartic", (), lambda t: t ** 4, REAL_LINE, True, False, True)


def _make_exp(params):
    return ScalarFunction("exp", (), math.exp, REAL_LINE, True, False, False)


def _make_hinge(params):
    c = float(params[0]) if params else 0.0
    return ScalarFunction(
        "hinge", (c,), lambda t: max(t - c, 0.0), REAL_LINE, True, False,
        vanishes_at_zero=(c >= 0.0),
    )


def _make_shifted_square(params):
    if not params:
        raise UnknownFunctionError("shifted_square needs a shift parameter c")
    c = float(params[0])
    return ScalarFunction(
        "shifted_square", (c,), lambda t: t * t + c, REAL_LINE, True, True,
        vanishes_at_zero=(c == 0.0),
    )


def _make_entropy(params):
    return ScalarFunction("entropy", (), _entropy, _POSITIVE_AXIS, True, True, True)


def _make_inv(params):
    return ScalarFunction("inv", (), lambda t: 1.0 / t, _STRICT_POSITIVE, True, True, False)


def _make_neglog(params):
    return ScalarFunction(
        "neglog", (), lambda t: -math.log(t), _STRICT_POSITIVE, True, True, False
    )


def _make_power(params):
    if not params:
        raise UnknownFunctionError("power needs an exponent parameter p")
    p = float(params[0])
    if p < 1.0:
        raise UnknownFunctionError(f"power exponent must be >= 1 (t^p is not convex below), got {p}")
    return ScalarFunction(
        "power", (p,), lambda t: t ** p, _POSITIVE_AXIS, True,
        is_operator_convex=(1.0 <= p <= 2.0),
        vanishes_at_zero=True,
    )


def _make_linear(params):
    alpha = float(params[0]) if params else 1.0
    return ScalarFunction("linear", (alpha,), lambda t: alpha * t, REAL_LINE, True, True, True)


def _make_const(params):
    if not params:
        raise UnknownFunctionError("const needs a value parameter c")
    c = float(params[0])
    return ScalarFunction(
        "const", (c,), lambda t: c, REAL_LINE, True, True, vanishes_at_zero=(c == 0.0)
    )


_CATALOG: dict[str, Callable[[tuple[float, ...]], ScalarFunction]] = {
    "square": _make_square,
    "abs": _make_abs,
    "quartic": _make_quartic,
    "exp": _make_exp,
    "hinge": _make_hinge,
    "shifted_square": _make_shifted_square,
    "entropy": _make_entropy,
    "inv": _make_inv,
    "neglog": _make_neglog,
    "power": _make_power,
    "linear": _make_linear,
    "const": _make_const,
}


def catalog_names() -> tuple[str, ...]:
    return tuple(sorted(_CATALOG))


def get_function(name: str, params: tuple[float, ...] | list[float] = ()) -> ScalarFunction:
    try:
        factory = _CATALOG[name]
    except KeyError:
        raise UnknownFunctionError(
            f"unknown function {name!r}; valid names: {', '.join(catalog_names())}"
        ) from None
    return factory(tuple(float(p) for p in params))


def parse_function_spec(spec: str) -> ScalarFunction:
    """Parse 'name' or 'name:p1[,p2...]' as used in CLI flags and configs."""
    name, _, tail = spec.partition(":")
    params = tuple(float(p) for p in tail.split(",")) if tail else ()
    return get_function(name.strip(), params)


# ---------------------------------------------------------------------------
# Sampled convexity checks
# ---------------------------------------------------------------------------

def find_convexity_violation(
    f: ScalarFunction,
    interval: Interval,
    n_samples: int,
    seed: int,
) -> dict | None:
    """Search for (x, y, lam) violating the convexity inequality on a compact
    interval; returns a witness dict or None."""
    if not interval.is_bounded():
        raise ValueError("convexity sampling needs a compact interval")
    rng = rng_stream(seed)
    lo, hi = interval.lo, interval.hi
    for _ in range(n_samples):
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        lam = rng.uniform()
        mix = lam * x + (1.0 - lam) * y
        lhs = f(mix)
        rhs = lam * f(x) + (1.0 - lam) * f(y)
        scale = max(1.0, abs(lhs), abs(rhs))
        if lhs > rhs + 1e-12 * scale:
            return {"x": x, "y": y, "lam": lam, "lhs": lhs, "rhs": rhs}
    return None


def check_convex(f: ScalarFunction, interval: Interval, n_samples: int, seed: int) -> bool:
    return find_convexity_violation(f, interval, n_samples, seed) is None


@dataclass(frozen=True)
class OperatorConvexityReport:
    verdict: str  # "no_violation_found" | "violation"
    min_eigenvalue: float | None = None
    witness_a: np.ndarray | None = None
    witness_b: np.ndarray | None = None
    trial: int | None = None

    @property
    def found_violation(self) -> bool:
        return self.verdict == "violation"


def _sampling_box(domain: Interval, halfwidth: float = 2.5, margin: float = 0.2) -> tuple[float, float]:
    """Compact spectrum box inside the domain, away from open endpoints."""
    lo_finite = math.isfinite(domain.lo)
    hi_finite = math.isfinite(domain.hi)
    lo = domain.lo + (margin if domain.lo_open else 0.0) if lo_finite else -halfwidth
    hi = domain.hi - (margin if domain.hi_open else 0.0) if hi_finite else halfwidth
    if lo_finite and not hi_finite:
        hi = lo + 2.0 * halfwidth
    elif hi_finite and not lo_finite:
        lo = hi - 2.0 * halfwidth
    if lo >= hi:
        raise ValueError(f"domain {domain} leaves no room to sample")
    return lo, hi


def _clipped_pair(m: np.ndarray, f: ScalarFunction, lo: float, hi: float):
    """(matrix with clipped spectrum, f of it, max |f| over its spectrum)."""
    dec = hermitian_eig(m)
    w = np.clip(dec.eigenvalues, lo, hi)
    u = dec.eigenvectors
    a = (u * w) @ u.conj().T
    fw = np.array([f(float(t)) for t in w])
    fa = (u * fw) @ u.conj().T
    return 0.5 * (a + a.conj().T), 0.5 * (fa + fa.conj().T), float(np.max(np.abs(fw)))


def check_operator_convex(
    f: ScalarFunction,
    dim: int,
    trials: int,
    seed: int,
) -> OperatorConvexityReport:
    """Random search for midpoint violations of operator convexity.

    Draws Hermitian pairs with spectra clipped into f's domain and tests the
    lam = 1/2 Loewner inequality; midpoint operator convexity plus continuity
    already implies the full property, so lam is fixed at 1/2.
    """
    rng = rng_stream(seed)
    lo, hi = _sampling_box(f.domain)
    for trial in range(trials):
        a, fa, top_a = _clipped_pair(random_hermitian(dim, rng), f, lo, hi)
        b, fb, top_b = _clipped_pair(random_hermitian(dim, rng), f, lo, hi)
        fmid = matrix_function(0.5 * (a + b), f)
        delta = 0.5 * (fa + fb) - fmid
        lam_min = float(hermitian_eig(delta).eigenvalues[0])
        scale = max(1.0, top_a, top_b)
        if lam_min < -1e-9 * scale:
            return OperatorConvexityReport(
                verdict="violation",
                min_eigenvalue=lam_min,
                witness_a=a,
                witness_b=b,
                trial=trial,
            )
    return OperatorConvexityReport(verdict="no_violation_found")
