"""
Numeric building blocks: terminating Gauss hypergeometric sums, adaptive
1D quadrature, bracketed root finding and compensated summation.

All reals are 64-bit floats. Every routine here is a pure function.
"""

from __future__ import annotations

import heapq
import logging
import math
import warnings
from dataclasses import dataclass

from errors import ConvergenceError, InvalidParameterError, NoSignChangeError

log = logging.getLogger(__name__)

# Sum of |term| over |result| above which the terminating series has lost
# too many digits and callers should integrate instead.
CANCELLATION_LIMIT = 1e8


class CancellationWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-10
    abs: float = 1e-12
    max_iters: int = 200

    def __post_init__(self):
        if not self.rel > 0:
            raise InvalidParameterError(f"Tolerance.rel must be > 0, got {self.rel}")
        if self.abs < 0:
            raise InvalidParameterError(f"Tolerance.abs must be >= 0, got {self.abs}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidParameterError(f"Tolerance.max_iters must be a positive integer, got {self.max_iters}")


@dataclass(frozen=True)
class Hyp2F1Args:
    """Arguments of 2F1(a, -L; c; z). The second parameter is always -L."""
    a: float
    L: int
    c: float
    z: float

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 0:
            raise InvalidParameterError(f"L must be a nonnegative integer, got {self.L}")
        # (c)_n for n <= L contains the factors c, c+1, ..., c+L-1
        if self.c <= 0 and float(self.c).is_integer() and -self.c <= self.L - 1:
            raise InvalidParameterError(f"c={self.c} makes the Pochhammer symbol (c)_n vanish")


@dataclass(frozen=True)
class SeriesResult:
    value: float
    magnitude: float  # sum of |term|

    @property
    def cancellation_ratio(self):
        if self.value == 0.0:
            return math.inf if self.magnitude > 0 else 1.0
        return self.magnitude / abs(self.value)

    @property
    def cancelled(self):
        return self.cancellation_ratio > CANCELLATION_LIMIT


def compensated_sum(values):
    """Neumaier's variant of Kahan summation."""
    total = 0.0
    carry = 0.0
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            carry += (total - t) + v
        else:
            carry += (v - t) + total
        total = t
    return total + carry


def hypergeometric_series(args: Hyp2F1Args) -> SeriesResult:
    """Evaluate the terminating series term by term.

    With b = -L the series is a degree-L polynomial in z, so the sum is
    exact up to rounding: no truncation test is needed.
    """
    a, L, c, z = args.a, int(args.L), args.c, args.z

    terms = [1.0]
    term = 1.0
    for n in range(L):
        denom = (c + n) * (n + 1)
        if denom == 0.0:
            raise InvalidParameterError(f"(c)_n vanished at n={n + 1} for c={c}")
        term *= (a + n) * (n - L) / denom * z
        if term == 0.0:
            break
        terms.append(term)

    return SeriesResult(
        value=compensated_sum(terms),
        magnitude=compensated_sum(abs(t) for t in terms),
    )


def hyp2f1_terminating(args: Hyp2F1Args) -> float:
    """2F1(a, -L; c; z) as an exact finite sum.

    Issues a CancellationWarning when the alternating terms cancel badly
    (sum |term| / |result| > 1e8); integrate the radial form instead then.
    """
    result = hypergeometric_series(args)
    if result.cancelled:
        warnings.warn(
            f"2F1({args.a}, -{args.L}; {args.c}; {args.z}) lost precision: "
            f"sum|term|/|result| = {result.cancellation_ratio:.3g}",
            CancellationWarning,
            stacklevel=2,
        )
    return result.value


# Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15)
_XGK = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
)
_WGK = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
_WG = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)


def _kronrod15(f, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)

    f_center = f(center)
    kronrod = f_center * _WGK[7]
    gauss = f_center * _WG[3]
    for k in range(7):
        dx = half * _XGK[k]
        pair = f(center - dx) + f(center + dx)
        kronrod += _WGK[k] * pair
        if k % 2 == 1:
            gauss += _WG[k // 2] * pair

    kronrod *= half
    gauss *= half
    return kronrod, abs(kronrod - gauss)


def integrate_1d(f, lo, hi, tol: Tolerance | None = None) -> float:
    """Globally adaptive Gauss-Kronrod quadrature of f over [lo, hi].

    The interval with the largest error estimate is bisected until the
    summed estimate is within max(tol.abs, tol.rel * |result|).
    """
    tol = tol or Tolerance(rel=1e-11, abs=1e-14, max_iters=2000)
    if hi < lo:
        raise InvalidParameterError(f"integrate_1d needs lo <= hi, got [{lo}, {hi}]")
    if hi == lo:
        return 0.0

    value, error = _kronrod15(f, lo, hi)
    # max-heap on error; index keeps ordering deterministic on ties
    heap = [(-error, 0, lo, hi, value)]
    counter = 1

    for _ in range(tol.max_iters):
        total = compensated_sum(item[4] for item in heap)
        total_error = compensated_sum(-item[0] for item in heap)
        if not math.isfinite(total):
            raise ConvergenceError(f"Integrand is not finite on [{lo}, {hi}]")
        if total_error <= max(tol.abs, tol.rel * abs(total)):
            return total

        _, _, a, b, _ = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        for sub_lo, sub_hi in ((a, mid), (mid, b)):
            sub_value, sub_error = _kronrod15(f, sub_lo, sub_hi)
            heapq.heappush(heap, (-sub_error, counter, sub_lo, sub_hi, sub_value))
            counter += 1

    raise ConvergenceError(
        f"integrate_1d did not converge on [{lo}, {hi}] after {tol.max_iters} subdivisions"
    )


def bisect_root(f, lo, hi, tol: Tolerance | None = None) -> float:
    """Root of f in [lo, hi] by plain bisection. Deterministic for fixed inputs."""
    tol = tol or Tolerance(rel=1e-12, abs=1e-15, max_iters=200)
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise NoSignChangeError(f"f({lo})={f_lo:.6g} and f({hi})={f_hi:.6g} have the same sign")

    for _ in range(tol.max_iters):
        mid = lo + 0.5 * (hi - lo)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= tol.abs + tol.rel * abs(mid):
            return lo + 0.5 * (hi - lo)

    raise ConvergenceError(f"bisect_root did not converge in {tol.max_iters} iterations")


def bisect_threshold(feasible, lo, hi, tol: Tolerance | None = None) -> float:
    """Smallest x in [lo, hi] (to tolerance) with feasible(x) True.

    feasible must be monotone: once True it stays True as x grows.
    Returns the upper end of the final bracket, which is always feasible.
    """
    tol = tol or Tolerance(rel=1e-6, abs=0.0, max_iters=200)
    if feasible(lo):
        return lo
    if not feasible(hi):
        raise NoSignChangeError(f"predicate is infeasible at the upper end {hi}")

    width = tol.abs + tol.rel * abs(hi)
    for _ in range(tol.max_iters):
        if hi - lo <= width:
            return hi
        mid = lo + 0.5 * (hi - lo)
        if feasible(mid):
            hi = mid
        else:
            lo = mid

    raise ConvergenceError(f"bisect_threshold did not converge in {tol.max_iters} iterations")
