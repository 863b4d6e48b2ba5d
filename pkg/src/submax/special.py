"""Regularized incomplete gamma functions and chi-square distribution functions.

P(a, x) is summed as a power series when x < a + 1; otherwise Q(a, x) is
evaluated by a modified-Lentz continued fraction. The other function follows
by complement, which is well conditioned on each side of the switch.
"""

from __future__ import annotations

import math

from .errors import DomainError

_EPS = 1e-16
_TINY = 1e-300
_MAX_TERMS = 10_000


def _prefactor(a, x):
    return math.exp(-x + a * math.log(x) - math.lgamma(a))


def _series_p(a, x):
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * _prefactor(a, x)
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _cf_q(a, x):
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * _prefactor(a, x)
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def _check(a, x):
    if not a > 0:
        raise DomainError(f"shape parameter must be positive, got {a}")
    if x < 0 or math.isnan(x):
        raise DomainError(f"argument must be non-negative, got {x}")


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    _check(a, x)
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _series_p(a, x))
    return max(0.0, 1.0 - _cf_q(a, x))


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _check(a, x)
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _series_p(a, x))
    return min(1.0, _cf_q(a, x))


def chi2_cdf(x: float, dof: float) -> float:
    if x <= 0:
        return 0.0
    return gammainc_lower(dof / 2.0, x / 2.0)


def chi2_sf(x: float, dof: float) -> float:
    if x <= 0:
        return 1.0
    return gammainc_upper(dof / 2.0, x / 2.0)
