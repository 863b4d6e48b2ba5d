"""Size thresholds and tail-probability bounds for large-average and ANOVA submatrices.

Everything is evaluated in log space. Probability bounds come in pairs:
``log_*`` returns the raw (unclamped) natural log, and the plain function
returns ``min(1, exp(log))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InvalidArgumentError, NoRootError
from .special import chi2_cdf, chi2_sf

LN2 = math.log(2.0)
HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)
DEFAULT_EPSILON = 0.01
DEFAULT_LOWER_CONSTANT = 12.0 * LN2
ROOT_TOL = 1e-10
MAX_SOLVER_ITERS = 200


@dataclass(frozen=True)
class ThresholdQuery:
    """Inputs shared by the threshold and bound formulas.

    ``alpha`` is the rows/cols ratio of the matrix, ``beta`` the rows/cols
    ratio of the target submatrix, ``epsilon`` the slack exponent and ``r``
    the integer offset above the threshold.
    """

    n: float
    tau: float
    alpha: float = 1.0
    beta: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    r: int = 1

    def __post_init__(self):
        if not self.n >= 2:
            raise InvalidArgumentError(f"n must be >= 2, got {self.n}")
        if not self.tau > 0 or not math.isfinite(self.tau):
            raise DomainError(f"tau must be positive and finite, got {self.tau}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not self.beta >= 1:
            raise DomainError(f"beta must be >= 1, got {self.beta}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if isinstance(self.r, bool) or not isinstance(self.r, (int, np.integer)) or self.r < 1:
            raise InvalidArgumentError(f"r must be an integer >= 1, got {self.r!r}")


@dataclass(frozen=True)
class IntervalBound:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise InvalidArgumentError(f"interval lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class RootResult:
    s: float
    regime: str          # "bracket": found on (2 ln n / tau^2, 4 ln n / tau^2); "widened": elsewhere in (0, n)
    lower: float
    upper: float
    residual: float
    iterations: int


def _clamp(log_value: float) -> float:
    return 1.0 if log_value >= 0 else math.exp(log_value)


def _check_tau(tau):
    if not tau > 0 or not math.isfinite(tau):
        raise DomainError(f"tau must be positive and finite, got {tau}")


def _check_anova_tau(tau):
    if not 0 < tau < 1:
        raise DomainError(f"ANOVA threshold tau must lie in (0, 1), got {tau}")


def _check_n(n):
    if not n >= 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")


# ---------------------------------------------------------------------------
# square, large average
# ---------------------------------------------------------------------------


def log_phi(n: float, tau: float, s: float) -> float:
    """Natural log of the Stirling surrogate for the root expected count of k x k hits.

    Written as s ln n - (n - s + 1/2) log1p(-s/n) - ... so that the two
    O(n ln n) terms never get subtracted from each other.
    """
    if not 0 < s < n:
        raise DomainError(f"s must lie in (0, n) = (0, {n}), got {s}")
    _check_tau(tau)
    return (s * math.log(n) - (n - s + 0.5) * math.log1p(-s / n)
            - (s + 0.5) * math.log(s) - tau * tau * s * s / 4.0 - HALF_LN_2PI)


def _bisect(f, lo, hi, f_lo, max_iter=MAX_SOLVER_ITERS):
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid, it
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi), it


def _refine(f, lo, hi, f_lo, method):
    if method == "bisect":
        return _bisect(f, lo, hi, f_lo)
    if method == "brent":
        root, info = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                            maxiter=MAX_SOLVER_ITERS, full_output=True)
        return root, info.iterations
    raise InvalidArgumentError(f"unknown root method {method!r}")


def lemma_bracket(n: float, tau: float) -> tuple[float, float]:
    """The interval (2 ln n / tau^2, 4 ln n / tau^2) that holds the root for large n."""
    return 2.0 * math.log(n) / tau ** 2, 4.0 * math.log(n) / tau ** 2


def solve_s_detailed(n: float, tau: float, *, widen: bool = False,
                     method: str = "brent") -> RootResult:
    """Locate the root of log_phi(n, tau, .) and report where it was found.

    The root is first sought on the large-n bracket. If log_phi does not
    change sign there, a ``NoRootError`` is raised unless ``widen`` is set, in
    which case (delta, n - delta) is scanned for the first +/- sign change.
    """
    _check_n(n)
    _check_tau(tau)
    f = lambda s: log_phi(n, tau, s)  # noqa: E731
    delta = 1e-9
    lo, hi = lemma_bracket(n, tau)
    hi = min(hi, n - delta)
    f_lo = f(lo) if lo < hi else math.nan
    f_hi = f(hi) if lo < hi else math.nan
    if lo < hi and f_lo > 0 and f_hi < 0:
        root, iters = _refine(f, lo, hi, f_lo, method)
        return RootResult(root, "bracket", lo, hi, f(root), iters)
    if not widen:
        raise NoRootError(
            f"log_phi has no sign change on ({lo:.6g}, {hi:.6g}) for n={n}, tau={tau}: "
            f"values {f_lo:+.3g}, {f_hi:+.3g}; n is below the large-n regime",
            lo, hi, f_lo, f_hi, "bracket")

    grid = np.unique(np.concatenate([np.geomspace(delta, n - delta, 2049),
                                     np.linspace(delta, n - delta, 2049)]))
    vals = [f(float(s)) for s in grid]
    for i in range(len(grid) - 1):
        if vals[i] > 0 and vals[i + 1] <= 0:
            a, b = float(grid[i]), float(grid[i + 1])
            if vals[i + 1] == 0:
                return RootResult(b, "widened", a, b, 0.0, 0)
            root, iters = _refine(f, a, b, vals[i], method)
            return RootResult(root, "widened", a, b, f(root), iters)
    raise NoRootError(
        f"log_phi has no +/- sign change on ({delta}, {n - delta}) for n={n}, tau={tau}",
        delta, n - delta, vals[0], vals[-1], "widened")


def solve_s(n: float, tau: float, *, widen: bool = False, method: str = "brent") -> float:
    """Size threshold s(n, tau): the root of log_phi(n, tau, s) = 0."""
    return solve_s_detailed(n, tau, widen=widen, method=method).s


def asymptotic_s(n: float, tau: float) -> float:
    """4/tau^2 ln n - 4/tau^2 ln(4/tau^2 ln n) + 4/tau^2 (the expansion without its o(1) term)."""
    _check_n(n)
    _check_tau(tau)
    a = 4.0 / tau ** 2
    inner = a * math.log(n)
    if not inner > 1:
        raise DomainError(f"4 ln n / tau^2 must exceed 1, got {inner}")
    return inner - a * math.log(inner) + a


def log_prob_bound_avg(q: ThresholdQuery) -> float:
    t2 = q.tau ** 2
    ln_n = math.log(q.n)
    return (math.log(4.0 / t2) - 2 * q.r * ln_n
            + (2 * q.r + q.epsilon) * math.log(ln_n / t2))


def prob_bound_avg(q: ThresholdQuery) -> float:
    """Upper bound on P(K_tau >= s(n, tau) + r) for square large-average blocks."""
    return _clamp(log_prob_bound_avg(q))


def theorem1_interval(n: float, tau: float, *, lower_constant: float = DEFAULT_LOWER_CONSTANT,
                      widen: bool = False) -> IntervalBound:
    """Eventual almost-sure range [s - 4/tau^2 - c/tau^2 - 4, s + 2] of K_tau.

    ``lower_constant`` defaults to 12 ln 2; any value above 8 ln 2 is accepted.
    """
    if not lower_constant > 8 * LN2:
        raise DomainError(f"lower_constant must exceed 8 ln 2 = {8 * LN2:.6f}, got {lower_constant}")
    s = solve_s(n, tau, widen=widen)
    t2 = tau ** 2
    return IntervalBound(s - 4.0 / t2 - lower_constant / t2 - 4.0, s + 2.0)


# ---------------------------------------------------------------------------
# square, ANOVA
# ---------------------------------------------------------------------------


def h_of_tau(tau: float) -> float:
    """1 - tau - ln(2 - tau); stands in for tau^2 in the ANOVA formulas."""
    _check_anova_tau(tau)
    return 1.0 - tau - math.log(2.0 - tau)


def anova_threshold(n: float, tau: float) -> float:
    _check_n(n)
    h = h_of_tau(tau)
    a = 4.0 / h
    inner = a * math.log(n)
    if not inner > 1:
        raise DomainError(f"4 ln n / h(tau) must exceed 1, got {inner}")
    return inner - a * math.log(inner) + a + 2.0


def log_prob_bound_anova(q: ThresholdQuery) -> float:
    h = h_of_tau(q.tau)
    ln_n = math.log(q.n)
    return (math.log(4.0 / h) + (2 * q.r + 2 + q.epsilon) * math.log(ln_n / h)
            - 2 * q.r * ln_n)


def prob_bound_anova(q: ThresholdQuery) -> float:
    """Upper bound on P(L_tau >= t(n, tau) + r)."""
    return _clamp(log_prob_bound_anova(q))


# ---------------------------------------------------------------------------
# rectangular
# ---------------------------------------------------------------------------


def _rect_threshold(n, scale, alpha_coef, alpha, beta, const):
    a = 2.0 * (1.0 + 1.0 / beta) / scale
    inner = a * math.log(n)
    if not inner > 0:
        raise DomainError(f"leading term must be positive, got {inner}")
    return inner - a * math.log(inner) + alpha_coef * math.log(alpha) + const


def rect_avg_threshold(q: ThresholdQuery, c1: float = 0.0) -> float:
    """Threshold for ceil(beta k) x k large-average blocks of a ceil(alpha n) x n matrix.

    ``c1`` is the additive constant left unspecified by the theory; the
    result is only determined up to it.
    """
    t2 = q.tau ** 2
    return _rect_threshold(q.n, t2, 2.0 / t2, q.alpha, q.beta, c1)


def log_rect_avg_bound(q: ThresholdQuery) -> float:
    ln_n = math.log(q.n)
    b1 = q.beta + 1.0
    return -b1 * q.r * ln_n + (b1 + q.epsilon) * q.r * math.log(ln_n / q.tau ** 2)


def rect_avg_bound(q: ThresholdQuery) -> float:
    return _clamp(log_rect_avg_bound(q))


def rect_anova_threshold(q: ThresholdQuery, c2: float = 0.0) -> float:
    """ANOVA analogue of :func:`rect_avg_threshold`: tau^2 becomes h(tau), the alpha term is ln(alpha)/h."""
    h = h_of_tau(q.tau)
    return _rect_threshold(q.n, h, 1.0 / h, q.alpha, q.beta, c2)


def log_rect_anova_bound(q: ThresholdQuery) -> float:
    h = h_of_tau(q.tau)
    ln_n = math.log(q.n)
    b1 = q.beta + 1.0
    return -b1 * q.r * ln_n + (b1 + q.epsilon) * q.r * math.log(ln_n / h)


def rect_anova_bound(q: ThresholdQuery) -> float:
    return _clamp(log_rect_anova_bound(q))


# ---------------------------------------------------------------------------
# chi-square helpers
# ---------------------------------------------------------------------------


def log_chi2_upper_tail_bound(ell: float, r: float) -> float:
    """Log of the Chernoff bound [(ell/r) exp(r/ell - 1)]^(-ell/2) on P(chi2_ell >= r)."""
    if not ell >= 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {ell}")
    if not r > ell:
        raise DomainError(f"Chernoff bound needs r > ell (above the mean), got r={r}, ell={ell}")
    return -0.5 * ell * (math.log(ell / r) + r / ell - 1.0)


def chi2_upper_tail_bound(ell: float, r: float) -> float:
    return math.exp(log_chi2_upper_tail_bound(ell, r))


def chi2_left_right_check(ell: int, t: float) -> tuple[float, float]:
    """Return (P(X <= t), P(X >= 2 ell - 4 - t)) for X ~ chi2 with ell degrees of freedom."""
    if not ell >= 3:
        raise DomainError(f"ell must be >= 3, got {ell}")
    if not 0 < t < ell - 2:
        raise DomainError(f"t must lie in (0, ell - 2) = (0, {ell - 2}), got {t}")
    return chi2_cdf(t, ell), chi2_sf(2 * ell - 4 - t, ell)
