"""Chebyshev-series error bounds behind the interpolation guarantee.

The even solution of ``(1 - t^2) y'' - t y' + (2s)^2 y = 0`` is
``y_e(t) = cos(2 s asin t) = sum_k a_{2k}(s) t^{2k}`` with

    a_{2k}(s) = prod_{n<k} ((2n)^2 - (2s)^2) / ((2n + 1)(2n + 2)).

Truncating after ``M`` terms leaves an error whose size is controlled by
``|a_{2M}(s)|``; the functions here turn that into explicit bounds on the
minimax error of linear estimators and on the width of the set of Fourier
transforms compatible with a given set of UL samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import xlogy

__all__ = [
    "ChebyshevSeries",
    "WidthBound",
    "cheb_coeffs",
    "even_solution_eval",
    "truncation_sign",
    "truncation_bound",
    "derivative_bound",
    "f_alpha",
    "g_alpha",
    "g_inverse",
    "finite_m_exponent",
    "exponent_sum",
    "stirling_bracket",
    "minimax_real_bound",
    "minimax_imag_bound",
    "asymptotic_width",
    "width_bound",
]

_SNAP = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class ChebyshevSeries:
    """Coefficients ``a_0, a_2, ..., a_{2M}`` of ``cos(2 s asin t)``.

    ``coeffs[k]`` holds ``a_{2k}``; the partial sum uses ``k < order`` and
    ``coeffs[order]`` is the leading neglected coefficient.
    """

    s: float
    order: int
    coeffs: np.ndarray

    @property
    def next_coefficient(self):
        return float(self.coeffs[self.order])


@dataclass(frozen=True)
class WidthBound:
    s: float
    bound: float
    real_part: float
    imag_part: float
    asymptotic: float


def _check_order(M):
    if int(M) != M or M < 1:
        raise ValueError("order M must be a positive integer")
    return int(M)


def _check_eta(eta):
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")


def _snap_integer(x):
    r = round(x)
    if abs(x - r) <= _SNAP * max(1.0, abs(x)):
        return float(r)
    return x


def cheb_coeffs(s, M):
    """Coefficients ``a_{2k}(s)`` for ``k = 0..M`` by forward recursion."""
    M = _check_order(M)
    s = float(s)
    if s < 0:
        raise ValueError("s must be non-negative")
    if s > M:
        raise ValueError(f"s={s} exceeds the order M={M}")
    coeffs = np.empty(M + 1)
    coeffs[0] = 1.0
    four_s2 = (2.0 * s) ** 2
    for k in range(M):
        coeffs[k + 1] = coeffs[k] * (((2 * k) ** 2 - four_s2) / ((2 * k + 1) * (2 * k + 2)))
    coeffs.setflags(write=False)
    return ChebyshevSeries(s=s, order=M, coeffs=coeffs)


@lru_cache(maxsize=256)
def _exact_coeffs(s, M):
    # Integer numerators over a common denominator for a_0 .. a_{2(M-1)}.
    s = Fraction(s)
    four_s2 = 4 * s * s
    coeffs = [Fraction(1)]
    for k in range(M - 1):
        coeffs.append(coeffs[-1] * (Fraction((2 * k) ** 2) - four_s2) / ((2 * k + 1) * (2 * k + 2)))
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    return tuple(c.numerator * (den // c.denominator) for c in coeffs), den


def _exact_partial_sum(s, M, t):
    # Homogeneous Horner in t^2 = P/Q with Python integers; one rounding at the end.
    nums, den = _exact_coeffs(float(s), M)
    P, Q = float(t).as_integer_ratio()
    P, Q = P * P, Q * Q
    acc, qpow = nums[-1], 1
    for c in reversed(nums[:-1]):
        qpow *= Q
        acc = acc * P + c * qpow
    return acc / (den * qpow)


def even_solution_eval(series, t):
    """Partial sum ``sum_{k<M} a_{2k} t^{2k}``.

    Evaluated exactly in rational arithmetic and rounded once: the float
    sum cancels catastrophically for ``s`` of order 10 and ``|t|`` near 1.
    Accepts a scalar or an array of ``t``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.abs(t_arr) >= 1.0):
        raise ValueError("t must satisfy |t| < 1")
    if t_arr.ndim == 0:
        return _exact_partial_sum(series.s, series.order, float(t_arr))
    flat = [_exact_partial_sum(series.s, series.order, float(v)) for v in t_arr.ravel()]
    return np.array(flat).reshape(t_arr.shape)


def truncation_sign(s):
    """Common sign of ``a_{2k}(s)`` for ``k > s`` (non-integer ``s``).

    The factors with ``n <= floor(s)`` are negative, giving
    ``(-1)^(floor(s) + 1)``.
    """
    s = float(s)
    if s == int(s):
        raise ValueError("sign is undefined for integer s (the tail vanishes)")
    return -1 if math.floor(s) % 2 == 0 else 1


def _log_abs_a2m(s, M):
    terms = []
    four_s2 = (2.0 * s) ** 2
    for n in range(M):
        num = abs((2 * n) ** 2 - four_s2)
        if num == 0.0:
            return -math.inf
        terms.append(math.log(num) - math.log((2 * n + 1) * (2 * n + 2)))
    return math.fsum(terms)


def _abs_a2m(s, M):
    return math.exp(_log_abs_a2m(s, M))


def _check_s(s, M):
    if s < 0 or s > M:
        raise ValueError(f"s must lie in [0, M]=[0, {M}], got {s}")


def truncation_bound(s, M, eta):
    """Upper bound ``|a_{2M}(s)| eta^{2M} / (1 - eta^2)`` on ``|E_M(t)|``, ``|t| <= eta``."""
    M = _check_order(M)
    _check_eta(eta)
    s = _snap_integer(float(s))
    _check_s(s, M)
    return _abs_a2m(s, M) * eta ** (2 * M) / (1.0 - eta * eta)


def _tail_slope(M, eta):
    # d/d eta of eta^{2M} / (1 - eta^2), which dominates sum_{k>=M} 2k eta^{2k-1}.
    return 2.0 * eta ** (2 * M - 1) * (M - (M - 1) * eta * eta) / (1.0 - eta * eta) ** 2


def derivative_bound(s, M, eta):
    """Upper bound ``|a_{2M}(s)| d/d eta (eta^{2M} / (1 - eta^2))`` on ``max |E_M'(t)|``, ``|t| <= eta``."""
    M = _check_order(M)
    _check_eta(eta)
    s = _snap_integer(float(s))
    _check_s(s, M)
    return _abs_a2m(s, M) * _tail_slope(M, eta)


def f_alpha(alpha):
    """Exponent ``f(a) = ((1+a) log(1+a) + (1-a) log(1-a)) / 2`` (natural log)."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise ValueError("alpha must lie in [0, 1]")
    out = 0.5 * (xlogy(1.0 + a, 1.0 + a) + xlogy(1.0 - a, 1.0 - a))
    return float(out) if np.ndim(alpha) == 0 else out


def g_alpha(alpha):
    """``g = exp(f)``, increasing from 1 to 2 on ``[0, 1]``."""
    return np.exp(f_alpha(alpha)) if np.ndim(alpha) else math.exp(f_alpha(alpha))


def g_inverse(y, tol=1e-13):
    """Solve ``g(alpha) = y`` by bisection; clamps to 0 below 1 and to 1 above 2."""
    y = float(y)
    if y >= 2.0:
        return 1.0
    if y <= 1.0:
        return 0.0
    target = math.log(y)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f_alpha(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def finite_m_exponent(s, M):
    """``h(s) = log|a_{2M}(s)| / (2M)`` from the product form (non-integer ``s``)."""
    M = _check_order(M)
    s = float(s)
    _check_s(s, M)
    if s == int(s):
        raise ValueError("finite_m_exponent is undefined at integer s (a_{2M} = 0)")
    return _log_abs_a2m(s, M) / (2 * M)


def exponent_sum(s, M):
    """Riemann-sum exponent ``1 + sum_n log|(n/M)^2 - (s/M)^2| / (2M)``."""
    M = _check_order(M)
    s = float(s)
    _check_s(s, M)
    terms = [math.log(abs((n / M) ** 2 - (s / M) ** 2)) for n in range(M)]
    return 1.0 + math.fsum(terms) / (2 * M)


def stirling_bracket(s, M):
    """Lower/upper bracket on :func:`finite_m_exponent` from Stirling's bounds.

    With ``l = 2M``, ``sqrt(2 pi l)(l/e)^l <= l! <= e sqrt(l)(l/e)^l`` gives
    ``exponent_sum - log(2 e^2 M)/(4M) <= h <= exponent_sum - log(4 pi M)/(4M)``.
    """
    fs = exponent_sum(s, M)
    return fs - math.log(2 * math.e**2 * M) / (4 * M), fs - math.log(4 * math.pi * M) / (4 * M)


def _probe_ratio(s, M, rho):
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    s = float(s)
    if s < 0 or s > M * rho * (1 + 1e-12):
        raise ValueError(f"probe s must lie in [0, M*rho]=[0, {M * rho}], got {s}")
    return min(_snap_integer(s / rho), float(M))


def minimax_real_bound(s, M, rho):
    """Bound on the linear minimax error for ``cos(pi s xi)``."""
    M = _check_order(M)
    x = _probe_ratio(s, M, rho)
    eta = math.sin(math.pi * rho / 2)
    return _abs_a2m(x, M) * eta ** (2 * M) / (1.0 - eta * eta)


def minimax_imag_bound(s, M, rho):
    """Bound on the linear minimax error for ``sin(pi s xi)``; zero at ``s = 0``."""
    M = _check_order(M)
    x = _probe_ratio(s, M, rho)
    if s == 0:
        return 0.0
    eta = math.sin(math.pi * rho / 2)
    a = _abs_a2m(x, M)
    if a == 0.0:
        return 0.0
    return a * _tail_slope(M, eta) / (2.0 * float(s))


def asymptotic_width(s, M, rho):
    """Exponent-rate curve ``(sin(pi rho / 2) g(s / (M rho)))^{2M}`` (constant 1)."""
    alpha = min(max(float(s) / (M * rho), 0.0), 1.0)
    return (math.sin(math.pi * rho / 2) * g_alpha(alpha)) ** (2 * M)


def width_bound(s, M, rho):
    """Finite-M bound ``min(2 (e_r + e_i), 2)`` on the width at probe ``s``."""
    er = minimax_real_bound(s, M, rho)
    ei = minimax_imag_bound(s, M, rho)
    return WidthBound(
        s=float(s),
        bound=min(2.0 * (er + ei), 2.0),
        real_part=er,
        imag_part=ei,
        asymptotic=asymptotic_width(s, M, rho),
    )
