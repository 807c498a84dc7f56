"""Bessel functions J0, I0 and the constant A0.

All evaluators are vectorized over numpy arrays and return floats for
scalar input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from racelab.errors import ConfigError, ConvergenceError

# series / recurrence / asymptotic branch points
J0_SERIES_MAX = 4.0
J0_ASYMPTOTIC_MIN = 25.0
I0_ASYMPTOTIC_MIN = 30.0


def _scalar_or_array(x_in, out):
    return float(out) if np.ndim(x_in) == 0 else out


def _hankel_coefficients(nu: int, count: int) -> np.ndarray:
    """a_k(nu) of the Hankel expansion, k = 0..count-1."""
    a = np.empty(count)
    a[0] = 1.0
    for k in range(1, count):
        a[k] = a[k - 1] * (4 * nu * nu - (2 * k - 1) ** 2) / (k * 8.0)
    return a


_A0 = _hankel_coefficients(0, 24)
_A1 = _hankel_coefficients(1, 24)


def _j0_series(x):
    y = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for m in range(1, 30):
        term = term * y / (m * m)
        total = total + term
    return total


def _j0_miller(x):
    n_start = 2 * int(math.ceil((float(np.max(x)) + 30.0) / 2.0))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for k in range(n_start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{k-1}
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm = norm + 2.0 * j_cur
        big = np.abs(j_cur) > 1e150
        if np.any(big):
            scale = np.where(big, 1e-150, 1.0)
            j_cur, j_next, norm = j_cur * scale, j_next * scale, norm * scale
    norm = norm + j_cur
    return j_cur / norm


def _j0_hankel(x):
    inv = 1.0 / x
    p = np.zeros_like(x)
    qq = np.zeros_like(x)
    # P = sum (-1)^k a_{2k} x^{-2k},  Q = sum (-1)^k a_{2k+1} x^{-(2k+1)}
    for k in range(11, -1, -1):
        p = p * inv * inv + (-1) ** k * _A0[2 * k]
        qq = qq * inv * inv + (-1) ** k * _A0[2 * k + 1]
    qq = qq * inv
    w = x - math.pi / 4
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(w) - qq * np.sin(w))


def bessel_j0(t):
    """Bessel function of the first kind, order 0."""
    x = np.abs(np.asarray(t, dtype=float))
    out = np.empty_like(x)
    s = x < J0_SERIES_MAX
    a = x >= J0_ASYMPTOTIC_MIN
    m = ~(s | a)
    if np.any(s):
        out[s] = _j0_series(x[s])
    if np.any(m):
        out[m] = _j0_miller(x[m])
    if np.any(a):
        out[a] = _j0_hankel(x[a])
    return _scalar_or_array(t, out)


def _i_series(x, nu: int, drop_first: bool = False):
    """Power series of I_nu; drop_first omits the k = 0 term (for log1p)."""
    y = 0.25 * x * x
    term = (0.5 * x) ** nu / math.factorial(nu) * np.ones_like(x)
    total = np.zeros_like(x) if drop_first else term.copy()
    for k in range(1, 90):
        term = term * y / (k * (k + nu))
        total = total + term
    return total


def _i_asym_sum(x, coeffs):
    # sum (-1)^k a_k(nu) x^{-k}
    inv = 1.0 / x
    s = np.zeros_like(x)
    for k in range(len(coeffs) - 1, -1, -1):
        s = s * inv + (-1) ** k * coeffs[k]
    return s


def log_i0e(t):
    """log(I0(t)) - |t|, stable for arbitrarily large |t|."""
    x = np.abs(np.asarray(t, dtype=float))
    out = np.empty_like(x)
    s = x < I0_ASYMPTOTIC_MIN
    if np.any(s):
        out[s] = np.log1p(_i_series(x[s], 0, drop_first=True)) - x[s]
    a = ~s
    if np.any(a):
        xa = x[a]
        out[a] = -0.5 * np.log(2 * math.pi * xa) + np.log(_i_asym_sum(xa, _A0))
    return _scalar_or_array(t, out)


def bessel_i0(t):
    """Modified Bessel function I0; overflows to inf beyond t ~ 713."""
    x = np.abs(np.asarray(t, dtype=float))
    with np.errstate(over="ignore"):
        out = np.where(x < I0_ASYMPTOTIC_MIN, _i_series(np.minimum(x, I0_ASYMPTOTIC_MIN), 0),
                       np.exp(log_i0e(x) + x))
    return _scalar_or_array(t, out)


def log_i0(t):
    x = np.asarray(t, dtype=float)
    if np.any(x < 0):
        raise ConfigError("log_i0 requires t >= 0")
    out = np.empty_like(x)
    s = x < I0_ASYMPTOTIC_MIN
    # direct log1p keeps full relative accuracy as t -> 0
    if np.any(s):
        out[s] = np.log1p(_i_series(x[s], 0, drop_first=True))
    if np.any(~s):
        out[~s] = np.asarray(log_i0e(x[~s])) + x[~s]
    return _scalar_or_array(t, out)


def i1_over_i0(t):
    """I1(t)/I0(t), the derivative of log I0; odd in t, |value| < 1."""
    x0 = np.asarray(t, dtype=float)
    x = np.abs(x0)
    out = np.empty_like(x)
    s = x < I0_ASYMPTOTIC_MIN
    if np.any(s):
        out[s] = _i_series(x[s], 1) / _i_series(x[s], 0)
    a = ~s
    if np.any(a):
        out[a] = _i_asym_sum(x[a], _A1) / _i_asym_sum(x[a], _A0)
    return _scalar_or_array(t, np.sign(x0) * out)


def f_clipped(t):
    """log I0(t) on [0, 1) and log I0(t) - t on [1, inf); jumps by -1 at t = 1."""
    x = np.asarray(t, dtype=float)
    if np.any(x < 0):
        raise ConfigError("f_clipped requires t >= 0")
    out = np.where(x < 1.0, log_i0(np.minimum(x, 1.0)), log_i0e(x))
    return _scalar_or_array(t, out)


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod quadrature

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WGAUSS = np.zeros(15)
_WGAUSS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "gk15"
    abs_tol: float = 1e-10
    max_depth: int = 60
    rel_tol: float = 0.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ConfigError("abs_tol must be positive")
        if self.rel_tol < 0:
            raise ConfigError("rel_tol must be non-negative")
        if self.scheme != "gk15":
            raise ConfigError(f"unknown quadrature scheme {self.scheme!r}")


def _gk15(f, a, b):
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    fx = np.asarray(f(c + h * _NODES), dtype=float)
    k = h * np.dot(_WK, fx)
    g = h * np.dot(_WGAUSS, fx)
    return k, abs(k - g)


def adaptive_quad(f: Callable, a: float, b: float, spec: QuadratureSpec = QuadratureSpec()):
    """Globally adaptive GK15; returns (value, error estimate).

    f must accept a numpy array of nodes. Intervals are bisected, worst
    first, until the summed Kronrod-Gauss error is below
    max(spec.abs_tol, spec.rel_tol * |value|).
    """
    k, e = _gk15(f, a, b)
    panels = [(e, a, b, k, 0)]
    total, err = k, e
    while err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        panels.sort(key=lambda p: p[0])
        e0, a0, b0, k0, d0 = panels.pop()
        if d0 >= spec.max_depth:
            raise ConvergenceError(
                f"quadrature on [{a}, {b}] stalled at depth {d0}: error {err:.3g} > {spec.abs_tol:.3g}"
            )
        m = 0.5 * (a0 + b0)
        k1, e1 = _gk15(f, a0, m)
        k2, e2 = _gk15(f, m, b0)
        panels += [(e1, a0, m, k1, d0 + 1), (e2, m, b0, k2, d0 + 1)]
        total += k1 + k2 - k0
        err += e1 + e2 - e0
        if len(panels) > 20000:
            raise ConvergenceError("quadrature panel budget exhausted")
    # re-sum to shed accumulated update round-off
    return math.fsum(p[3] for p in panels), math.fsum(p[0] for p in panels)


_TAYLOR_CUT = 1e-3


def a0_constant(spec: QuadratureSpec = QuadratureSpec()) -> float:
    """A0 = int_0^1 log I0(t)/t^2 dt + int_1^inf (log I0(t) - t)/t^2 dt + 1.

    [0, 1e-3] uses the Taylor series log I0(t)/t^2 = 1/4 - t^2/64 + t^4/576;
    [1, inf) is mapped to (0, 1] by u = 1/t, where the integrand
    log I0(1/u) - 1/u has an integrable log singularity at u = 0.
    """
    if spec.abs_tol > 1e-8:
        raise ConfigError("a0_constant needs abs_tol <= 1e-8")
    h = _TAYLOR_CUT
    head = h / 4 - h**3 / 192 + h**5 / 2880
    tol = QuadratureSpec(spec.scheme, spec.abs_tol / 3, spec.max_depth, spec.rel_tol)
    mid, _ = adaptive_quad(lambda t: np.asarray(log_i0(t)) / t**2, h, 1.0, tol)
    tail, _ = adaptive_quad(lambda u: np.asarray(log_i0e(1.0 / u)), 0.0, 1.0, tol)
    return head + mid + tail + 1.0


@dataclass(frozen=True)
class A0Parts:
    head: float  # int_0^1 log I0(t)/t^2
    tail: float  # int_1^inf (log I0(t) - t)/t^2


def a0_parts(spec: QuadratureSpec = QuadratureSpec(abs_tol=1e-10)) -> A0Parts:
    h = _TAYLOR_CUT
    mid, _ = adaptive_quad(lambda t: np.asarray(log_i0(t)) / t**2, h, 1.0, spec)
    tail, _ = adaptive_quad(lambda u: np.asarray(log_i0e(1.0 / u)), 0.0, 1.0, spec)
    return A0Parts(h / 4 - h**3 / 192 + h**5 / 2880 + mid, tail)
