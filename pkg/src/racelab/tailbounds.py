"""Analytic tail bounds and the large-deviation asymptotics of Y(q).

Y(q) = sum_n w_n cos(2 pi theta_n) with w_n = 2/sqrt(1/4 + gamma_n^2),
so in the Montgomery-Odlyzko normalization Y = sum Y_n / r_n with
r_n = 1/w_n and |Y_n| <= 1. Its Laplace transform is
L(s) = E[e^{sY}] = prod_n I0(s w_n).
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from racelab.errors import ConfigError, ConvergenceError, DataError
from racelab.modchar import CharacterGroup, Modulus, prime_log_sum
from racelab.specfun import QuadratureSpec, a0_constant, adaptive_quad, i1_over_i0, log_i0
from racelab.zerodata import ZeroSet, spectral_sums

REGIMES = ("intermediate", "transition", "deep")
LAPLACE_COMPLETIONS = ("none", "quadratic", "continuum")


@lru_cache(maxsize=1)
def default_a0() -> float:
    return a0_constant()


# ---------------------------------------------------------------------------
# Montgomery-Odlyzko bounds


@dataclass(frozen=True)
class MOBound:
    bound: float
    T_used: float  # threshold on r_n; 0 when no term is gated
    terms_gated: int
    tail_sum: float  # sum of r_n^-2 over r_n > T_used
    log_bound: float = math.nan


def _mo_arrays(Z: ZeroSet):
    w = Z.pooled_weights  # 1/r_n, descending, so r_n ascending
    cum = np.cumsum(w)
    sq = (w * w)[::-1]
    suffix = np.cumsum(sq)[::-1]  # suffix[k] = sum_{n >= k} w_n^2
    return w, cum, np.append(suffix, 0.0)


def mo_upper(Z: ZeroSet, V: float) -> MOBound:
    """exp(-V^2 / (16 sum_{r_n > T} r_n^-2)) with the largest T whose gate sum <= V/2."""
    if not V > 0:
        raise ConfigError("mo_upper needs V > 0")
    w, cum, suffix = _mo_arrays(Z)
    k = int(np.searchsorted(cum, V / 2, side="right"))
    tail = float(suffix[k])
    log_b = -math.inf if tail == 0.0 else -V * V / (16 * tail)
    T = 0.0 if k == 0 else float(1.0 / w[k - 1])
    return MOBound(math.exp(log_b), T, k, tail, log_b)


def mo_lower(Z: ZeroSet, V: float, a1: float, a2: float) -> MOBound:
    """a1 exp(-a2 V^2 / sum_{r_n > T} r_n^-2) with the smallest T whose gate sum >= 2V."""
    if not V > 0:
        raise ConfigError("mo_lower needs V > 0")
    if not (a1 > 0 and a2 > 0):
        raise ConfigError("a1 and a2 must be positive")
    w, cum, suffix = _mo_arrays(Z)
    k = int(np.searchsorted(cum, 2 * V, side="left")) + 1
    if k > len(w):
        raise DataError(f"no threshold passes the lower gate at V={V}: stored sum of 1/r_n is "
                        f"{float(cum[-1]) if len(cum) else 0.0:.6g} < 2V; extend the zero horizon")
    tail = float(suffix[k])
    log_b = -math.inf if tail == 0.0 else math.log(a1) - a2 * V * V / tail
    return MOBound(math.exp(log_b), float(1.0 / w[k - 1]), k, tail, log_b)


def classify_regime(m: Modulus, V: float) -> str:
    """intermediate below 10 phi log q, transition below 10 phi log^2 q, deep beyond."""
    scale = m.totient * math.log(m.q)
    if V < 10 * scale:
        return "intermediate"
    if V < 10 * scale * math.log(m.q):
        return "transition"
    return "deep"


@dataclass(frozen=True)
class BoundReport:
    regime: str
    upper: float
    lower: float
    parameters: dict = field(default_factory=dict)


def regime_envelopes(Z: ZeroSet, m: Modulus, V: float, r: int, a1: float = 1.0, a2: float = 16.0) -> BoundReport:
    """Envelopes for mu(||x|| > V) in dimension r.

    Uses P(Y > 2V) <= mu(||x|| > V) <= 2r P(Y > V/(2 sqrt r)) with the
    Montgomery-Odlyzko bounds on each side. The proof thresholds
    T = exp(V/(10 phi log q)) (upper) and exp(50 V/(phi log q)) (lower) are
    recorded along with the exponent shapes; the bounds themselves use
    the optimal admissible threshold on the stored data.
    """
    if not V > 0:
        raise ConfigError("V must be positive")
    if r < 1:
        raise ConfigError("r must be >= 1")
    if Z.q != m.q:
        raise ConfigError("zero set and modulus disagree")
    scale = m.totient * math.log(m.q)
    up = mo_upper(Z, V / (2 * math.sqrt(r)))
    upper = min(1.0, 2 * r * up.bound)
    try:
        lo = mo_lower(Z, 2 * V, a1, a2)
        lower, T_lo = min(lo.bound, upper), lo.T_used
    except DataError:
        lower, T_lo = 0.0, None
    params = {
        "V_over_phi_log_q": V / scale,
        "V_over_phi_log2_q": V / (scale * math.log(m.q)),
        "T_upper": up.T_used,
        "T_lower": T_lo,
        "T_proof_upper": math.exp(min(V / (10 * scale), 700.0)),
        "T_proof_lower": math.exp(min(50 * V / scale, 700.0)),
        "a1": a1,
        "a2": a2,
        "gaussian_shape_exponent": V * V / scale,
        "deep_shape_exponent": V * V / scale * math.exp(min(V / scale, 700.0)),
    }
    return BoundReport(classify_regime(m, V), upper, lower, params)


# ---------------------------------------------------------------------------
# Laplace transform


def _rho(Z: ZeroSet, t):
    """Smooth zero density sum_chi (1/2pi) log(q*_chi t / 2pi), clipped at 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for qs, mult in Counter(Z.conductors.values()).items():
        out += mult * np.maximum(np.log(qs * t / (2 * math.pi)), 0.0)
    return out / (2 * math.pi)


def _rho_inverse_square(Z: ZeroSet, t0: float) -> float:
    """int_{t0}^inf rho(t) / t^2 dt, for t0 beyond 2 pi / q*."""
    return math.fsum((math.log(qs * t0 / (2 * math.pi)) + 1.0) / (2 * math.pi * t0)
                     for qs in Z.conductors.values())


def vm_cos_variance(kappa):
    """Var cos(phi) for phi von Mises with concentration kappa: 1 - A/kappa - A^2, A = I1/I0."""
    k = np.asarray(kappa, dtype=float)
    out = np.empty_like(k)
    big = k > 1e3
    small = k < 1e-6
    mid = ~(big | small)
    kb = k[big]
    inv = 1 / kb
    out[big] = inv * inv * (0.5 + inv * (0.25 + inv * (0.375 + inv * 0.78125)))
    ks = k[small]
    out[small] = 0.5 - ks * ks / 16
    km = k[mid]
    A = np.asarray(i1_over_i0(km))
    out[mid] = 1 - A / km - A * A
    return float(out) if np.ndim(kappa) == 0 else out


@dataclass(frozen=True)
class ContinuumTerms:
    """Smooth-density model of the zeros beyond the horizon H, tilted by s."""

    logL: float
    mean: float  # tilted mean of the continuum part of Y
    var: float  # tilted variance
    H: float


def continuum_terms(Z: ZeroSet, s: float, H: float | None = None) -> ContinuumTerms:
    """Integrate log I0(s w), w A(s w) and w^2 var(s w) against rho on (H, inf).

    Quadrature runs in u = log t up to t = 2s e^40 (or H e^40); beyond that
    the small-argument forms x^2/4, s w^2/2 and w^2/2 are integrated exactly.
    """
    if s < 0:
        raise ConfigError("s must be >= 0")
    H = Z.min_horizon if H is None else H
    if H <= 0:
        raise DataError("continuum model needs a positive horizon")
    u0 = math.log(H)
    u1 = max(u0, math.log(max(2 * s, 1.0))) + 40.0
    spec = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-12, max_depth=50)

    def weights(u):
        t = np.exp(u)
        return t, 2.0 / np.sqrt(0.25 + t * t), _rho(Z, t) * t

    def g_logl(u):
        t, w, jac = weights(u)
        return np.asarray(log_i0(s * w)) * jac

    def g_mean(u):
        t, w, jac = weights(u)
        return w * np.asarray(i1_over_i0(s * w)) * jac

    def g_var(u):
        t, w, jac = weights(u)
        return w * w * np.asarray(vm_cos_variance(s * w)) * jac

    t1 = math.exp(u1)
    far = _rho_inverse_square(Z, t1)  # int rho/t^2 beyond t1; w^2 ~ 4/t^2 there
    if s == 0:
        logl, mean = 0.0, 0.0
    else:
        logl = adaptive_quad(g_logl, u0, u1, spec)[0] + s * s * far
        mean = adaptive_quad(g_mean, u0, u1, spec)[0] + 2 * s * far
    var = adaptive_quad(g_var, u0, u1, spec)[0] + 2 * far
    return ContinuumTerms(logl, mean, var, H)


def laplace_logL(Z: ZeroSet, s: float, completion: str = "quadratic") -> float:
    """log L(s) = sum over stored ordinates of log I0(2s/sqrt(1/4+gamma^2)) plus a tail model.

    ``quadratic`` adds s^2 S2 (log I0(x) ~ x^2/4 beyond the horizon, S2 from
    the smooth zero density),
    ``continuum`` integrates log I0 against the smooth zero density,
    ``none`` keeps the stored sum only.
    """
    if not s > 0:
        raise ConfigError("laplace_logL needs s > 0")
    stored = math.fsum(np.asarray(log_i0(s * Z.pooled_weights), dtype=float))
    if completion == "none":
        return stored
    if completion == "quadratic":
        H = Z.min_horizon
        return stored + s * s * spectral_sums(Z, H, complete_tail=True, mode="density").S2
    if completion == "continuum":
        return stored + continuum_terms(Z, s).logL
    raise ConfigError(f"unknown completion {completion!r}; choose from {LAPLACE_COMPLETIONS}")


def laplace_dlogL(Z: ZeroSet, s: float, completion: str = "none") -> float:
    """d/ds log L(s): the mean of Y under the tilt e^{sY}."""
    w = Z.pooled_weights
    stored = math.fsum(w * np.asarray(i1_over_i0(s * w)))
    if completion == "none":
        return stored
    if completion == "quadratic":
        return stored + 2 * s * spectral_sums(Z, Z.min_horizon, complete_tail=True, mode="density").S2
    if completion == "continuum":
        return stored + continuum_terms(Z, s).mean
    raise ConfigError(f"unknown completion {completion!r}; choose from {LAPLACE_COMPLETIONS}")


def model_saddle(Z: ZeroSet, V: float, completion: str = "none", log_s_guess: float | None = None) -> float:
    """s with d/ds log L(s) = V, solved in log s.

    Without completion the tilted mean is bounded by sum w_n, so V must
    lie below it.
    """
    if not V > 0:
        raise ConfigError("V must be positive")
    if completion == "none":
        top = float(np.sum(Z.pooled_weights))
        if V >= top:
            raise DataError(f"V={V} is at or beyond the support bound {top:.6g} of the stored model")

    def g(u):
        return laplace_dlogL(Z, math.exp(u), completion) - V

    lo, hi = -40.0, 5.0 if log_s_guess is None else log_s_guess + 2.0
    while g(hi) < 0:
        hi += 4.0
        if hi > 700:
            raise ConvergenceError("saddle bracket overflow")
    if log_s_guess is not None:
        lo = min(log_s_guess - 4.0, hi - 1.0)
        while g(lo) > 0 and lo > -40:
            lo -= 4.0
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-13, rtol=1e-15))


# ---------------------------------------------------------------------------
# saddle and deep-tail asymptotics


def d_constant(m: Modulus, A0: float | None = None) -> float:
    """D(q) = phi(log q - sum log p/(p-1)) + (phi - 1)(A0 - 1 - log pi)."""
    A0 = default_a0() if A0 is None else A0
    phi = m.totient
    return phi * (math.log(m.q) - prime_log_sum(m)) + (phi - 1) * (A0 - 1 - math.log(math.pi))


def l_constant(m: Modulus, A0: float | None = None) -> float:
    """L(q) = phi/(phi-1)(log q - sum log p/(p-1)) + A0 - log pi."""
    A0 = default_a0() if A0 is None else A0
    phi = m.totient
    return phi / (phi - 1) * (math.log(m.q) - prime_log_sum(m)) + A0 - math.log(math.pi)


def _check_group(m: Modulus, G: CharacterGroup):
    if G.modulus.q != m.q:
        raise ConfigError(f"character group is mod {G.modulus.q}, modulus is {m.q}")


def prop43_asymptotic(m: Modulus, G: CharacterGroup, s: float, A0: float | None = None) -> tuple[float, float]:
    """((phi-1)/2pi s log^2 s + D/pi s log s, D(q))."""
    _check_group(m, G)
    if not s > math.e:
        raise ConfigError("the two-term asymptotic needs s > e")
    D = d_constant(m, A0)
    ls = math.log(s)
    return (m.totient - 1) / (2 * math.pi) * s * ls * ls + D / math.pi * s * ls, D


def log_s_from_saddle(phi_minus_1: float, D: float, V: float) -> float:
    """Root of 2 pi V = (phi-1) log^2 s + 2(D + phi - 1) log s with log s > 0."""
    if not phi_minus_1 > 0:
        raise ConfigError("phi(q) - 1 must be positive")
    if not V > 0:
        raise ConfigError("V must be positive")
    b = D / phi_minus_1 + 1.0
    c = 2 * math.pi * V / phi_minus_1
    root = math.sqrt(b * b + c)
    return c / (b + root) if b > 0 else root - b


def saddle_residual(phi_minus_1: float, D: float, V: float, log_s: float) -> float:
    """Relative residual of the saddle equation."""
    lhs = 2 * math.pi * V
    rhs = phi_minus_1 * log_s * log_s + 2 * (D + phi_minus_1) * log_s
    return abs(lhs - rhs) / abs(lhs)


@dataclass(frozen=True)
class SaddleContext:
    q: int
    phi: int
    D_q: float
    L_q: float
    A0: float
    V: float
    s_star: float
    log_s: float
    residual: float


def saddle_solve(m: Modulus, G: CharacterGroup, V: float, A0: float | None = None) -> SaddleContext:
    _check_group(m, G)
    A0 = default_a0() if A0 is None else A0
    D = d_constant(m, A0)
    log_s = log_s_from_saddle(m.totient - 1, D, V)
    res = saddle_residual(m.totient - 1, D, V, log_s)
    if res > 1e-9:
        raise ConvergenceError(f"saddle residual {res:.3g} exceeds 1e-9")
    s = math.exp(log_s) if log_s < 709 else math.inf
    return SaddleContext(m.q, m.totient, D, l_constant(m, A0), A0, V, s, log_s, res)


def saddle_shape_check(ctx: SaddleContext, C: float = 10.0) -> tuple[float, float]:
    """(|log s / sqrt(2 pi V/(phi-1)) - 1|, C (phi log^2 q / V)^(1/2))."""
    lead = math.sqrt(2 * math.pi * ctx.V / (ctx.phi - 1))
    allowance = C * math.sqrt(ctx.phi * math.log(ctx.q) ** 2 / ctx.V)
    return abs(ctx.log_s / lead - 1.0), allowance


@dataclass(frozen=True)
class Theorem4Tail:
    log_tail: float  # -inf once the tail underflows double range twice over
    L_q: float
    error_factor: float
    log_neg_log_tail: float  # log(-log_tail), always finite


def theorem4_tail(m: Modulus, G: CharacterGroup, V: float, A0: float | None = None) -> Theorem4Tail:
    """log mu(|x|_inf > V) ~ -e^{-L} sqrt(2(phi-1)V/pi) exp(sqrt(L^2 + 2 pi V/(phi-1)))."""
    _check_group(m, G)
    if not V > 0:
        raise ConfigError("V must be positive")
    phi = m.totient
    L = l_constant(m, A0)
    ratio = V / (phi * math.log(m.q) ** 2)
    if ratio < 10:
        warnings.warn(f"V/(phi log^2 q) = {ratio:.3g} < 10: outside the deep-tail range", stacklevel=2)
    expo = -L + math.sqrt(L * L + 2 * math.pi * V / (phi - 1))
    lnl = 0.5 * math.log(2 * (phi - 1) * V / math.pi) + expo
    log_tail = -math.exp(lnl) if lnl < 709 else -math.inf
    return Theorem4Tail(log_tail, L, ratio ** -0.25, lnl)
