"""Critical-line zeros of Dirichlet L-functions for small conductors.

L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q), with each Hurwitz zeta
summed directly for N terms and completed by Euler-Maclaurin. On the
critical line the rotated function

    Z(t) = Re( eps^{-1/2} e^{i theta(t)} L(1/2 + it, chi) ),
    theta(t) = (t/2) log(q/pi) + Im log Gamma((1/2 + kappa + it)/2),

is real (eps is the root number), so zeros are sign changes of Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from racelab.errors import ConfigError, ConvergenceError, DataError
from racelab.modchar import CharacterGroup, DirichletCharacter, conrey_character, primitive_character
from racelab.zerodata import ZeroSet, _zero_set, smooth_count

MAX_CONDUCTOR = 50
MAX_HEIGHT = 2000.0
EM_TERMS = 20
SCAN_STEP = 0.05
_CHUNK_ELEMENTS = 2_000_000

_B2K = np.array([float(special.bernoulli(2 * k)[2 * k]) for k in range(1, EM_TERMS + 2)])
_FACT2K = np.array([math.factorial(2 * k) for k in range(1, EM_TERMS + 2)], dtype=float)


@dataclass(frozen=True)
class CriticalLineEvaluation:
    chi: DirichletCharacter
    t: float
    value: complex
    est_abs_error: float


def _check_primitive(chi: DirichletCharacter):
    if chi.is_principal:
        raise ConfigError("L-values of the principal character are not supported")
    if not chi.is_primitive:
        raise ConfigError(f"character {chi.q}.{chi.conrey_index} is not primitive; use its inducing character")
    if chi.q > MAX_CONDUCTOR:
        raise ConfigError(f"conductor {chi.q} exceeds {MAX_CONDUCTOR}")


class _LEvaluator:
    """Vectorized L(1/2 + it, chi) for one primitive character."""

    def __init__(self, chi: DirichletCharacter):
        _check_primitive(chi)
        self.chi = chi
        q = chi.q
        self.q = q
        self.units = np.array([a for a in range(1, q + 1) if math.gcd(a, q) == 1], dtype=float)
        self.unit_vals = chi.values(self.units.astype(np.int64))
        self.kappa = chi.parity
        tau = complex(np.sum(chi.values(np.arange(q)) * np.exp(2j * np.pi * np.arange(q) / q)))
        self.epsilon = tau / ((1j) ** self.kappa * math.sqrt(q))
        self.rot = 1 / np.sqrt(self.epsilon + 0j)
        self._series = {}

    def _partial_series(self, N: int):
        if N not in self._series:
            if len(self._series) > 64:
                self._series.clear()
            m = np.arange(1, self.q * N + 1)
            chi_m = self.chi.values(m)
            keep = chi_m != 0
            self._series[N] = (np.log(m[keep].astype(float)), chi_m[keep] / np.sqrt(m[keep]))
        return self._series[N]

    def _length(self, tmax: float) -> int:
        return int(math.ceil(0.5 * tmax + 30))

    def values(self, ts) -> tuple[np.ndarray, np.ndarray]:
        """(L(1/2 + it), error estimate) for an array of t."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if np.any(np.abs(ts) > MAX_HEIGHT):
            raise ConfigError(f"|t| must be <= {MAX_HEIGHT}")
        out = np.empty(ts.shape, dtype=complex)
        err = np.empty(ts.shape)
        order = np.argsort(np.abs(ts))
        i = 0
        while i < len(ts):
            # the series length grows with |t|, so chunk in increasing |t|
            N = self._length(float(abs(ts[order[min(i + 255, len(ts) - 1)]])))
            logm, coef = self._partial_series(N)
            step = max(1, min(256, _CHUNK_ELEMENTS // len(logm)))
            sel = order[i:i + step]
            tt = ts[sel]
            N = self._length(float(np.max(np.abs(tt))))
            logm, coef = self._partial_series(N)
            tail, e = self._em_tail(tt, N)
            out[sel] = np.exp(-1j * np.outer(tt, logm)) @ coef + tail
            err[sel] = e
            i += step
        return out, err

    def _em_tail(self, tt: np.ndarray, N: int):
        s = 0.5 + 1j * tt  # (k,)
        x = N + self.units / self.q  # (u,)
        logx = np.log(x)
        xs = np.exp(-np.outer(s, logx))  # x^{-s}, (k, u)
        total = xs * (x / (s[:, None] - 1)) + 0.5 * xs
        rising = s.copy()  # (s)_{2k-1}
        xpow = xs / x  # x^{-s-1}
        last = np.zeros(len(tt))
        for k in range(1, EM_TERMS + 2):
            term = (_B2K[k - 1] / _FACT2K[k - 1]) * rising[:, None] * xpow
            if k <= EM_TERMS:
                total = total + term
            else:
                last = np.abs(term) @ np.ones(len(x))
            rising = rising * (s + 2 * k - 1) * (s + 2 * k)
            xpow = xpow / (x * x)
        qs = np.exp(-s * math.log(self.q))
        tail = qs * (total @ self.unit_vals)
        return tail, 2 * np.abs(qs) * last

    def theta(self, ts):
        ts = np.asarray(ts, dtype=float)
        return 0.5 * ts * math.log(self.q / math.pi) + np.imag(special.loggamma((0.5 + self.kappa + 1j * ts) / 2))

    def hardy(self, ts) -> np.ndarray:
        L, _ = self.values(ts)
        return np.real(self.rot * np.exp(1j * self.theta(ts)) * L)

    def hardy_complex(self, ts) -> np.ndarray:
        L, _ = self.values(ts)
        return self.rot * np.exp(1j * self.theta(ts)) * L


@lru_cache(maxsize=256)
def _evaluator(q: int, m: int) -> _LEvaluator:
    return _LEvaluator(conrey_character(q, m))


def l_value(chi: DirichletCharacter, t: float, tol: float = 1e-10) -> CriticalLineEvaluation:
    """L(1/2 + it, chi) for primitive chi with conductor <= 50 and |t| <= 2000."""
    if tol < 1e-10:
        raise ConfigError("tol must be >= 1e-10")
    ev = _evaluator(chi.q, chi.conrey_index)
    val, err = ev.values([t])
    # phase round-off in t log m, accumulated as a random walk over the partial sum
    M = ev.q * ev._length(abs(t))
    est = float(err[0]) + 2.3e-16 * (abs(t) * math.log(M) + 1) * math.sqrt(math.log(M) + 1)
    if est > tol:
        raise ConvergenceError(f"L-value error estimate {est:.3g} exceeds tol {tol:.3g}")
    return CriticalLineEvaluation(chi, float(t), complex(val[0]), est)


def _refine_roots(f, a, b, fa, fb, xtol: float, max_iter: int = 200) -> np.ndarray:
    """Illinois regula falsi on many sign-change brackets at once."""
    a, b, fa, fb = (np.array(v, dtype=float) for v in (a, b, fa, fb))
    side = np.zeros(len(a), dtype=int)
    active = np.ones(len(a), dtype=bool)
    for _ in range(max_iter):
        active &= (b - a) > xtol
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        c = (a[idx] * fb[idx] - b[idx] * fa[idx]) / (fb[idx] - fa[idx])
        # keep the iterate strictly inside; bisect when the secant stalls at an end
        bad = ~((c > a[idx]) & (c < b[idx]))
        c[bad] = 0.5 * (a[idx][bad] + b[idx][bad])
        fc = f(c)
        left = np.sign(fc) == np.sign(fa[idx])
        for j, i in enumerate(idx):
            if fc[j] == 0.0:
                a[i] = b[i] = c[j]
            elif left[j]:
                a[i], fa[i] = c[j], fc[j]
                if side[i] == -1:
                    fb[i] *= 0.5
                side[i] = -1
            else:
                b[i], fb[i] = c[j], fc[j]
                if side[i] == 1:
                    fa[i] *= 0.5
                side[i] = 1
    else:
        raise ConvergenceError("zero refinement did not converge")
    return 0.5 * (a + b)


@dataclass(frozen=True)
class ZeroScan:
    zeros: np.ndarray
    expected: float
    step: float
    certified: bool


def zero_scan(chi: DirichletCharacter, T: float, tol: float = 1e-10, xtol: float = 1e-12) -> np.ndarray:
    """Sorted zero ordinates of L(s, chi) in (0, T]."""
    return scan_zeros(chi, T, tol, xtol).zeros


def scan_zeros(chi: DirichletCharacter, T: float, tol: float = 1e-10, xtol: float = 1e-12) -> ZeroScan:
    """Scan Z(t) for sign changes; refine the grid tenfold if the count disagrees with N_chi(T) by > 2."""
    _check_primitive(chi)
    if not 0 < T <= MAX_HEIGHT:
        raise ConfigError(f"T must lie in (0, {MAX_HEIGHT}]")
    ev = _evaluator(chi.q, chi.conrey_index)
    expected = float(smooth_count(chi.q, T)) if T > 2 * math.pi * math.e / chi.q else 0.0
    step = SCAN_STEP
    for attempt in range(2):
        n = int(math.ceil(T / step))
        grid = np.linspace(0.0, n * step, n + 1)
        z = ev.hardy(grid)
        idx = np.nonzero(np.sign(z[:-1]) * np.sign(z[1:]) < 0)[0]
        roots = _refine_roots(ev.hardy, grid[idx], grid[idx + 1], z[idx], z[idx + 1], xtol)
        roots = roots[(roots > 0) & (roots <= T)]
        if abs(len(roots) - expected) <= 2:
            break
        step /= 10
    else:
        raise ConvergenceError(
            f"zero count {len(roots)} for {chi.q}.{chi.conrey_index} up to T={T} differs from "
            f"the smooth count {expected:.2f} by more than 2 after grid refinement")
    if len(roots) > 1 and np.min(np.diff(roots)) <= 1e-6:
        raise DataError(f"zeros of {chi.q}.{chi.conrey_index} closer than 1e-6: simplicity unresolved")
    return ZeroScan(roots, expected, step, True)


@lru_cache(maxsize=512)
def _primitive_zeros(q: int, m: int, T: float, tol: float) -> np.ndarray:
    z = zero_scan(conrey_character(q, m), T, tol)
    z.setflags(write=False)
    return z


def bulk_zeros(G: CharacterGroup, T: float, tol: float = 1e-10) -> ZeroSet:
    """Zeros up to T for every non-principal character; imprimitive ones use their inducing character."""
    if G.modulus.q > MAX_CONDUCTOR:
        raise ConfigError(f"q={G.modulus.q} exceeds {MAX_CONDUCTOR}")
    if not 0 < T <= MAX_HEIGHT:
        raise ConfigError(f"T must lie in (0, {MAX_HEIGHT}]")
    lists, horizon = {}, {}
    for chi in G.nonprincipal:
        p = primitive_character(chi)
        lists[chi.conrey_index] = np.array(_primitive_zeros(p.q, p.conrey_index, float(T), tol))
        horizon[chi.conrey_index] = float(T)
    return _zero_set(G, lists, horizon, "computed", {"T": float(T), "tol": tol})
