"""The random model for the race vector.

With independent uniform phases U_n = e^{2 pi i theta_n}, one per stored
ordinate,

    X(q, a) = -C_q(a) + sum_n w_n Re(chi_n(a) U_n),   w_n = 2/sqrt(1/4 + gamma_n^2),
    Y(q)    = sum_n w_n cos(2 pi theta_n).

Its Fourier transform E[e^{-i t.X}] is e^{i C.t} prod_n J0(w_n |sum_j t_j chi_n(a_j)|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import special

from racelab.errors import ConfigError, DataError
from racelab.modchar import CharacterGroup, c_coefficient
from racelab.specfun import bessel_j0, log_i0
from racelab.tailbounds import continuum_terms, model_saddle, saddle_solve
from racelab.zerodata import ZeroSet, covariance_data, tail_completion, variance_vq

BLOCK = 1024  # samples per RNG stream; fixed so results do not depend on batching
DEFAULT_EXACT_TERMS = 2048
SMALL_ARG = 0.1  # below this, log J0 uses its power series in moment form
_Z95 = 1.959963984540054


def _log_j0_coefficients(count: int) -> np.ndarray:
    """c_k with log J0(x) = sum_{k>=1} c_k x^{2k}."""
    a = [Fraction((-1) ** m, 4**m * math.factorial(m) ** 2) for m in range(count + 1)]
    c = [Fraction(0)] * (count + 1)
    for k in range(1, count + 1):
        acc = k * a[k] - sum(j * c[j] * a[k - j] for j in range(1, k))
        c[k] = acc / k
    return np.array([float(v) for v in c[1:]])


_LOG_J0 = _log_j0_coefficients(8)


class _Profile:
    """Descending weights with suffix power sums, for fast log |prod J0(w s)|."""

    def __init__(self, w: np.ndarray):
        self.w = np.sort(np.asarray(w, dtype=float))[::-1]
        k = len(_LOG_J0)
        pw = np.empty((len(self.w) + 1, k))
        pw[-1] = 0.0
        w2 = self.w * self.w
        for j in range(k):
            pw[:-1, j] = np.cumsum((w2 ** (j + 1))[::-1])[::-1]
        self.suffix = pw
        self.neg_w = -self.w
        self.prefix_w2 = np.concatenate([[0.0], np.cumsum(w2)])

    def log_abs(self, s: float) -> tuple[float, float]:
        """(log |prod_n J0(w_n s)|, sign of the product)."""
        if s == 0 or len(self.w) == 0:
            return 0.0, 1.0
        s = abs(s)
        i = int(np.searchsorted(self.neg_w, -SMALL_ARG / s, side="left"))
        sign = 1.0
        big = 0.0
        if i:
            j = np.asarray(bessel_j0(self.w[:i] * s))
            if np.any(j == 0):
                return -math.inf, 1.0
            big = float(np.sum(np.log(np.abs(j))))
            sign = -1.0 if np.count_nonzero(j < 0) % 2 else 1.0
        s2 = s * s
        powers = s2 ** np.arange(1, len(_LOG_J0) + 1)
        small = float(np.dot(_LOG_J0 * powers, self.suffix[i]))
        return big + small, sign

    def log_envelope(self, s: float) -> float:
        """Upper bound on log |prod J0(w s)|, non-increasing in s.

        Uses |J0(x)| <= e^{-x^2/4} for x <= 1.5, <= 0.57 on (1.5, 1.96]
        and <= sqrt(2/(pi x)) beyond.
        """
        if s == 0:
            return 0.0
        i1 = int(np.searchsorted(self.neg_w, -1.96 / s, side="left"))  # x > 1.96
        i2 = int(np.searchsorted(self.neg_w, -1.5 / s, side="left"))  # x > 1.5
        x = self.w[:i1] * s
        out = float(np.sum(0.5 * np.log(2 / (math.pi * x))))
        out += (i2 - i1) * math.log(0.57)
        out -= s * s / 4 * (self.prefix_w2[-1] - self.prefix_w2[i2])
        return out


@dataclass(frozen=True, eq=False)
class RaceModel:
    Z: ZeroSet
    G: CharacterGroup
    residues: tuple[int, ...]
    c_vector: np.ndarray
    chars: tuple[int, ...]  # Conrey indices, rows of chi_values
    chi_values: np.ndarray  # (characters, r) complex

    @property
    def r(self) -> int:
        return len(self.residues)

    @cached_property
    def _flat(self):
        rows = {m: i for i, m in enumerate(self.chars)}
        idx, gam = self.Z.flat()
        row = np.array([rows[m] for m in idx], dtype=np.int64) if len(idx) else np.zeros(0, dtype=np.int64)
        w = 2.0 / np.sqrt(0.25 + gam * gam)
        order = np.argsort(-w, kind="stable")
        return row[order], w[order]

    @cached_property
    def pooled(self) -> _Profile:
        return _Profile(self._flat[1])

    @cached_property
    def per_character(self) -> list[_Profile]:
        return [_Profile(2.0 / np.sqrt(0.25 + self.Z.ordinates[m] ** 2)) for m in self.chars]

    @cached_property
    def variance(self) -> float:
        return variance_vq(self.Z)

    @cached_property
    def support(self) -> float:
        """sup |Y| = sum of all stored weights."""
        return float(np.sum(self._flat[1]))

    @cached_property
    def tail_s2(self) -> float:
        """Model value of sum_{gamma > H} 1/(1/4 + gamma^2), the larger of two completions."""
        H = self.Z.min_horizon
        if H <= 0:
            return math.inf
        return max(tail_completion(self.Z, H, "asymptotic"), tail_completion(self.Z, H, "density"))

    @cached_property
    def cov(self):
        return covariance_data(self.Z, self.G, self.residues) if self.r >= 2 else None


def race_model(Z: ZeroSet, G: CharacterGroup, residues: Sequence[int] = ()) -> RaceModel:
    """Bundle zeros, characters and residues; residues may be empty for Y alone."""
    q = G.modulus.q
    if Z.q != q:
        raise ConfigError(f"zero set is mod {Z.q}, character group mod {q}")
    res = tuple(int(a) % q for a in residues)
    for a in res:
        if math.gcd(a, q) != 1:
            raise ConfigError(f"residue {a} is not a unit mod {q}")
    if len(set(res)) != len(res):
        raise ConfigError("residues must be distinct")
    chars = tuple(Z.characters)
    if res:
        vals = np.array([G.by_conrey(m).values(list(res)) for m in chars]).reshape(len(chars), len(res))
    else:
        vals = np.zeros((len(chars), 0), dtype=complex)
    c = np.array([c_coefficient(G.modulus, a) for a in res], dtype=np.int64)
    return RaceModel(Z, G, res, c, chars, vals)


# ---------------------------------------------------------------------------
# characteristic function


def _scales(model: RaceModel, t) -> tuple[np.ndarray, float]:
    """Per-character |sum_j t_j chi(a_j)| and the phase C.t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if model.r == 0:
        if t.size != 1:
            raise ConfigError("Y has a scalar frequency")
        return np.full(len(model.chars), abs(float(t[0]))), 0.0
    if t.size != model.r:
        raise ConfigError(f"frequency vector must have length r={model.r}")
    return np.abs(model.chi_values @ t), float(np.dot(model.c_vector, t))


def mu_hat(model: RaceModel, t, with_error: bool = False):
    """E[e^{-i t.X}] over the stored ordinates (for r = 0, E[e^{-itY}]).

    With ``with_error``, also returns a bound on the effect of the zeros
    beyond the horizon: |mu| (exp(2 |z|^2 S2) - 1), with S2 the modelled
    tail sum and |z| the largest character scale. It uses
    |log J0(x)| <= x^2/2, valid while the neglected arguments stay below 2.2.
    """
    scales, phase = _scales(model, t)
    total, sign = 0.0, 1.0
    for prof, s in zip(model.per_character, scales):
        la, sg = prof.log_abs(float(s))
        total += la
        sign *= sg
    value = sign * math.exp(total) * complex(math.cos(phase), math.sin(phase)) if total > -745 else 0j
    if not with_error:
        return value
    zmax = float(np.max(scales)) if len(scales) else 0.0
    H = model.Z.min_horizon
    if H <= 0 or 2 * zmax / H > 2.2:
        return value, 2.0
    err = abs(value) * math.expm1(2 * zmax * zmax * model.tail_s2)
    return value, err


def charfun_decay_probe(model: RaceModel, direction, radii) -> np.ndarray:
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 0) or np.any(np.diff(radii) < 0):
        raise ConfigError("radii must be non-negative and ascending")
    d = np.atleast_1d(np.asarray(direction, dtype=float))
    n = np.linalg.norm(d)
    if n == 0:
        raise ConfigError("direction must be non-zero")
    d = d / n
    return np.array([abs(mu_hat(model, rad * d if model.r else rad)) for rad in radii])


# ---------------------------------------------------------------------------
# one-dimensional density by Fourier inversion


@dataclass(frozen=True)
class DensityGrid:
    points: np.ndarray
    density: np.ndarray
    t_max: float
    mass: float
    truncation_bound: float
    meta: dict = field(default_factory=dict)

    def cdf(self) -> np.ndarray:
        """Cumulative trapezoid integral of the density, normalized to end at mass."""
        inc = np.diff(self.points) * (self.density[1:] + self.density[:-1]) / 2
        return np.concatenate([[0.0], np.cumsum(inc)])


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _product_at(prof: _Profile, ts: np.ndarray) -> np.ndarray:
    out = np.empty(len(ts))
    for i, t in enumerate(ts):
        la, sg = prof.log_abs(float(t))
        out[i] = sg * math.exp(la) if la > -745 else 0.0
    return out


def density_1d(model: RaceModel, a: int | None = None, points=None, n_points: int = 801,
               tol: float = 1e-10, cutoff: float = 1e-16) -> DensityGrid:
    """Density of X(q, a) (or of Y when a is None) by Fourier inversion.

    Since |chi(a)| = 1, X(q, a) has the law of Y - C_q(a), so
    p(x) = (1/pi) int_0^tmax cos(t (x + C)) prod_n J0(w_n t) dt.
    t_max is where an envelope of the product falls below ``cutoff``;
    Gauss-Legendre panels are doubled until the grid values change by
    less than ``tol``.
    """
    q = model.G.modulus.q
    if a is None:
        C = 0
    else:
        if math.gcd(int(a), q) != 1:
            raise ConfigError(f"{a} is not a unit mod {q}")
        C = c_coefficient(model.G.modulus, int(a))
    prof = model.pooled
    if len(prof.w) == 0:
        raise DataError("no stored ordinates; the model is a point mass")
    H = model.Z.min_horizon
    t_limit = 1.1 * H
    log_cut = math.log(cutoff)
    hi = 1.0
    while prof.log_envelope(hi) > log_cut:
        hi *= 2
        if hi > t_limit:
            raise DataError(
                f"characteristic function does not reach {cutoff:g} below t = {t_limit:.4g}; "
                f"raise the zero horizon above {2 * hi:.4g}")
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if prof.log_envelope(mid) > log_cut:
            lo = mid
        else:
            hi = mid
    t_max = hi
    la, _ = prof.log_abs(t_max)
    err_tmax = math.exp(la) * math.expm1(2 * t_max * t_max * model.tail_s2)
    if not err_tmax < 1e-12:
        need = H * max(2.0, 2 * t_max * t_max * model.tail_s2 / 1e-12 * math.exp(la))
        raise DataError(f"truncation error {err_tmax:.3g} at t_max={t_max:.4g} exceeds 1e-12; "
                        f"raise the zero horizon to about {need:.4g}")

    if points is None:
        half = min(model.support, 10 * math.sqrt(model.variance))
        points = np.linspace(-C - half, -C + half, n_points)
    x = np.asarray(points, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ConfigError("grid points must be strictly increasing")
    freq = float(np.max(np.abs(x + C)))

    def invert(panels: int):
        edges = np.linspace(0.0, t_max, panels + 1)
        half_w = 0.5 * np.diff(edges)
        nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half_w[:, None] * _GL_X[None, :]
        wts = half_w[:, None] * _GL_W[None, :]
        nodes, wts = nodes.ravel(), wts.ravel()
        prod = _product_at(prof, nodes)
        p = (np.cos(np.outer(x + C, nodes)) @ (wts * prod)) / math.pi
        envelope = (wts * np.abs(prod) * np.expm1(2 * nodes * nodes * model.tail_s2)).sum() / math.pi
        return p, envelope

    panels = max(8, int(math.ceil(t_max * freq / (2 * math.pi))) + 1)
    p, trunc = invert(panels)
    quad_err = math.inf
    for _ in range(8):
        panels *= 2
        p2, trunc = invert(panels)
        quad_err = float(np.max(np.abs(p2 - p)))
        p = p2
        if quad_err <= tol:
            break
    raw_min = float(np.min(p))
    dens = np.where(p < 0, 0.0, p)
    mass = float(np.trapezoid(dens, x))
    trunc += t_max * cutoff / math.pi
    meta = {"C": int(C), "quadrature_change": quad_err, "panels": panels, "raw_min": raw_min,
            "variable": "Y" if a is None else f"X(q={q},a={int(a)})"}
    return DensityGrid(x, dens, t_max, mass, trunc, meta)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SampleBatch:
    seed: int
    n: int
    values: np.ndarray  # (n, r)
    meta: dict = field(default_factory=dict)


def _block_rng(seed: int, tag: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), tag, block])))


def _hybrid_parts(model: RaceModel, coef_rows: np.ndarray, exact_terms: int | None):
    """Exact coefficients for the largest weights and the covariance of the remainder.

    coef_rows is (characters, r) complex: the value of chi(a_j) per row,
    or ones for Y.
    """
    row, w = model._flat
    K = len(w) if exact_terms is None else min(int(exact_terms), len(w))
    coef = w[:K, None] * coef_rows[row[:K]]
    r = coef_rows.shape[1]
    agg = np.zeros((r, r))
    if K < len(w):
        rest = np.bincount(row[K:], weights=w[K:] ** 2, minlength=len(model.chars))
        v = coef_rows
        agg = 0.5 * np.real((v * rest[:, None]).T @ np.conj(v))
    return coef, agg, K


def _draw(coef: np.ndarray, agg: np.ndarray, shift: np.ndarray, n: int, seed: int, tag: int) -> np.ndarray:
    r = len(shift)
    out = np.empty((n, r))
    vals, vecs = np.linalg.eigh(agg) if r else (np.zeros(0), np.zeros((0, 0)))
    fac = vecs * np.sqrt(np.maximum(vals, 0.0))
    cr, ci = np.real(coef), np.imag(coef)
    use_agg = bool(np.any(vals > 0))
    has_imag = bool(np.any(ci != 0))  # Y and real characters need no sines
    for b, start in enumerate(range(0, n, BLOCK)):
        m = min(BLOCK, n - start)
        rng = _block_rng(seed, tag, b)
        ph = 2 * math.pi * rng.random((m, coef.shape[0]))
        x = np.cos(ph) @ cr
        if has_imag:
            x -= np.sin(ph) @ ci
        if use_agg:
            x = x + rng.standard_normal((m, r)) @ fac.T
        out[start:start + m] = x + shift
    return out


def sample_X(model: RaceModel, n: int, seed: int, exact_terms: int | None = DEFAULT_EXACT_TERMS) -> SampleBatch:
    """n draws of (X(q, a_1), ..., X(q, a_r)), one shared phase per ordinate.

    The ``exact_terms`` largest weights get explicit phases; the rest are
    replaced by a Gaussian with the same covariance (None: all explicit).
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if model.r == 0:
        raise ConfigError("sample_X needs at least one residue")
    # repeated tail queries at one seed reuse the last batch
    cache = model.__dict__.setdefault("_last_sample", {})
    key = (int(n), int(seed), exact_terms)
    if key in cache:
        return cache[key]
    coef, agg, K = _hybrid_parts(model, model.chi_values, exact_terms)
    vals = _draw(coef, agg, -model.c_vector.astype(float), n, seed, tag=1)
    vals.setflags(write=False)
    meta = {"exact_terms": K, "aggregated_terms": len(model._flat[1]) - K,
            "aggregated_variance": float(np.trace(agg)) / max(model.r, 1),
            "truncated_variance": 2 * model.tail_s2}
    batch = SampleBatch(int(seed), int(n), vals, meta)
    cache.clear()
    cache[key] = batch
    return batch


def sample_Y(model: RaceModel, n: int, seed: int, exact_terms: int | None = DEFAULT_EXACT_TERMS) -> SampleBatch:
    """n draws of Y(q) = sum_n w_n cos(2 pi theta_n)."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    ones = np.ones((len(model.chars), 1), dtype=complex)
    coef, agg, K = _hybrid_parts(model, ones, exact_terms)
    vals = _draw(coef, agg, np.zeros(1), n, seed, tag=0)
    meta = {"exact_terms": K, "aggregated_terms": len(model._flat[1]) - K,
            "aggregated_variance": float(agg[0, 0]), "truncated_variance": 2 * model.tail_s2}
    return SampleBatch(int(seed), int(n), vals, meta)


def empirical_charfun(batch: SampleBatch, t) -> tuple[complex, float, float]:
    """(mean of e^{-i t.X}, standard error of the real part, of the imaginary part)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    arg = batch.values @ t
    c, s = np.cos(arg), -np.sin(arg)
    n = batch.n
    return complex(c.mean(), s.mean()), float(c.std(ddof=1) / math.sqrt(n)), float(s.std(ddof=1) / math.sqrt(n))


# ---------------------------------------------------------------------------
# tail estimators


@dataclass(frozen=True)
class TailEstimate:
    estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    n: int
    method: str
    log_estimate: float = math.nan
    meta: dict = field(default_factory=dict)


def _wilson(k: int, n: int, method: str, meta: dict) -> TailEstimate:
    p = k / n
    se = math.sqrt(p * (1 - p) / n)
    z2 = _Z95 * _Z95
    centre = (p + z2 / (2 * n)) / (1 + z2 / n)
    half = _Z95 * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n)
    logp = math.log(p) if p > 0 else -math.inf
    return TailEstimate(p, se, max(0.0, centre - half), min(1.0, centre + half), n, method, logp, meta)


def _exact(value: float, n: int, method: str, meta: dict) -> TailEstimate:
    logp = math.log(value) if value > 0 else -math.inf
    return TailEstimate(value, 0.0, value, value, n, method, logp, meta)


def mc_tail(model: RaceModel, V: float, n: int, seed: int, norm: str = "euclidean",
            exact_terms: int | None = DEFAULT_EXACT_TERMS) -> TailEstimate:
    """Plain Monte Carlo for mu(||x|| > V); meta carries both norms."""
    if n < 1000:
        raise ConfigError("mc_tail needs n >= 1000")
    if norm not in ("euclidean", "max"):
        raise ConfigError("norm must be 'euclidean' or 'max'")
    if model.r == 0:
        raise ConfigError("mc_tail needs at least one residue")
    c = model.c_vector.astype(float)
    bound = {"euclidean": float(np.linalg.norm(c)) + math.sqrt(model.r) * model.support,
             "max": float(np.max(np.abs(c))) + model.support}
    if V >= bound[norm]:
        return _exact(0.0, n, f"mc-{norm}-support", {"support_bound": bound[norm]})
    X = sample_X(model, n, seed, exact_terms).values
    k_e = int(np.count_nonzero(np.linalg.norm(X, axis=1) > V))
    k_m = int(np.count_nonzero(np.max(np.abs(X), axis=1) > V))
    meta = {"p_euclidean": k_e / n, "p_max": k_m / n, "seed": int(seed), "V": float(V)}
    return _wilson(k_e if norm == "euclidean" else k_m, n, f"mc-{norm}", meta)


def mc_y_tail(model: RaceModel, V: float, n: int, seed: int,
              exact_terms: int | None = DEFAULT_EXACT_TERMS) -> TailEstimate:
    """Plain Monte Carlo for P(Y > V)."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    if V >= model.support:
        return _exact(0.0, n, "mc-y-support", {"support_bound": model.support})
    Y = sample_Y(model, n, seed, exact_terms).values[:, 0]
    return _wilson(int(np.count_nonzero(Y > V)), n, "mc-y", {"seed": int(seed), "V": float(V)})


def _log_cond_tail(z: np.ndarray, s_sd: float) -> np.ndarray:
    """log E[1{G > z} e^{-s sd (G - z)}] for G standard normal, stably.

    Equals -z^2/2 + log(erfcx((z + s sd)/sqrt 2)/2).
    """
    x = z + s_sd
    out = np.empty_like(z)
    pos = x > -5
    out[pos] = -0.5 * z[pos] ** 2 + np.log(0.5 * special.erfcx(x[pos] / math.sqrt(2)))
    neg = ~pos
    out[neg] = -0.5 * z[neg] ** 2 + 0.5 * x[neg] ** 2 + special.log_ndtr(-x[neg])
    return out


def tilted_tail(model: RaceModel, V: float, n: int, seed: int, s: float | None = None,
                continuum: bool = False) -> TailEstimate:
    """Importance-sampling estimate of P(Y > V) under the tilt e^{sY}.

    Phases follow the von Mises law with kappa_n = s w_n, so the weight of
    a draw is e^{-sY} L(s) with log L(s) = sum log I0(s w_n). The estimate
    is reported in log space. With ``continuum`` the zeros beyond the
    horizon are modelled by the smooth zero density: under the tilt their
    sum is taken Gaussian with matching mean and variance and integrated
    out exactly given the explicit part.
    """
    if n < 2:
        raise ConfigError("tilted_tail needs n >= 2")
    completion = "continuum" if continuum else "none"
    w = model._flat[1]
    if not continuum and V >= model.support:
        return _exact(0.0, n, "tilted-support", {"support_bound": model.support})
    if s is None:
        guess = None
        if continuum:
            guess = saddle_solve(model.G.modulus, model.G, V).log_s
        s = model_saddle(model.Z, V, completion, guess) if V > 0 else 0.0
    if s < 0:
        raise ConfigError("tilt s must be >= 0")
    logL = math.fsum(np.asarray(log_i0(s * w), dtype=float)) if s > 0 else 0.0
    ct = continuum_terms(model.Z, s) if continuum else None
    if ct is not None:
        logL += ct.logL
    kappa = s * w
    ell = np.empty(n)
    for b, start in enumerate(range(0, n, BLOCK)):
        m = min(BLOCK, n - start)
        rng = _block_rng(seed, 2, b)
        phi = rng.vonmises(0.0, np.broadcast_to(kappa, (m, len(w))))
        y = np.cos(phi) @ w
        if ct is None:
            ell[start:start + m] = np.where(y > V, -s * (y - V), -np.inf)
        else:
            sd = math.sqrt(ct.var)
            z = (V - y - ct.mean) / sd
            ell[start:start + m] = _log_cond_tail(z, s * sd)
    top = float(np.max(ell))
    meta = {"s": float(s), "logL": logL, "continuum": bool(continuum), "seed": int(seed), "V": float(V),
            "kappa_max": float(kappa[0]) if len(kappa) else 0.0}
    if ct is not None:
        meta.update({"continuum_mean": ct.mean, "continuum_var": ct.var})
    if top == -math.inf:
        return TailEstimate(0.0, 0.0, 0.0, 0.0, n, "tilted", -math.inf, meta)
    e = np.exp(ell - top)
    mean = float(e.mean())
    rel = float(e.std(ddof=1) / math.sqrt(n)) / mean
    log_est = logL - s * V + top + math.log(mean)
    est = math.exp(log_est) if log_est > -745 else 0.0
    se = est * rel
    meta["log_std_error"] = rel
    return TailEstimate(est, se, max(0.0, est - _Z95 * se), est + _Z95 * se, n, "tilted", log_est, meta)


def race_density(model: RaceModel, ordering: Sequence[int], n: int, seed: int,
                 exact_terms: int | None = DEFAULT_EXACT_TERMS) -> TailEstimate:
    """Monte Carlo estimate of mu(x_{sigma(1)} > ... > x_{sigma(r)}); ordering lists residues."""
    if model.r < 2:
        raise ConfigError("race_density needs r >= 2")
    q = model.G.modulus.q
    order = [int(a) % q for a in ordering]
    if sorted(order) != sorted(model.residues):
        raise ConfigError(f"ordering must permute the residues {model.residues}")
    cols = [model.residues.index(a) for a in order]
    X = sample_X(model, n, seed, exact_terms).values[:, cols]
    k = int(np.count_nonzero(np.all(np.diff(X, axis=1) < 0, axis=1)))
    return _wilson(k, n, "mc-race", {"ordering": order, "seed": int(seed)})
