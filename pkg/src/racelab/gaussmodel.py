"""Gaussian comparison model for the race vector.

The standard r-dimensional Gaussian gives the leading tail
P(||x|| > lambda). Off-diagonal covariance B enters at second order
through the correction integrals

    F(lambda) = (2 pi)^(-r/2) int_{||x|| > lambda} (x_j^2 - 1)(x_k^2 - 1) e^{-||x||^2/2} dx,

which do not depend on the pair (j, k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from racelab.errors import ConfigError
from racelab.specfun import QuadratureSpec, adaptive_quad
from racelab.zerodata import CovarianceData


@dataclass(frozen=True)
class GaussTailRequest:
    r: int
    lam: float

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ConfigError(f"dimension r must be a positive integer, got {self.r}")
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")


def ball_tail(r: int, lam: float) -> float:
    """P(chi^2_r > lambda^2) = Gamma(r/2, lambda^2/2) / Gamma(r/2)."""
    req = GaussTailRequest(r, lam)
    return float(special.gammaincc(req.r / 2, req.lam**2 / 2))


def f_correction(r: int, j: int, k: int, lam: float,
                 spec: QuadratureSpec = QuadratureSpec(abs_tol=1e-13)) -> float:
    """F_{j,k}(lambda) by reduction to one radial integral.

    Since E[(x_j^2-1)(x_k^2-1)] = 0 over all of R^r, F equals minus the
    integral over the ball. Writing u = x_j^2 + x_k^2, the angular mean of
    the integrand is u^2/8 - u + 1, u has the chi^2_2 density e^{-u/2}/2,
    and the remaining r-2 coordinates contribute P(chi^2_{r-2} <= lambda^2 - u).
    """
    req = GaussTailRequest(r, lam)
    if req.r < 2:
        raise ConfigError("F_{j,k} needs r >= 2")
    if not (1 <= j <= req.r and 1 <= k <= req.r):
        raise ConfigError(f"indices must lie in 1..{req.r}")
    if j == k:
        raise ConfigError("F_{j,k} needs j != k")
    L2 = req.lam**2
    if L2 == 0.0:
        return 0.0

    def integrand(u):
        base = (u * u / 8 - u + 1) * 0.5 * np.exp(-u / 2)
        if req.r == 2:
            return base
        return base * special.gammainc((req.r - 2) / 2, np.maximum(L2 - u, 0.0) / 2)

    val, _ = adaptive_quad(integrand, 0.0, L2, spec)
    return -val


def f_correction_r2(lam: float) -> float:
    """Closed form for r = 2: (a^2 - 2a) e^{-a} / 2 with a = lambda^2/2."""
    a = lam * lam / 2
    return (a * a - 2 * a) * math.exp(-a) / 2


@dataclass(frozen=True)
class Theorem1Tail:
    gaussian: float
    corrected: float
    correction: float


def theorem1_tail(cov: CovarianceData, lam: float) -> Theorem1Tail:
    """Gaussian ball tail plus (1/2V^2) sum_{j<k} B_jk^2 F(lambda)."""
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    r = len(cov.residues)
    g = ball_tail(r, lam)
    B = np.asarray(cov.b_matrix)
    iu = np.triu_indices(r, 1)
    bsq = float(np.sum(B[iu] ** 2))
    if bsq == 0.0:
        return Theorem1Tail(g, g, 0.0)
    corr = bsq / (2 * cov.variance**2) * f_correction(r, 1, 2, lam)
    return Theorem1Tail(g, g + corr, corr)


_FACTORS = {
    "x": (lambda x: x, True),
    "1": (lambda x: np.ones_like(x), False),
    "x2m1": (lambda x: x * x - 1, False),
    "x3": (lambda x: x**3, True),
}


def odd_symmetry_check(r: int, lam1: float, lam2: float, pattern, abs_tol: float = 1e-10) -> float:
    """Integrate prod_i f_i(x_i) e^{-||x||^2/2} over the shell lam1 < ||x|| < lam2.

    ``pattern`` names one factor per coordinate: "x" and "x3" are odd,
    "1" and "x2m1" (x^2 - 1) are even. Uses hyperspherical coordinates
    (radius, r-2 polar angles, one azimuth).
    """
    pattern = tuple(pattern)
    if len(pattern) != r or r < 1:
        raise ConfigError("pattern must name one factor per coordinate")
    if not lam2 > lam1 >= 0:
        raise ConfigError("need lam2 > lam1 >= 0")
    try:
        fs = [_FACTORS[p][0] for p in pattern]
    except KeyError as e:
        raise ConfigError(f"unknown factor {e.args[0]!r}; choose from {sorted(_FACTORS)}") from None
    norm = (2 * math.pi) ** (-r / 2)
    if r == 1:
        def f1(x):
            return fs[0](np.asarray(x)) * math.exp(-x * x / 2)
        a = integrate.quad(f1, lam1, lam2, epsabs=abs_tol)[0]
        b = integrate.quad(f1, -lam2, -lam1, epsabs=abs_tol)[0]
        return norm * (a + b)

    def integrand(*args):
        rho, angles = args[0], args[1:]
        x = np.empty(r)
        sin_prod = 1.0
        for i, phi in enumerate(angles[:-1]):
            x[i] = rho * sin_prod * math.cos(phi)
            sin_prod *= math.sin(phi)
        x[r - 2] = rho * sin_prod * math.cos(angles[-1])
        x[r - 1] = rho * sin_prod * math.sin(angles[-1])
        jac = rho ** (r - 1)
        for i, phi in enumerate(angles[:-1]):
            jac *= math.sin(phi) ** (r - 2 - i)
        val = 1.0
        for f, xi in zip(fs, x):
            val *= float(f(np.float64(xi)))
        return val * jac * math.exp(-rho * rho / 2)

    ranges = [(lam1, lam2)] + [(0.0, math.pi)] * (r - 2) + [(0.0, 2 * math.pi)]
    val = integrate.nquad(integrand, ranges, opts={"epsabs": abs_tol, "epsrel": 1e-10})[0]
    return norm * val
