"""Prime counts in residue classes and the normalized race functions.

E(x; q, a) = (log x / sqrt x) (phi(q) pi(x; q, a) - pi(x)).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from racelab.errors import ConfigError, DataError
from racelab.modchar import Modulus
from racelab.randmodel import DensityGrid

MAX_LIMIT = 10**8
SEGMENT = 1 << 20
CACHE_VERSION = 1
DEFAULT_POINTS = 10_000


def _small_primes(n: int) -> np.ndarray:
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, int(math.isqrt(n)) + 1):
        if flags[p]:
            flags[p * p::p] = False
    return np.nonzero(flags)[0]


def primes_upto(X: int) -> np.ndarray:
    """All primes <= X by a segmented sieve of Eratosthenes."""
    X = int(X)
    base = _small_primes(max(2, math.isqrt(X)))
    out = []
    for lo in range(0, X + 1, SEGMENT):
        hi = min(lo + SEGMENT, X + 1)
        flags = np.ones(hi - lo, dtype=bool)
        if lo == 0:
            flags[:min(2, hi)] = False
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, (lo + p - 1) // p * p)
            flags[start - lo::p] = False
        out.append(np.nonzero(flags)[0].astype(np.int64) + lo)
    return np.concatenate(out)


@dataclass(frozen=True)
class SieveTable:
    """Primes <= X split by residue class mod q; counts at any x <= X by bisection."""

    limit: int
    modulus: Modulus
    by_residue: dict = field(repr=False)  # unit a -> sorted primes = a mod q
    all_primes: np.ndarray = field(repr=False)

    def pi(self, x) -> np.ndarray:
        x = self._check(x)
        return np.searchsorted(self.all_primes, x, side="right")

    def pi_residue(self, x, a: int) -> np.ndarray:
        x = self._check(x)
        a = int(a) % self.modulus.q
        if a not in self.by_residue:
            raise ConfigError(f"{a} is not a unit mod {self.modulus.q}")
        return np.searchsorted(self.by_residue[a], x, side="right")

    def ramified(self, x) -> np.ndarray:
        """#{p | q : p <= x}."""
        x = self._check(x)
        ps = np.array(self.modulus.primes, dtype=float)
        return (ps[None, :] <= np.atleast_1d(x)[:, None]).sum(axis=1).reshape(np.shape(x))

    def _check(self, x):
        x = np.floor(np.asarray(x, dtype=float))
        if np.any(x > self.limit):
            raise DataError(f"x = {float(np.max(x)):.6g} lies beyond the sieve limit {self.limit}")
        return x


def _cache_path(X: int, q: int) -> Path | None:
    root = os.environ.get("RACE_LAB_CACHE")
    if not root:
        return None
    return Path(root) / f"sieve-v{CACHE_VERSION}-X{X}-q{q}.npz"


def sieve(X: int, m: Modulus, checkpoints: Sequence[float] = ()) -> SieveTable:
    """Segmented sieve to X, cached under $RACE_LAB_CACHE when set.

    ``checkpoints`` are validated (sorted, within [2, X]); counts are then
    queryable at those and any other x <= X.
    """
    X = int(X)
    if X < 100:
        raise ConfigError("sieve limit must be >= 100")
    if X > MAX_LIMIT:
        raise ConfigError(f"sieve limit {X} exceeds the memory cap {MAX_LIMIT}")
    cp = np.asarray(checkpoints, dtype=float)
    if cp.size and (np.any(np.diff(cp) < 0) or cp[0] < 2 or cp[-1] > X):
        raise ConfigError("checkpoints must be sorted and lie in [2, X]")
    path = _cache_path(X, m.q)
    primes = None
    if path is not None and path.exists():
        with np.load(path) as f:
            primes = f["primes"]
    if primes is None:
        primes = primes_upto(X)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp.npz")
            np.savez_compressed(tmp, primes=primes)
            tmp.replace(path)
    res = primes % m.q
    by = {int(a): primes[res == a] for a in m.units()}
    for v in by.values():
        v.setflags(write=False)
    primes.setflags(write=False)
    return SieveTable(X, m, by, primes)


def e_vector(S: SieveTable, x, residues: Sequence[int]) -> np.ndarray:
    """E(x; q, a) for each a in residues; shape (r,) for scalar x, else (len(x), r)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 2):
        raise ConfigError("x must be >= 2")
    phi = S.modulus.totient
    pi = S.pi(xs).astype(np.int64)
    cols = [phi * S.pi_residue(xs, a).astype(np.int64) - pi for a in residues]
    scale = np.log(xs) / np.sqrt(xs)
    out = np.stack(cols, axis=-1) * scale[:, None]
    return out[0] if np.ndim(x) == 0 else out


def log_points(X: float, n_points: int = DEFAULT_POINTS) -> np.ndarray:
    """Midpoints of n equal cells of [log 2, log X], mapped back to x."""
    if n_points < 1:
        raise ConfigError("n_points must be positive")
    lo, hi = math.log(2.0), math.log(X)
    return np.exp(lo + (np.arange(n_points) + 0.5) * (hi - lo) / n_points)


def log_measure_sample(S: SieveTable, f: Callable[[np.ndarray], np.ndarray], residues: Sequence[int],
                       n_points: int = DEFAULT_POINTS, bound: float = 1.0) -> float:
    """Logarithmic average of f(E(x)) over [2, X].

    f maps an (n, r) array of race vectors to n values with |f| <= bound.
    """
    E = e_vector(S, log_points(S.limit, n_points), residues)
    vals = np.asarray(f(E), dtype=float).reshape(-1)
    if vals.shape != (n_points,):
        raise ConfigError("f must return one value per sample point")
    if np.any(np.abs(vals) > bound):
        raise ConfigError(f"f exceeds its declared bound {bound}")
    return float(vals.mean())


def ks_distance(samples: np.ndarray, grid: DensityGrid) -> float:
    """Kolmogorov-Smirnov distance between sample points and a model density grid."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    if n == 0:
        raise ConfigError("no samples")
    cdf = grid.cdf() / grid.mass
    F = np.interp(xs, grid.points, cdf, left=0.0, right=1.0)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def export_csv(S: SieveTable, residues: Sequence[int], path, n_points: int = DEFAULT_POINTS) -> None:
    xs = log_points(S.limit, n_points)
    E = e_vector(S, xs, residues)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"] + [f"E_{a}" for a in residues])
        for x, row in zip(xs, E):
            w.writerow([format(x, ".17g")] + [format(v, ".17g") for v in row])
