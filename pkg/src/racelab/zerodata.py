"""Zero ordinates of Dirichlet L-functions and the sums built from them.

A ZeroSet stores, for every non-principal character mod q, the sorted
positive ordinates gamma of its critical-line zeros up to a horizon.
Weights 1/(1/4 + gamma^2) feed the variance V_q and the covariances
B_q(a, b).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np

from racelab.errors import ConfigError, DataError
from racelab.modchar import CharacterGroup, Modulus, c_coefficient, prime_log_sum

FILE_MAGIC = "# prime-race-zeros v1"
PROVENANCES = ("ingested", "synthetic", "computed")
COMPLETIONS = ("none", "asymptotic", "density")


@dataclass(frozen=True, eq=False)
class ZeroSet:
    """Immutable map from Conrey index to sorted positive ordinates.

    ``horizon[m]`` is the height up to which the list for character m is
    complete. ``conductors[m]`` is the conductor of character m, carried
    so that the smooth density models need no character group.
    """

    modulus: Modulus
    ordinates: Mapping[int, np.ndarray]
    horizon: Mapping[int, float]
    conductors: Mapping[int, int]
    provenance: str
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ConfigError(f"unknown provenance {self.provenance!r}")
        if set(self.ordinates) != set(self.horizon) or set(self.ordinates) != set(self.conductors):
            raise DataError("ordinates, horizon and conductors must share their keys")
        norm = {}
        for m, g in self.ordinates.items():
            g = np.array(g, dtype=float)
            if g.ndim != 1:
                raise DataError(f"ordinates of character {m} must be one-dimensional")
            if g.size and (g[0] <= 0 or np.any(np.diff(g) <= 0)):
                raise DataError(f"ordinates of character {m} must be positive and strictly increasing")
            if g.size and g[-1] > self.horizon[m]:
                raise DataError(f"character {m} stores ordinates beyond its horizon")
            g.setflags(write=False)
            norm[int(m)] = g
        object.__setattr__(self, "ordinates", norm)
        object.__setattr__(self, "horizon", {int(m): float(h) for m, h in self.horizon.items()})

    @property
    def q(self) -> int:
        return self.modulus.q

    @property
    def characters(self) -> list[int]:
        return sorted(self.ordinates)

    @property
    def min_horizon(self) -> float:
        return min(self.horizon.values()) if self.horizon else 0.0

    @property
    def total(self) -> int:
        return sum(len(g) for g in self.ordinates.values())

    @cached_property
    def weight_sums(self) -> dict[int, float]:
        """Per character: sum of 1/(1/4 + gamma^2) over stored ordinates."""
        return {m: math.fsum(1.0 / (0.25 + g * g)) for m, g in self.ordinates.items()}

    @cached_property
    def pooled_weights(self) -> np.ndarray:
        """All weights 2/sqrt(1/4 + gamma^2), pooled over characters, descending."""
        _, gam = self.flat()
        w = np.sort(2.0 / np.sqrt(0.25 + gam * gam))[::-1].copy()
        w.setflags(write=False)
        return w

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """(Conrey indices, ordinates), concatenated in Conrey order."""
        ms = self.characters
        if not ms:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        idx = np.concatenate([np.full(len(self.ordinates[m]), m, dtype=np.int64) for m in ms])
        gam = np.concatenate([self.ordinates[m] for m in ms])
        return idx, gam


def _zero_set(G: CharacterGroup, lists: dict[int, np.ndarray], horizon: dict[int, float],
              provenance: str, meta: dict) -> ZeroSet:
    conductors = {chi.conrey_index: chi.conductor for chi in G.nonprincipal}
    for m in conductors:
        lists.setdefault(m, np.zeros(0))
        horizon.setdefault(m, 0.0)
    return ZeroSet(G.modulus, lists, horizon, conductors, provenance, meta)


# ---------------------------------------------------------------------------
# file format

_HEADER = re.compile(r"^# prime-race-zeros v1 q=(\d+)(?: T=(\S+))?\s*$")


def write_zeros(Z: ZeroSet, path) -> None:
    """Canonical text export; floats use repr so the round trip is bit-exact."""
    T = Z.min_horizon
    lines = [f"{FILE_MAGIC} q={Z.q} T={T!r}"]
    for m in Z.characters:
        lines.extend(f"{m} {float(g)!r}" for g in Z.ordinates[m])
    Path(path).write_text("\n".join(lines) + "\n")


def ingest_zeros(path, G: CharacterGroup) -> ZeroSet:
    """Parse a canonical zero file.

    The horizon of every character is the optional ``T=`` header value,
    or else the largest ordinate in the file.
    """
    text = Path(path).read_text()
    lists: dict[int, list[float]] = {}
    declared_T = None
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            h = _HEADER.match(line)
            if h and not seen_header:
                seen_header = True
                if int(h.group(1)) != G.modulus.q:
                    raise DataError(f"line {lineno}: file is for q={h.group(1)}, group is mod {G.modulus.q}")
                if h.group(2) is not None:
                    try:
                        declared_T = float(h.group(2))
                    except ValueError:
                        raise DataError(f"line {lineno}: bad horizon {h.group(2)!r}") from None
            continue
        parts = line.split()
        try:
            if len(parts) != 2:
                raise ValueError
            m, gamma = int(parts[0]), float(parts[1])
        except ValueError:
            raise DataError(f"line {lineno}: expected '<conrey_index> <gamma>', got {raw!r}") from None
        if not math.isfinite(gamma) or gamma <= 0:
            raise DataError(f"line {lineno}: ordinate must be positive and finite")
        chi = G.by_conrey(m)
        if chi.is_principal:
            raise DataError(f"line {lineno}: the principal character carries no zeros")
        seq = lists.setdefault(chi.conrey_index, [])
        if seq and gamma <= seq[-1]:
            raise DataError(f"line {lineno}: ordinates of character {m} not strictly increasing")
        seq.append(gamma)
    arrays = {m: np.array(v) for m, v in lists.items()}
    top = max((v[-1] for v in lists.values()), default=0.0)
    T = declared_T if declared_T is not None else top
    if T < top:
        raise DataError(f"header horizon {T} is below the largest ordinate {top}")
    horizon = {chi.conrey_index: T for chi in G.nonprincipal}
    return _zero_set(G, arrays, horizon, "ingested", {"path": str(path)})


# ---------------------------------------------------------------------------
# synthetic zeros


def smooth_count(conductor: int, t):
    """N_chi(t) = (t/2pi) log(q* t / (2 pi e))."""
    t = np.asarray(t, dtype=float)
    return t / (2 * math.pi) * np.log(conductor * t / (2 * math.pi * math.e))


def _invert_smooth_count(conductor: int, targets: np.ndarray) -> np.ndarray:
    """Solve N_chi(t) = y for y > 0 on the increasing branch, by Newton."""
    c = conductor / (2 * math.pi)
    # N = (t/2pi)(log(c t) - 1); start from t0 with log(c t0) ~ 2 + log y
    t = np.maximum(2 * math.pi * targets / np.maximum(np.log(np.maximum(targets, 1.0)) + 1.0, 1.0),
                   2 * math.pi * math.e / conductor * 1.01)
    for _ in range(100):
        f = t / (2 * math.pi) * (np.log(c * t) - 1.0) - targets
        step = f / (np.log(c * t) / (2 * math.pi))
        t_new = np.maximum(t - step, 0.5 * t + 0.5 * math.e / c)
        if np.all(np.abs(t_new - t) <= 1e-14 * t_new):
            return t_new
        t = t_new
    return t


def synth_zeros(G: CharacterGroup, T: float, seed: int) -> ZeroSet:
    """Synthetic ordinates: the k-th zero of chi solves N_chi(t) = k - U_k.

    U_k are independent uniforms on (0, 1) drawn from a per-character
    stream keyed by (seed, Conrey index), so conjugate characters get
    independent draws and the result does not depend on iteration order.
    """
    if not T >= 2:
        raise ConfigError("synthetic zeros need T >= 2")
    lists, horizon = {}, {}
    for chi in G.nonprincipal:
        qs = chi.conductor
        kmax = int(math.floor(max(float(smooth_count(qs, T)), 0.0))) + 1
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), chi.conrey_index])))
        u = rng.random(kmax)
        targets = np.arange(1, kmax + 1) - u
        targets = targets[targets > 0]
        g = _invert_smooth_count(qs, targets) if targets.size else np.zeros(0)
        lists[chi.conrey_index] = g[g <= T]
        horizon[chi.conrey_index] = float(T)
    return _zero_set(G, lists, horizon, "synthetic", {"seed": int(seed), "T": float(T), "model": "smooth-count"})


# ---------------------------------------------------------------------------
# counting and sums


def count_zeros(Z: ZeroSet, T: float) -> int:
    """Number of stored ordinates 0 < gamma <= T over all non-principal characters."""
    if T > Z.min_horizon:
        raise DataError(f"T={T} exceeds the data horizon {Z.min_horizon}")
    return int(sum(np.searchsorted(g, T, side="right") for g in Z.ordinates.values()))


def r_constant(m: Modulus) -> float:
    """R(q) = phi(q)(log q - sum_{p|q} log p/(p-1)) - (phi(q)-1)(log 2pi + 1)."""
    phi = m.totient
    return phi * (math.log(m.q) - prime_log_sum(m)) - (phi - 1) * (math.log(2 * math.pi) + 1)


def nq_model(m: Modulus, T: float) -> tuple[float, float]:
    """(main term (phi-1)/2pi T log T + R/2pi T, R(q))."""
    if not T >= 2:
        raise ConfigError("nq_model needs T >= 2")
    R = r_constant(m)
    return (m.totient - 1) / (2 * math.pi) * T * math.log(T) + R / (2 * math.pi) * T, R


def tail_completion(Z: ZeroSet, H: float, mode: str = "asymptotic") -> float:
    """Model value of sum over all chi of sum_{gamma > H} 1/(1/4 + gamma^2).

    ``asymptotic``: phi(q) log q / (2 pi H).
    ``density``: integrate the per-character zero density
    (1/2pi) log(q* t / 2pi) against t^-2, giving (log(q* H/2pi) + 1)/(2 pi H).
    """
    if mode == "none":
        return 0.0
    if H <= 0:
        raise DataError("tail completion needs a positive horizon")
    if mode == "asymptotic":
        return Z.modulus.totient * math.log(Z.q) / (2 * math.pi * H)
    if mode == "density":
        return math.fsum((math.log(qs * H / (2 * math.pi)) + 1.0) / (2 * math.pi * H)
                         for qs in Z.conductors.values())
    raise ConfigError(f"unknown completion mode {mode!r}; choose from {COMPLETIONS}")


@dataclass(frozen=True)
class SpectralSums:
    N_qT: int
    R_q: float
    S1: float
    S2: float
    tail_completed: bool


def spectral_sums(Z: ZeroSet, T: float, complete_tail: bool, mode: str = "asymptotic") -> SpectralSums:
    """S1 = sum_{gamma <= T} (1/4+gamma^2)^(-1/2), S2 = sum_{gamma > T} (1/4+gamma^2)^(-1)."""
    H = Z.min_horizon
    if not complete_tail and T > H:
        raise DataError(f"T={T} beyond the horizon {H}; enable tail completion")
    s1, s2, n = [], [], 0
    for g in Z.ordinates.values():
        k = np.searchsorted(g, T, side="right")
        n += int(k)
        s1.append(math.fsum(1.0 / np.sqrt(0.25 + g[:k] ** 2)))
        s2.append(math.fsum(1.0 / (0.25 + g[k:] ** 2)))
    S2 = math.fsum(s2)
    if complete_tail:
        S2 += tail_completion(Z, max(T, H), mode)
    return SpectralSums(n, r_constant(Z.modulus), math.fsum(s1), S2, complete_tail)


def variance_vq(Z: ZeroSet, complete_tail: bool = False, mode: str = "asymptotic") -> float:
    """V_q = 2 sum over stored positive ordinates of 1/(1/4+gamma^2), optionally completed."""
    v = 2.0 * math.fsum(Z.weight_sums.values())
    if complete_tail and Z.ordinates:
        # both signs of gamma contribute, hence twice the positive tail
        v += 2.0 * tail_completion(Z, Z.min_horizon, mode)
    return v


def variance_proxy(m: Modulus) -> float:
    """Asymptotic proxy phi(q)(log q - sum_{p|q} log p/(p-1)) for V_q."""
    return m.totient * (math.log(m.q) - prime_log_sum(m))


def _check_unit(G: CharacterGroup, a: int) -> int:
    q = G.modulus.q
    if math.gcd(int(a), q) != 1:
        raise ConfigError(f"{a} is not a unit mod {q}")
    return int(a) % q


def b_coefficients(Z: ZeroSet, G: CharacterGroup, pairs) -> np.ndarray:
    """B_q(a, b) for a sequence of (a, b) pairs, sharing one pass over characters."""
    q = G.modulus.q
    us, inv = [], []
    for a, b in pairs:
        a, b = _check_unit(G, a), _check_unit(G, b)
        if a == b:
            raise ConfigError("B_q(a, a) is the variance; use variance_vq")
        us.append(b * pow(a, -1, q) % q)
        inv.append(a * pow(b, -1, q) % q)
    if not us:
        return np.zeros(0)
    ms = [m for m in Z.characters if Z.weight_sums[m] != 0.0]
    if not ms:
        return np.zeros(len(us))
    w = np.array([Z.weight_sums[m] for m in ms])
    # chi(u) + chi(u^-1) summed with weights; rows: characters
    vals = np.array([G.by_conrey(m).values(us) + G.by_conrey(m).values(inv) for m in ms])
    acc = w @ vals
    scale = max(1.0, float(np.sum(np.abs(w))))
    if np.max(np.abs(acc.imag)) > 1e-10 * scale:
        raise DataError("B_q accumulated a non-negligible imaginary part")
    return acc.real


def b_coefficient(Z: ZeroSet, G: CharacterGroup, a: int, b: int) -> float:
    """B_q(a,b) = sum_chi sum_{gamma>0} (chi(b/a) + chi(a/b))/(1/4 + gamma^2)."""
    return float(b_coefficients(Z, G, [(a, b)])[0])


@dataclass(frozen=True)
class CovarianceData:
    residues: tuple[int, ...]
    c_vector: np.ndarray
    variance: float
    b_matrix: np.ndarray


def covariance_data(Z: ZeroSet, G: CharacterGroup, residues, complete_tail: bool = False,
                    mode: str = "asymptotic") -> CovarianceData:
    res = tuple(_check_unit(G, a) for a in residues)
    if len(set(res)) != len(res):
        raise ConfigError("residues must be distinct")
    if not 2 <= len(res) <= G.modulus.totient:
        raise ConfigError(f"need 2 <= r <= phi(q), got r={len(res)}")
    r = len(res)
    V = variance_vq(Z, complete_tail, mode)
    pairs = [(res[j], res[k]) for j in range(r) for k in range(j + 1, r)]
    offd = b_coefficients(Z, G, pairs)
    B = np.full((r, r), V)
    for (j, k), val in zip(((j, k) for j in range(r) for k in range(j + 1, r)), offd):
        B[j, k] = B[k, j] = val
    c = np.array([c_coefficient(G.modulus, a) for a in res], dtype=np.int64)
    return CovarianceData(res, c, V, B)
