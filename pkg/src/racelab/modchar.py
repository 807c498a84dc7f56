"""Modular arithmetic and the Dirichlet character group mod q.

Characters follow the Conrey labelling: the character with index m is
``chi_q(m, n) = prod_p chi_{p^e}(m, n)``, where for odd p

    chi_{p^e}(m, n) = exp(2 pi i * log_g(m) * log_g(n) / phi(p^e))

with g the least primitive root mod p^2, and for p = 2, e >= 2, writing
``n = eps * 5^b mod 2^e``,

    chi_{2^e}(m, n) = exp(2 pi i * ((1 - eps_m)(1 - eps_n)/8 + b_m b_n / 2^(e-2))).

Values are stored exactly as exponents of a primitive root of unity whose
order is the exponent of the unit group; complex numbers appear only when
a caller asks for them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from racelab.errors import ConfigError, DataError

MAX_MODULUS = 10**6


def factorize(n: int) -> list[tuple[int, int]]:
    """Trial-division factorization, ascending primes."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


@dataclass(frozen=True)
class Modulus:
    q: int
    factorization: tuple[tuple[int, int], ...]
    totient: int
    divisor_count: int

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factorization)

    def is_unit(self, a: int) -> bool:
        return math.gcd(a, self.q) == 1

    def units(self) -> np.ndarray:
        n = np.arange(1, self.q + 1)
        return n[np.gcd(n, self.q) == 1]


def build_modulus(q: int) -> Modulus:
    if int(q) != q or q < 3:
        raise ConfigError(f"modulus q={q} out of supported range (q >= 3)")
    q = int(q)
    fac = tuple(factorize(q))
    phi = 1
    d = 1
    for p, e in fac:
        phi *= p ** (e - 1) * (p - 1)
        d *= e + 1
    return Modulus(q=q, factorization=fac, totient=phi, divisor_count=d)


def c_coefficient(m: Modulus, a: int) -> int:
    """-1 plus the number of square roots of a mod q (the mean shift of the race)."""
    if not m.is_unit(a):
        raise ConfigError(f"residue a={a} is not coprime to q={m.q}")
    b = np.arange(1, m.q + 1, dtype=np.int64)
    return int(np.count_nonzero((b * b) % m.q == a % m.q)) - 1


def prime_log_sum(m: Modulus) -> float:
    """Sum over primes p | q of log(p)/(p - 1)."""
    return math.fsum(math.log(p) / (p - 1) for p in m.primes)


# ---------------------------------------------------------------------------
# unit group


def _is_primitive_root(g: int, n: int, order: int) -> bool:
    if math.gcd(g, n) != 1:
        return False
    return all(pow(g, order // p, n) != 1 for p, _ in factorize(order))


@lru_cache(maxsize=None)
def conrey_generator(p: int) -> int:
    """Least primitive root mod p^2 (hence mod every power of the odd prime p)."""
    p2 = p * p
    order = p * (p - 1)
    g = 2
    while not _is_primitive_root(g, p2, order):
        g += 1
    return g


@dataclass(frozen=True)
class _Component:
    """One cyclic factor of (Z/qZ)^*, attached to the prime power pe."""

    p: int
    e: int
    pe: int
    kind: str  # "odd", "sign" (-1 mod 2^e) or "five" (5 mod 2^e)
    order: int

    @cached_property
    def log_table(self) -> np.ndarray:
        """Discrete log of every residue mod pe on this component (-1 off units)."""
        table = np.full(self.pe, -1, dtype=np.int64)
        if self.kind == "odd":
            g = conrey_generator(self.p)
            x = 1
            for k in range(self.order):
                table[x] = k
                x = x * g % self.pe
        elif self.kind == "sign":
            n = np.arange(self.pe)
            odd = n % 2 == 1
            table[odd] = (n[odd] % 4 == 3).astype(np.int64)
        else:
            x = 1
            for k in range(self.order):
                table[x] = k
                table[self.pe - x] = k
                x = x * 5 % self.pe
        return table

    def log(self, n):
        return self.log_table[np.asarray(n) % self.pe]


@lru_cache(maxsize=256)
def _components(q: int) -> tuple[_Component, ...]:
    comps = []
    for p, e in factorize(q):
        pe = p**e
        if p == 2:
            if e >= 2:
                comps.append(_Component(2, e, pe, "sign", 2))
            if e >= 3:
                comps.append(_Component(2, e, pe, "five", 2 ** (e - 2)))
        else:
            comps.append(_Component(p, e, pe, "odd", pe // p * (p - 1)))
    return tuple(comps)


def group_exponent(q: int) -> int:
    return math.lcm(*(c.order for c in _components(q))) if _components(q) else 1


def unit_generators(q: int) -> tuple[int, ...]:
    """CRT lifts of the component generators (-1 and 5 for the 2-part)."""
    gens = []
    for c in _components(q):
        local = {"odd": conrey_generator(c.p) if c.kind == "odd" else 0, "sign": c.pe - 1, "five": 5}[c.kind]
        rest = q // c.pe
        # x = local mod pe, x = 1 mod rest
        x = local * rest * pow(rest, -1, c.pe) + c.pe * pow(c.pe, -1, rest) if rest > 1 else local
        gens.append(x % q)
    return tuple(gens)


# ---------------------------------------------------------------------------
# characters


class CharValue(NamedTuple):
    """exp(2 pi i exponent/order) in lowest terms; order == 0 encodes the value 0."""

    exponent: int
    order: int

    @property
    def is_zero(self) -> bool:
        return self.order == 0

    def __complex__(self) -> complex:
        if self.order == 0:
            return 0j
        return complex(np.exp(2j * np.pi * self.exponent / self.order))

    @property
    def value(self) -> complex:
        return complex(self)


ZERO = CharValue(0, 0)


@dataclass(frozen=True)
class DirichletCharacter:
    modulus: Modulus
    conrey_index: int
    value_exponents: tuple[int, ...]  # chi(generator_j) = exp(2 pi i k_j / group_order)
    group_order: int
    conductor: int
    is_principal: bool = field(init=False)
    is_real: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "is_principal", all(k == 0 for k in self.value_exponents))
        object.__setattr__(
            self, "is_real", all((2 * k) % self.group_order == 0 for k in self.value_exponents)
        )

    @property
    def q(self) -> int:
        return self.modulus.q

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.q

    @property
    def parity(self) -> int:
        """0 for even characters, 1 for odd ones."""
        return 0 if self.exponent_at(self.q - 1) == 0 else 1

    def exponent_at(self, n):
        """Exponent k with chi(n) = exp(2 pi i k / group_order); -1 where gcd(n, q) > 1."""
        n = np.asarray(n, dtype=np.int64)
        comps = _components(self.q)
        k = np.zeros(n.shape, dtype=np.int64)
        bad = np.gcd(n, self.q) != 1
        for c, kj in zip(comps, self.value_exponents):
            k = k + kj * np.where(bad, 0, c.log(n))
        k = np.where(bad, -1, k % self.group_order)
        return int(k) if k.ndim == 0 else k

    def values(self, n) -> np.ndarray:
        """Vectorized complex values chi(n)."""
        k = np.asarray(self.exponent_at(n))
        out = np.exp(2j * np.pi * k / self.group_order)
        return np.where(k < 0, 0j, out)

    def __call__(self, n: int) -> complex:
        return complex(self.values(n))


def _conductor_exponent(c: _Component, log_m: int) -> int:
    if log_m == 0:
        return 0
    if c.kind == "odd":
        for cc in range(1, c.e + 1):
            phi_c = c.p ** (cc - 1) * (c.p - 1)
            if (log_m * phi_c) % c.order == 0:
                return cc
        return c.e
    if c.kind == "sign":
        return 2
    v2 = (log_m & -log_m).bit_length() - 1
    return c.e - v2


@lru_cache(maxsize=4096)
def conrey_character(q: int, m: int) -> DirichletCharacter:
    modulus = build_modulus(q)
    if math.gcd(m, q) != 1:
        raise ConfigError(f"Conrey index {m} is not a unit mod {q}")
    m %= q
    if m == 0:
        m = q  # never reached for q >= 3, kept for clarity
    comps = _components(q)
    M = group_exponent(q)
    exps = []
    # the 2-part conductor depends jointly on the sign and 5-power logs
    cond_2 = 0
    conductor = 1
    for c in comps:
        a = int(c.log(m))
        if c.kind == "odd":
            exps.append(a * (M // c.order) % M)
            conductor *= c.p ** _conductor_exponent(c, a)
        elif c.kind == "sign":
            exps.append(a * (M // 2) % M)
            cond_2 = max(cond_2, _conductor_exponent(c, a))
        else:
            exps.append(a * (M // c.order) % M)
            cond_2 = max(cond_2, _conductor_exponent(c, a))
    conductor *= 2**cond_2
    return DirichletCharacter(modulus, m, tuple(exps), M, conductor)


def _crt(residues: list[tuple[int, int]]) -> int:
    x, n = 0, 1
    for r, mod in residues:
        x = x + n * ((r - x) * pow(n, -1, mod) % mod)
        n *= mod
    return x % n


def primitive_character(chi: DirichletCharacter) -> DirichletCharacter:
    """The primitive character mod the conductor that induces chi.

    Component-wise: on an odd p^e factor with conductor p^c the log of the
    label shrinks by p^(e-c); on 2^e the 5-power log shrinks by 2^(e-c).
    """
    if chi.is_principal:
        raise ConfigError("the principal character has no primitive inducer with q* >= 3")
    if chi.is_primitive:
        return chi
    m = chi.conrey_index
    parts = []
    sign = 0
    five = 0
    e2 = 0
    for c in _components(chi.q):
        a = int(c.log(m))
        cc = _conductor_exponent(c, a)
        if c.kind == "odd":
            if cc:
                pc = c.p**cc
                parts.append((pow(conrey_generator(c.p), a // c.p ** (c.e - cc), pc), pc))
        elif c.kind == "sign":
            sign, e2 = a, c.e
        else:
            five, e2 = a, c.e
    c2 = (chi.conductor & -chi.conductor).bit_length() - 1
    if c2 >= 2:
        b = five // 2 ** (e2 - c2) if c2 >= 3 else 0
        parts.append(((-1) ** sign * pow(5, b, 2**c2) % 2**c2, 2**c2))
    return conrey_character(chi.conductor, _crt(parts))


@dataclass(frozen=True)
class CharacterGroup:
    modulus: Modulus
    characters: tuple[DirichletCharacter, ...]
    conjugation_pairing: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.characters)

    def __iter__(self):
        return iter(self.characters)

    @cached_property
    def _index(self) -> dict[int, int]:
        return {chi.conrey_index: i for i, chi in enumerate(self.characters)}

    def by_conrey(self, m: int) -> DirichletCharacter:
        try:
            if not 1 <= m < max(self.modulus.q, 2):
                raise KeyError(m)
            return self.characters[self._index[m]]
        except KeyError:
            raise DataError(f"no character with Conrey index {m} mod {self.modulus.q}") from None

    def conjugate(self, chi: DirichletCharacter) -> DirichletCharacter:
        return self.characters[self.conjugation_pairing[self._index[chi.conrey_index]]]

    @property
    def principal(self) -> DirichletCharacter:
        return self.characters[0]

    @property
    def nonprincipal(self) -> tuple[DirichletCharacter, ...]:
        return self.characters[1:]

    def table(self, ns: Sequence[int] | None = None) -> np.ndarray:
        """Complex matrix of chi(n), rows in Conrey order, columns over ns (default 0..q-1)."""
        if ns is None:
            ns = np.arange(self.modulus.q)
        return np.array([chi.values(ns) for chi in self.characters])


def character_group(m: Modulus) -> CharacterGroup:
    if m.q > MAX_MODULUS:
        raise ConfigError(f"q={m.q} exceeds the supported enumeration range {MAX_MODULUS}")
    units = [int(a) for a in m.units()]
    chars = tuple(conrey_character(m.q, a) for a in units)
    pos = {a: i for i, a in enumerate(units)}
    pairing = tuple(pos[pow(a, -1, m.q)] for a in units)
    return CharacterGroup(m, chars, pairing)


def evaluate_character(chi: DirichletCharacter, n: int) -> CharValue:
    k = chi.exponent_at(int(n))
    if k < 0:
        return ZERO
    g = math.gcd(k, chi.group_order)
    return CharValue(k // g, chi.group_order // g)


def conductor_log_identity(m: Modulus, G: CharacterGroup) -> tuple[float, float]:
    """Both sides of sum_chi log q*_chi = phi(q) (log q - sum_{p|q} log p/(p-1))."""
    if G.modulus.q != m.q or len(G) != m.totient:
        raise DataError(f"character group has {len(G)} of {m.totient} characters mod {m.q}")
    lhs = math.fsum(math.log(chi.conductor) for chi in G)
    rhs = m.totient * (math.log(m.q) - prime_log_sum(m))
    return lhs, rhs
