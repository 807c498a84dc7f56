import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from racelab.errors import ConfigError, DataError
from racelab.modchar import (CharacterGroup, build_modulus, c_coefficient, character_group,
                             conductor_log_identity, conrey_character, evaluate_character, factorize,
                             primitive_character, prime_log_sum)


def brute_conductor(chi):
    """Smallest d | q such that chi is trivial on units congruent to 1 mod d."""
    q = chi.q
    units = [n for n in range(1, q + 1) if math.gcd(n, q) == 1]
    for d in sorted(d for d in range(1, q + 1) if q % d == 0):
        if all(abs(chi(n) - 1) < 1e-12 for n in units if n % d == 1 % d):
            return d
    return q


class TestModulus:
    def test_twelve(self):
        m = build_modulus(12)
        assert m.factorization == ((2, 2), (3, 1))
        assert (m.totient, m.divisor_count) == (4, 6)

    def test_prime(self):
        m = build_modulus(97)
        assert m.factorization == ((97, 1),)
        assert (m.totient, m.divisor_count) == (96, 2)

    @pytest.mark.parametrize("q", [2, 1, 0, -5])
    def test_rejects_small(self, q):
        with pytest.raises(ConfigError):
            build_modulus(q)

    @given(st.integers(3, 10**6))
    @settings(max_examples=200, deadline=None)
    def test_invariants(self, q):
        m = build_modulus(q)
        assert math.prod(p**e for p, e in m.factorization) == q
        assert m.totient == math.prod(p ** (e - 1) * (p - 1) for p, e in m.factorization)
        assert m.divisor_count == math.prod(e + 1 for _, e in m.factorization)

    def test_totient_brute(self):
        for q in range(3, 300):
            assert build_modulus(q).totient == sum(math.gcd(a, q) == 1 for a in range(1, q + 1))

    def test_factorize_primes(self):
        assert factorize(2**5 * 3**2 * 101) == [(2, 5), (3, 2), (101, 1)]


class TestCCoefficient:
    def test_examples(self):
        assert c_coefficient(build_modulus(8), 3) == -1
        assert c_coefficient(build_modulus(4), 1) == 1
        assert c_coefficient(build_modulus(8), 1) == 3

    def test_non_unit(self):
        with pytest.raises(ConfigError):
            c_coefficient(build_modulus(12), 6)

    @given(st.integers(3, 2000), st.data())
    @settings(max_examples=150, deadline=None)
    def test_two_values(self, q, data):
        m = build_modulus(q)
        a = data.draw(st.sampled_from([int(u) for u in m.units()]))
        c = c_coefficient(m, a)
        assert c in (-1, c_coefficient(m, 1))
        assert c < m.divisor_count
        is_square = any(b * b % q == a for b in range(q))
        assert (c == -1) == (not is_square)


def test_prime_log_sum():
    assert prime_log_sum(build_modulus(12)) == pytest.approx(math.log(2) + math.log(3) / 2, abs=1e-15)
    assert prime_log_sum(build_modulus(5)) == pytest.approx(math.log(5) / 4, abs=1e-15)
    assert prime_log_sum(build_modulus(12)) == pytest.approx(1.242453, abs=5e-7)
    assert prime_log_sum(build_modulus(5)) == pytest.approx(0.402359, abs=5e-7)


class TestCharacterGroup:
    def test_mod4(self):
        G = character_group(build_modulus(4))
        assert len(G) == 2
        assert sorted(chi.conductor for chi in G) == [1, 4]
        assert G.principal.is_principal and G.nonprincipal[0].is_real

    def test_mod12_conductors(self):
        G = character_group(build_modulus(12))
        assert sorted(chi.conductor for chi in G) == [1, 3, 4, 12]

    def test_mod5_one_real(self):
        G = character_group(build_modulus(5))
        assert len(G) == 4
        assert sum(chi.is_real for chi in G.nonprincipal) == 1

    @pytest.mark.parametrize("q", [8, 9, 12, 15, 16, 24, 25, 27, 32, 45, 63, 64, 100])
    def test_conductor_brute_force(self, q):
        for chi in character_group(build_modulus(q)):
            assert chi.conductor == brute_conductor(chi)

    @pytest.mark.parametrize("q", [12, 15, 16, 36, 40, 63, 72])
    def test_inducing_character(self, q):
        for chi in character_group(build_modulus(q)).nonprincipal:
            p = primitive_character(chi)
            assert p.is_primitive and p.q == chi.conductor
            n = np.arange(1, 3 * q)
            units = np.gcd(n, q) == 1
            assert np.allclose(chi.values(n[units]), p.values(n[units]), atol=1e-12)

    def test_closed_under_product(self):
        G = character_group(build_modulus(21))
        T = G.table()
        rows = {tuple(np.round(r, 9)) for r in T}
        for i in range(len(G)):
            for j in range(len(G)):
                assert tuple(np.round(T[i] * T[j], 9)) in rows

    def test_exactly_one_principal(self):
        for q in (3, 8, 30, 49):
            assert sum(chi.is_principal for chi in character_group(build_modulus(q))) == 1

    def test_principal_has_no_inducer(self):
        with pytest.raises(ConfigError):
            primitive_character(character_group(build_modulus(12)).principal)

    def test_unknown_label(self):
        with pytest.raises(DataError):
            character_group(build_modulus(12)).by_conrey(6)


class TestEvaluate:
    def test_examples(self):
        G4 = character_group(build_modulus(4))
        assert complex(evaluate_character(G4.nonprincipal[0], 3)) == pytest.approx(-1)
        G12 = character_group(build_modulus(12))
        for chi in G12:
            assert evaluate_character(chi, 6).is_zero
            assert complex(evaluate_character(G12.principal, 5)) == 1

    @given(st.integers(3, 400), st.data())
    @settings(max_examples=80, deadline=None)
    def test_multiplicative_and_conjugate(self, q, data):
        G = character_group(build_modulus(q))
        chi = data.draw(st.sampled_from(G.characters))
        bar = G.conjugate(chi)
        rng = np.random.default_rng(q)
        m = rng.integers(1, 10**6, 1000)
        n = rng.integers(1, 10**6, 1000)
        assert np.allclose(chi.values(m * n), chi.values(m) * chi.values(n), atol=1e-12)
        assert np.allclose(bar.values(m), np.conj(chi.values(m)), atol=1e-12)
        k = int(m[0])
        v, vb = evaluate_character(chi, k), evaluate_character(bar, k)
        assert complex(vb) == pytest.approx(complex(v).conjugate(), abs=1e-12)


def orthogonality_error(q: int) -> float:
    G = character_group(build_modulus(q))
    T = G.table()
    gram = T @ T.conj().T
    return float(np.max(np.abs(gram - G.modulus.totient * np.eye(len(G)))))


@pytest.mark.parametrize("q", [3, 4, 8, 12, 24, 60, 97, 120, 128, 199, 200])
def test_orthogonality(q):
    assert orthogonality_error(q) < 1e-9


class TestConductorIdentity:
    def test_twelve(self):
        m = build_modulus(12)
        lhs, rhs = conductor_log_identity(m, character_group(m))
        assert lhs == pytest.approx(math.log(144), rel=1e-14)
        assert rhs == pytest.approx(math.log(144), rel=1e-13)

    @pytest.mark.parametrize("q", [3, 4])
    def test_small(self, q):
        m = build_modulus(q)
        lhs, rhs = conductor_log_identity(m, character_group(m))
        assert lhs == pytest.approx(math.log(q), rel=1e-14)
        assert rhs == pytest.approx(math.log(q), rel=1e-13)

    def test_partial_group_rejected(self):
        m = build_modulus(12)
        G = character_group(m)
        partial = CharacterGroup(m, G.characters[:2], (0, 1))
        with pytest.raises(DataError):
            conductor_log_identity(m, partial)


def test_conrey_label_values():
    # the Conrey character 5.2 sends the generator 2 to i
    chi = conrey_character(5, 2)
    assert chi(2) == pytest.approx(1j)
    assert chi.parity == 1 and not chi.is_real
