import math
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modham.algebra import (
    INHOMOGENEOUS,
    Params,
    ParamsError,
    SuperPoly,
    binom_mod_p,
    enumerate_monomials,
    mono_mul,
    mono_parity,
    mono_partial,
    mono_zdeg,
    mul,
    parity,
    partial,
    poly_str,
    zdeg,
)


@pytest.fixture(scope="module")
def par():
    # the paper-valid desk-scale parameter point
    return Params(p=5, m=2, n=4, t=(1, 1, 1, 1))


@pytest.fixture(scope="module")
def par_t2():
    return Params(p=5, m=2, n=4, t=(2, 1, 1, 1))


def mono(par, alpha=None, u=()):
    alpha = tuple(alpha) if alpha is not None else par.zero_alpha()
    return par.mono_from_u(alpha, u)


# -- Params validation --------------------------------------------------

def test_params_strict_rejects_small():
    with pytest.raises(ParamsError):
        Params(p=3, m=2, n=4, t=(1, 1, 1, 1))
    with pytest.raises(ParamsError):
        Params(p=5, m=1, n=4, t=(1, 1))
    with pytest.raises(ParamsError):
        Params(p=5, m=2, n=3, t=(1, 1, 1, 1))
    with pytest.raises(ParamsError):
        Params(p=4, m=2, n=4, t=(1, 1, 1, 1), relaxed=True)
    with pytest.raises(ParamsError):
        Params(p=5, m=2, n=4, t=(1, 1, 1))


def test_params_relaxed_warns():
    with pytest.warns(UserWarning):
        q = Params(p=5, m=1, n=2, t=(2, 1), relaxed=True)
    assert q.relaxed and q.pi == (24, 4) and q.xi == 30


def test_params_index_tables(par):
    # prime is an involution; tau(i)tau(i') = -1 on even indices
    for i in range(par.two_m):
        assert par.prime[par.prime[i]] == i
        assert par.tau[i] * par.tau[par.prime[i]] == -1
        assert par.mu[i] == 0
    for i in range(par.two_m, par.nvars):
        assert par.prime[i] == i
        assert par.tau[i] == 1
        assert par.mu[i] == 1
    assert par.prime[0] == 2 and par.prime[2] == 0
    assert par.pi == (4, 4, 4, 4) and par.xi == 20


# -- binomials -----------------------------------------------------------

def test_binom_spec_values():
    assert binom_mod_p((2,), (1,), 5) == 2
    assert math.comb(6, 3) % 5 == 0  # oracle for the next line
    assert binom_mod_p((6,), (3,), 5) == 0
    assert math.comb(8, 4) % 5 == 0
    assert binom_mod_p((8, 2), (4, 1), 5) == 0
    assert binom_mod_p(7, 7, 5) == 1


def test_binom_against_factorial_oracle():
    for p in (3, 5, 7):
        for a in range(65):
            for b in range(a + 1):
                assert binom_mod_p(a, b, p) == math.comb(a, b) % p


@given(st.integers(3, 30).filter(lambda q: all(q % d for d in range(2, q))),
       st.lists(st.tuples(st.integers(0, 200), st.integers(0, 200)), min_size=1, max_size=4))
def test_binom_vectors_match_products(p, pairs):
    a = tuple(max(x, y) for x, y in pairs)
    b = tuple(min(x, y) for x, y in pairs)
    want = 1
    for ai, bi in zip(a, b):
        want = want * math.comb(ai, bi) % p
    assert binom_mod_p(a, b, p) == want


# -- products ------------------------------------------------------------

def test_mul_divided_power_rule(par):
    x1 = SuperPoly.variable(par, 0)
    assert mul(x1, x1) == SuperPoly.monomial(par, mono(par, (2, 0, 0, 0)), 2)


def test_mul_exterior_anticommute(par):
    # x_{2m+2} * x_{2m+1} = -x_{2m+1}x_{2m+2}
    a = SuperPoly.variable(par, par.two_m + 1)
    b = SuperPoly.variable(par, par.two_m)
    want = SuperPoly.monomial(par, mono(par, u=(5, 6)), par.p - 1)
    assert mul(a, b) == want
    assert mul(b, a) == SuperPoly.monomial(par, mono(par, u=(5, 6)), 1)


def test_mul_exterior_square_zero(par):
    a = SuperPoly.variable(par, par.two_m)
    assert mul(a, a).is_zero()


def test_mul_truncation_drop(par):
    # C(6,3) = 0 mod 5: x^{(3e1)} * x^{(3e1)} would exceed pi_1 = 4 and drops
    f = SuperPoly.monomial(par, mono(par, (3, 0, 0, 0)))
    assert mul(f, f).is_zero()


def test_mul_mixed_commutes(par):
    x1 = SuperPoly.variable(par, 0)
    x5 = SuperPoly.variable(par, par.two_m)
    assert mul(x1, x5) == mul(x5, x1)


def test_mul_supercommutative_exhaustive_small(par):
    monos = par.enumerate_monomials(max_zdeg=3)
    for m1 in monos:
        f = SuperPoly.monomial(par, m1)
        s1 = mono_parity(m1)
        for m2 in monos:
            g = SuperPoly.monomial(par, m2)
            fg = mul(f, g)
            gf = mul(g, f)
            if s1 * mono_parity(m2) == 1:
                assert fg == -gf or (fg.is_zero() and gf.is_zero())
            else:
                assert fg == gf


def test_mul_associative_exhaustive_small(par):
    monos = par.enumerate_monomials(max_zdeg=2)
    polys = [SuperPoly.monomial(par, m) for m in monos]
    for f in polys:
        for g in polys:
            fg = mul(f, g)
            for h in polys:
                assert mul(fg, h) == mul(f, mul(g, h))


def test_mul_rejects_mixed_params(par, par_t2):
    with pytest.raises(ParamsError):
        mul(SuperPoly.one(par), SuperPoly.one(par_t2))


# -- partial derivatives --------------------------------------------------

def test_partial_divided_power(par):
    f = SuperPoly.monomial(par, mono(par, (2, 0, 0, 0)))
    assert partial(0, f) == SuperPoly.monomial(par, mono(par, (1, 0, 0, 0)))


def test_partial_exterior_sign(par):
    # d_{2m+2}(x_{2m+1}x_{2m+2}) = -x_{2m+1}: position sign (-1)^(2-1)
    f = SuperPoly.monomial(par, mono(par, u=(5, 6)))
    want = SuperPoly.monomial(par, mono(par, u=(5,)), par.p - 1)
    assert partial(par.two_m + 1, f) == want


def test_partial_of_one(par):
    for i in range(par.nvars):
        assert partial(i, SuperPoly.one(par)).is_zero()


def test_partial_out_of_range(par):
    with pytest.raises(IndexError):
        partial(par.nvars, SuperPoly.one(par))


def test_partials_supercommute(par):
    monos = par.enumerate_monomials(max_zdeg=3)
    for i in range(par.nvars):
        for j in range(i, par.nvars):
            sign = -1 if par.mu[i] and par.mu[j] else 1
            for m in monos:
                f = SuperPoly.monomial(par, m)
                lhs = partial(i, partial(j, f))
                rhs = partial(j, partial(i, f))
                assert lhs == (rhs if sign == 1 else -rhs)


def test_partial_super_leibniz(par):
    monos = par.enumerate_monomials(max_zdeg=3)
    for i in range(par.nvars):
        mu_i = par.mu[i]
        for m1 in monos:
            f = SuperPoly.monomial(par, m1)
            pf = mono_parity(m1)
            for m2 in monos[:40]:
                g = SuperPoly.monomial(par, m2)
                lhs = partial(i, mul(f, g))
                rhs = mul(partial(i, f), g)
                tail = mul(f, partial(i, g))
                if mu_i and pf:
                    rhs = rhs - tail
                else:
                    rhs = rhs + tail
                assert lhs == rhs


# -- parity / zdeg --------------------------------------------------------

def test_parity_zdeg_examples(par):
    f = SuperPoly.monomial(par, mono(par, (2, 0, 0, 0), (5, 6)))
    assert parity(f) == 0 and zdeg(f) == 4
    g = SuperPoly.variable(par, par.two_m)
    assert parity(g) == 1 and zdeg(g) == 1
    h = SuperPoly.variable(par, 0) + g
    assert parity(h) is INHOMOGENEOUS and zdeg(h) == 1
    assert parity(SuperPoly.zero(par)) == 0 and zdeg(SuperPoly.zero(par)) == 0


# -- enumeration -----------------------------------------------------------

def test_enumeration_counts(par):
    monos = enumerate_monomials(par)
    assert len(monos) == 10000 == par.dim_O  # 5^4 * 2^4
    assert enumerate_monomials(par, exact_zdeg=0) == [par.one_mono()]
    assert len(enumerate_monomials(par, parity=0)) == 5000
    # canonical order is strictly increasing in the sort key
    keys = [(mono_zdeg(m), m[0], m[1]) for m in monos]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)


def test_enumeration_degree_filter_oracle(par):
    # independent count: iterate the exponent box directly
    box = list(product(range(5), repeat=4))
    want = sum(1 for a in box for u in range(16)
               if sum(a) + bin(u).count("1") <= 6)
    assert len(enumerate_monomials(par, max_zdeg=6)) == want


# -- printing ---------------------------------------------------------------

def test_poly_str_canonical(par):
    f = SuperPoly.monomial(par, mono(par, (3, 0, 0, 0)), 2)
    g = SuperPoly.monomial(par, mono(par, u=(5, 6)))
    assert poly_str(f + g) == "x{5,6} + 2*x^(3,0,0,0)"
    assert poly_str(SuperPoly.zero(par)) == "0"
    assert poly_str(SuperPoly.one(par)) == "1"


@settings(max_examples=60)
@given(st.lists(st.tuples(st.tuples(*[st.integers(0, 4)] * 4),
                          st.integers(0, 15), st.integers(1, 4)),
                min_size=0, max_size=6))
def test_add_sub_roundtrip(terms):
    par = Params(p=5, m=2, n=4, t=(1, 1, 1, 1))
    f = SuperPoly.zero(par)
    for alpha, umask, c in terms:
        f = f + SuperPoly.monomial(par, (alpha, umask), c)
    assert (f - f).is_zero()
    assert f + SuperPoly.zero(par) == f
    assert -(-f) == f
