import random
import warnings

import pytest

from modham.algebra import Params, ParamsError, SuperPoly
from modham.derivations import is_derivation, leibniz_defect
from modham.exceptional import (
    FamilyTag,
    ad_gamma_prime,
    ad_partial_power,
    ad_partial_power_iterated,
    gamma_lambda,
    gamma_prime,
    phi,
    psi,
    theorem_families,
    theta,
    theta_image_on_w,
)
from modham.spaces import build_space
from modham.witt import VectorField, bracket, d_h, d_h_mono, module_scale


@pytest.fixture(scope="module")
def par():
    # t_1 = 2 so that p-th powers act nontrivially
    return Params(p=5, m=2, n=4, t=(2, 1, 1, 1))


@pytest.fixture(scope="module")
def h(par):
    return build_space(par, "Heven")


@pytest.fixture(scope="module")
def rpar():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return Params(p=5, m=1, n=2, t=(2, 1), relaxed=True)


def key(par, alpha=None, u=()):
    al = tuple(alpha) if alpha is not None else par.zero_alpha()
    return par.mono_from_u(al, u)


def dh_omega(par):
    return d_h_mono(par, par.omega_mono())


# -- gamma_lambda -------------------------------------------------------------

def test_gamma_vanishes_on_ideal(par, h):
    G = gamma_lambda(par, 3, h)
    assert G.image_of_key(key(par, (2, 0, 0, 0))).is_zero()
    assert G.image_of_key(par.pi_mono()) == dh_omega(par).scale(3)
    assert G.zdeg == par.n - sum(par.pi)


def test_gamma_zdeg_value():
    q = Params(p=5, m=2, n=4, t=(1, 1, 1, 1))
    G = gamma_lambda(q, 1)
    assert G.zdeg == 4 - 16 == -12
    assert G.measured_zdeg() == -12


def test_gamma_odd_n_errors():
    q = Params(p=5, m=2, n=5, t=(1, 1, 1, 1))
    with pytest.raises(ParamsError):
        gamma_lambda(q, 1)
    assert gamma_lambda(q, 0).is_zero()


# -- phi ----------------------------------------------------------------------

def test_phi_unit_shift(par, h):
    # d_1^5(x^(5 e1)) = 1, so the image is exactly D_H(x^omega)
    P = phi(par, 0, 1, h)
    assert P.image_of_key(key(par, (5, 0, 0, 0))) == dh_omega(par)
    got = P.image_of_key(key(par, (6, 0, 0, 0)))
    want = module_scale(SuperPoly.monomial(par, key(par, (1, 0, 0, 0))), dh_omega(par))
    assert got == want
    assert P.image_of_key(key(par, (4, 0, 0, 0))).is_zero()
    # exterior content kills the image: x^u x^(omega minus r) = 0 for |u| = 2
    assert P.image_of_key(key(par, (5, 0, 0, 0), (5, 6))).is_zero()


def test_phi_zero_when_t_is_one(par, h):
    assert phi(par, 1, 1, h).is_zero()  # t_2 = 1: all exponents < 5
    assert phi(par, 0, 2, h).is_zero()  # p^2 = 25 > pi_1 = 24


def test_phi_odd_n_errors():
    q = Params(p=5, m=2, n=5, t=(2, 1, 1, 1))
    with pytest.raises(ParamsError):
        phi(q, 0, 1)


# -- theta ---------------------------------------------------------------------

def test_theta_closed_form(par, h):
    T = theta(par, 0, 1, h)
    # f = x^(6 e1): Theta(D_H f) = x^omega D_H(x^(e1)) = tau(1) x^omega d_1'
    got = T.image_of_key(key(par, (6, 0, 0, 0)))
    want = VectorField.monomial_field(
        par, key(par, u=(5, 6, 7, 8)), par.prime[0], par.tau[0])
    assert got == want
    assert T.image_of_key(key(par, (4, 0, 0, 0))).is_zero()
    assert T.zdeg == par.n - 5


def test_theta_equals_omega_scale_of_ad_power(par, h):
    AD = ad_partial_power(par, 0, 1, h)
    T = theta(par, 0, 1, h)
    omega = SuperPoly.monomial(par, par.omega_mono())
    rng = random.Random(5)
    keys = h.keys()
    for _ in range(60):
        k = rng.choice(keys)
        assert T.image_of_key(k) == module_scale(omega, AD.image_of_key(k))


# -- psi ----------------------------------------------------------------------

def test_psi_values(par, h):
    S = psi(par, 0, h)
    assert S.image_of_key(key(par, (1, 0, 1, 0))) == dh_omega(par)
    assert S.image_of_key(key(par, u=(5, 6))).is_zero()
    assert S.zdeg == par.n - 2
    with pytest.raises(ParamsError):
        psi(par, par.m, h)  # only the first symplectic half is allowed


# -- ad Gamma' and ad-partial powers ----------------------------------------------

def test_ad_gamma_prime_identity(par, h):
    D = ad_gamma_prime(par, h)
    for i in range(par.two_m):
        for u in ((5, 6), (5, 7), (7, 8)):
            k = key(par, par.eps(i), u)
            want = VectorField.monomial_field(
                par, key(par, u=u), par.prime[i], 2 * par.tau[i])
            assert D.image_of_key(k) == want


def test_ad_partial_power_matches_iterated_bracket(par, h):
    AD = ad_partial_power(par, 0, 1, h)
    rng = random.Random(9)
    keys = h.keys()
    for _ in range(25):
        k = rng.choice(keys)
        x = d_h_mono(par, k)
        assert AD.image_of_key(k) == ad_partial_power_iterated(par, 0, 1, x)
    # spec example: (ad d_1)^5 (D_H(x^(6 e1))) = D_H(x^(e1))
    assert AD.image_of_key(key(par, (6, 0, 0, 0))) == d_h(
        SuperPoly.monomial(par, key(par, (1, 0, 0, 0))))


def test_ad_partial_power_zero_at_t1():
    q = Params(p=5, m=2, n=4, t=(1, 1, 1, 1))
    assert ad_partial_power(q, 0, 1).is_zero()


# -- derivation property (small relaxed scale, exhaustive) -------------------------

def test_families_are_derivations_small(rpar):
    h = build_space(rpar, "Heven")
    fams = {
        "phi": phi(rpar, 0, 1, h),
        "theta": theta(rpar, 0, 1, h),
        "gamma": gamma_lambda(rpar, 1, h),
        "adgp": ad_gamma_prime(rpar, h),
        "adp5": ad_partial_power(rpar, 0, 1, h),
    }
    for name, D in fams.items():
        assert not D.is_zero(), name
        rep = is_derivation(D, mode="exhaustive")
        assert rep.passed, (name, rep.counterexample)


def test_psi_leibniz_defect_witness(par, h):
    # The third series is NOT a derivation: on a = x^(2 eps_1'), b = x^(2 eps_1)
    # the defect equals -D_H(x^omega) exactly (values of psi itself are fine;
    # the Leibniz rule is what breaks).
    from modham.derivations import leibniz_defect
    S = psi(par, 0, h)
    a = d_h_mono(par, key(par, (0, 0, 2, 0)))
    b = d_h_mono(par, key(par, (2, 0, 0, 0)))
    defect = leibniz_defect(S, a, b)
    assert defect == dh_omega(par).scale(-1)
    rep = is_derivation(S, mode="sampled", sample_count=0, cap=3)
    assert not rep.passed


def test_theta_on_w_has_defect_witness(par):
    # Theta extended to all of W is not a derivation: exhibit a pair
    q = 1
    i = 0
    found = None
    w = build_space(par, "Weven")
    keys = [k for k in w.keys()][: 4000]
    # targeted search: x = f d_r with high 1-exponent, y with exterior content
    for a1 in (5, 6):
        for r in range(par.nvars):
            x = (key(par, (a1, 0, 0, 0)), r)
            for u in ((5,), (5, 6)):
                for s in range(par.nvars):
                    ykey = (key(par, (1, 0, 0, 0), u), s)
                    if ykey not in w.space.index or x not in w.space.index:
                        continue
                    X = VectorField(par, {x: 1}, _raw=True)
                    Y = VectorField(par, {ykey: 1}, _raw=True)
                    lhs = theta_image_on_w(par, i, q, x)
                    rhs = theta_image_on_w(par, i, q, ykey)
                    tb = bracket(X, Y)
                    img = VectorField.zero(par)
                    for kk, c in tb.terms.items():
                        img = img + theta_image_on_w(par, i, q, kk).scale(c)
                    defect = img - bracket(lhs, Y) - bracket(X, rhs)
                    if not defect.is_zero():
                        found = (x, ykey, defect)
                        break
                if found:
                    break
            if found:
                break
        if found:
            break
    assert found is not None


def test_theorem_families_tags(par):
    tags = theorem_families(par)
    kinds = [t.kind for t in tags]
    assert kinds.count("AdGammaPrime") == 1
    assert kinds.count("Phi") == 1 and kinds.count("Theta") == 1  # only t_1 = 2
    assert kinds.count("AdPartialPower") == 1
    for t in tags:
        D = t.build(par)
        if not D.is_zero():
            assert D.measured_zdeg() == t.declared_zdeg(par)
    assert FamilyTag("Phi", i=0, q=1).label() == "Phi_1^(1)"
