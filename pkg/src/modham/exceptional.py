"""The outer-derivation families on the even Hamiltonian part.

All constructors return LinearMapOnBasis objects over the canonical even
Hamiltonian basis (or a supplied compatible domain), with images computed by
formula, never by solving:

* gamma_lambda: zero on the ideal, sends the top divided-power coordinate to
  a multiple of D_H(x^omega); degree n - |pi|;
* phi(i, q): D_H(f) -> partial_i^{p^q}(f) * D_H(x^omega); degree n - p^q;
* theta(i, q): D_H(f) -> x^omega * D_H(partial_i^{p^q}(f)); degree n - p^q;
* psi(i): D_H(f) -> partial_i partial_{i'}(f) * D_H(x^omega); degree n - 2;
* ad of Gamma' = sum over exterior r of x_r d_r; degree 0;
* the p^q-th power of ad partial_r, equal to D_H(f) -> D_H(partial_r^{p^q} f);
  degree -p^q.

The first four need n even (they scale by D_H(x^omega) or x^omega, whose
useful properties require the full exterior monomial to be even).
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import Params, ParamsError, SuperPoly
from .derivations import LinearMapOnBasis, ad
from .spaces import SubspaceBasis, build_space
from .witt import VectorField, d_h_mono, module_scale


@dataclass(frozen=True)
class FamilyTag:
    """Identifies one family member: kind, variable index, p-power, scalar."""

    kind: str                 # GammaLambda | Phi | Theta | Psi | AdGammaPrime | AdPartialPower
    i: int | None = None      # 0-based even-variable index where applicable
    q: int | None = None      # power exponent (p^q), q >= 1
    coeff: int = 1

    def declared_zdeg(self, par: Params) -> int:
        if self.kind == "GammaLambda":
            return par.n - sum(par.pi)
        if self.kind in ("Phi", "Theta"):
            return par.n - par.p ** self.q
        if self.kind == "Psi":
            return par.n - 2
        if self.kind == "AdGammaPrime":
            return 0
        if self.kind == "AdPartialPower":
            return -(par.p ** self.q)
        raise ParamsError(f"unknown family kind {self.kind!r}")

    def build(self, par: Params, domain=None) -> LinearMapOnBasis:
        if self.kind == "GammaLambda":
            return gamma_lambda(par, self.coeff, domain)
        if self.kind == "Phi":
            return phi(par, self.i, self.q, domain).scale(self.coeff)
        if self.kind == "Theta":
            return theta(par, self.i, self.q, domain).scale(self.coeff)
        if self.kind == "Psi":
            return psi(par, self.i, domain).scale(self.coeff)
        if self.kind == "AdGammaPrime":
            return ad_gamma_prime(par, domain).scale(self.coeff)
        if self.kind == "AdPartialPower":
            return ad_partial_power(par, self.i, self.q, domain).scale(self.coeff)
        raise ParamsError(f"unknown family kind {self.kind!r}")

    def label(self) -> str:
        if self.kind == "GammaLambda":
            return f"Gamma_{self.coeff}"
        if self.kind == "AdGammaPrime":
            return "ad Gamma'"
        if self.kind == "AdPartialPower":
            return f"(ad d{self.i + 1})^p^{self.q}"
        if self.kind == "Psi":
            return f"Psi^({self.i + 1})"
        return f"{self.kind}_{self.i + 1}^({self.q})"


def _default_domain(par: Params) -> SubspaceBasis:
    return build_space(par, "Heven")


def _require_even_n(par: Params, what: str):
    if par.n % 2:
        raise ParamsError(f"{what} requires an even number of exterior variables")


def _dh_omega(par: Params) -> VectorField:
    return d_h_mono(par, par.omega_mono())


def gamma_lambda(par: Params, lam: int, domain=None) -> LinearMapOnBasis:
    """Zero on the ideal; the top coordinate D_H(x^(pi)) goes to lam D_H(x^omega).

    For odd n the only such derivation is zero, so a nonzero lam is an error.
    """
    lam %= par.p
    if par.n % 2 and lam:
        raise ParamsError("gamma_lambda vanishes identically for odd n")
    domain = domain or _default_domain(par)
    images = {}
    pos = domain.key_position(par.pi_mono())
    if pos is not None and lam:
        images[par.pi_mono()] = _dh_omega(par).scale(lam)
    return LinearMapOnBasis.from_key_images(domain, images,
                                            zdeg=par.n - sum(par.pi))


def _partial_power_mono(par: Params, i: int, power: int, mono):
    """partial_i^power of a monomial (unit coefficient in divided powers)."""
    alpha, umask = mono
    if alpha[i] < power:
        return None
    return (alpha[:i] + (alpha[i] - power,) + alpha[i + 1:], umask)


def phi(par: Params, i: int, q: int, domain=None) -> LinearMapOnBasis:
    """First exceptional series: D_H(f) -> partial_i^{p^q}(f) D_H(x^omega)."""
    _require_even_n(par, "phi")
    if not 0 <= i < par.two_m:
        raise ParamsError(f"even-variable index {i} out of range")
    if q < 1:
        raise ParamsError("q must be >= 1")
    domain = domain or _default_domain(par)
    power = par.p ** q
    dho = _dh_omega(par)
    images = {}
    for key in domain.keys():
        g = _partial_power_mono(par, i, power, key)
        if g is None:
            continue
        img = module_scale(SuperPoly.monomial(par, g), dho)
        if not img.is_zero():
            images[key] = img
    return LinearMapOnBasis.from_key_images(domain, images, zdeg=par.n - power)


def theta(par: Params, i: int, q: int, domain=None) -> LinearMapOnBasis:
    """Second exceptional series: D_H(f) -> x^omega (ad partial_i)^{p^q}(D_H(f)),
    computed through the closed form x^omega D_H(partial_i^{p^q} f)."""
    _require_even_n(par, "theta")
    if not 0 <= i < par.two_m:
        raise ParamsError(f"even-variable index {i} out of range")
    if q < 1:
        raise ParamsError("q must be >= 1")
    domain = domain or _default_domain(par)
    power = par.p ** q
    omega = SuperPoly.monomial(par, par.omega_mono())
    images = {}
    for key in domain.keys():
        g = _partial_power_mono(par, i, power, key)
        if g is None:
            continue
        img = module_scale(omega, d_h_mono(par, g))
        if not img.is_zero():
            images[key] = img
    return LinearMapOnBasis.from_key_images(domain, images, zdeg=par.n - power)


def theta_image_on_w(par: Params, i: int, q: int, key) -> VectorField:
    """The natural extension of theta to W on a basis field (mono, dir)."""
    power = par.p ** q
    mono, d = key
    g = _partial_power_mono(par, i, power, mono)
    if g is None:
        return VectorField.zero(par)
    return module_scale(SuperPoly.monomial(par, par.omega_mono()),
                        VectorField.monomial_field(par, g, d))


def psi(par: Params, i: int, domain=None) -> LinearMapOnBasis:
    """Third exceptional series: D_H(f) -> partial_i partial_{i'}(f) D_H(x^omega),
    for 1 <= i <= m (0-based: i < m)."""
    _require_even_n(par, "psi")
    if not 0 <= i < par.m:
        raise ParamsError(f"psi index must be in the first symplectic half (< {par.m})")
    domain = domain or _default_domain(par)
    ip = par.prime[i]
    dho = _dh_omega(par)
    images = {}
    for key in domain.keys():
        alpha, umask = key
        if alpha[i] < 1 or alpha[ip] < 1:
            continue
        na = list(alpha)
        na[i] -= 1
        na[ip] -= 1
        img = module_scale(SuperPoly.monomial(par, (tuple(na), umask)), dho)
        if not img.is_zero():
            images[key] = img
    return LinearMapOnBasis.from_key_images(domain, images, zdeg=par.n - 2)


def gamma_prime(par: Params) -> VectorField:
    """Gamma' = sum of x_r d_r over the exterior variables."""
    terms = {}
    za = par.zero_alpha()
    for b in range(par.n):
        terms[((za, 1 << b), par.two_m + b)] = 1
    return VectorField(par, terms, _raw=True)


def ad_gamma_prime(par: Params, domain=None) -> LinearMapOnBasis:
    domain = domain or _default_domain(par)
    out = ad(gamma_prime(par), domain)
    out.zdeg = 0
    return out


def ad_partial_power(par: Params, r: int, q: int, domain=None) -> LinearMapOnBasis:
    """(ad partial_r)^{p^q} on the Hamiltonian side: D_H(f) -> D_H(partial_r^{p^q} f)."""
    if not 0 <= r < par.two_m:
        raise ParamsError(f"even-variable index {r} out of range")
    if q < 1:
        raise ParamsError("q must be >= 1")
    domain = domain or _default_domain(par)
    power = par.p ** q
    images = {}
    for key in domain.keys():
        g = _partial_power_mono(par, r, power, key)
        if g is not None:
            img = d_h_mono(par, g)
            if not img.is_zero():
                images[key] = img
    return LinearMapOnBasis.from_key_images(domain, images, zdeg=-power)


def ad_partial_power_iterated(par: Params, r: int, q: int, x: VectorField) -> VectorField:
    """(ad partial_r)^{p^q}(x) by literal bracket iteration (oracle route)."""
    from .witt import bracket
    d = VectorField.d(par, r)
    out = x
    for _ in range(par.p ** q):
        out = bracket(d, out)
    return out


def theorem_families(par: Params, domain=None):
    """The family members entering the vanishing-on-top decomposition:
    ad Gamma' plus, for every even variable r and 1 <= s < t_r, the Phi,
    Theta and ad-partial-power members.  Returns a list of FamilyTag."""
    tags = [FamilyTag("AdGammaPrime")]
    for r in range(par.two_m):
        for s in range(1, par.t[r]):
            if par.n % 2 == 0:
                tags.append(FamilyTag("Phi", i=r, q=s))
                tags.append(FamilyTag("Theta", i=r, q=s))
            tags.append(FamilyTag("AdPartialPower", i=r, q=s))
    return tags
