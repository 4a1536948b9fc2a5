"""Vector fields of W(2m, n; t): application, module scaling, the Lie
super-bracket, and the Hamiltonian map D_H.

A field is a sparse sum of f*partial_i terms, stored as a dict keyed by
(mono, direction) with nonzero scalars.  The term (f, i) has parity
p(f) + mu(i) and Z-degree zdeg(f) - 1.  Brackets are accumulated term by
term; no dense intermediates appear anywhere.
"""

from __future__ import annotations

from .algebra import (
    Mono,
    Params,
    ParamsError,
    SuperPoly,
    INHOMOGENEOUS,
    mono_mul,
    mono_parity,
    mono_partial,
    mono_sort_key,
    mono_str,
    mono_zdeg,
)

FieldKey = tuple  # (mono, direction)


def dh_terms(par: Params, mono: Mono):
    """D_H applied to a single monomial, as a tuple of (mono', dir, coeff).

    D_H(a) = sum_i tau(i) (-1)^(mu(i) p(a)) partial_i(a) partial_{i'};
    cached on the Params instance since these tables back every bracket.
    """
    got = par._dh_cache.get(mono)
    if got is not None:
        return got
    p = par.p
    alpha, umask = mono
    out = []
    for i in range(par.two_m):
        e = alpha[i]
        if e:
            c = 1 if par.tau[i] == 1 else p - 1
            out.append(((alpha[:i] + (e - 1,) + alpha[i + 1:], umask), par.prime[i], c))
    if umask:
        p_a = umask.bit_count() & 1
        v = umask
        while v:
            low = v & -v
            v ^= low
            b = low.bit_length() - 1
            # sign of partial: (-1)^(bits below b); extra (-1)^p(a) for mu(i)=1
            s = (umask & (low - 1)).bit_count() & 1
            c = p - 1 if s ^ p_a else 1
            out.append(((alpha, umask ^ low), par.two_m + b, c))
    got = tuple(out)
    par._dh_cache[mono] = got
    return got


def dh_items(par: Params, mono: Mono):
    """dh_terms in the ((mono', dir), coeff) shape bracket_items consumes."""
    got = par._dhi_cache.get(mono)
    if got is None:
        got = tuple(((m, d), c) for m, d, c in dh_terms(par, mono))
        par._dhi_cache[mono] = got
    return got


def poisson_mono(par: Params, a: Mono, b: Mono):
    """D_H(a)(b) for monomials, as a raw dict mono -> coeff.

    This is the coordinate form of the bracket on Hamiltonian fields: by the
    identity [D_H(a), D_H(b)] = D_H(D_H(a)(b)) it computes brackets of
    D_H-indexed basis vectors without leaving the algebra.
    """
    p = par.p
    tm = par.two_m
    out = {}
    beta, vmask = b
    for (ma, ua), d, c in dh_terms(par, a):
        # partial_d(b)
        if d < tm:
            e = beta[d]
            if not e:
                continue
            mb = (beta[:d] + (e - 1,) + beta[d + 1:], vmask)
            cc = c
        else:
            bit = 1 << (d - tm)
            if not vmask & bit:
                continue
            mb = (beta, vmask ^ bit)
            cc = p - c if (vmask & (bit - 1)).bit_count() & 1 else c
        hit = mono_mul(par, (ma, ua), mb)
        if hit is None:
            continue
        cm, mono = hit
        s = (out.get(mono, 0) + cc * cm) % p
        if s:
            out[mono] = s
        else:
            del out[mono]
    return out


def bracket_items(par: Params, items1, items2):
    """Super-bracket of two fields given as ((mono, dir), coeff) items.

    [a d_i, b d_j] = a d_i(b) d_j - (-1)^(p(a d_i) p(b d_j)) b d_j(a) d_i,
    extended bilinearly.  Returns a raw dict (mono, dir) -> coeff.
    """
    p = par.p
    out = {}
    for (m1, d1), c1 in items1:
        p1 = (m1[1].bit_count() + (1 if d1 >= par.two_m else 0)) & 1
        for (m2, d2), c2 in items2:
            c12 = c1 * c2
            hit = mono_partial(par, d1, m2)
            if hit is not None:
                s, mb = hit
                prod = mono_mul(par, m1, mb)
                if prod is not None:
                    cm, mono = prod
                    key = (mono, d2)
                    v = (out.get(key, 0) + c12 * s * cm) % p
                    if v:
                        out[key] = v
                    else:
                        del out[key]
            hit = mono_partial(par, d2, m1)
            if hit is not None:
                p2 = (m2[1].bit_count() + (1 if d2 >= par.two_m else 0)) & 1
                s, ma = hit
                prod = mono_mul(par, m2, ma)
                if prod is not None:
                    cm, mono = prod
                    key = (mono, d1)
                    w = c12 * s * cm
                    if not (p1 and p2):
                        w = -w
                    v = (out.get(key, 0) + w) % p
                    if v:
                        out[key] = v
                    else:
                        del out[key]
    return out


class VectorField:
    """Sparse element of W(2m, n; t): dict (mono, direction) -> scalar."""

    __slots__ = ("par", "terms")

    def __init__(self, par: Params, terms=None, _raw=False):
        self.par = par
        if terms is None:
            self.terms = {}
        elif _raw:
            self.terms = terms
        else:
            clean = {}
            for (mono, d), c in dict(terms).items():
                par.check_mono(mono)
                if not 0 <= d < par.nvars:
                    raise ParamsError(f"direction {d} out of range")
                c %= par.p
                if c:
                    clean[(mono, d)] = c
            self.terms = clean

    @classmethod
    def zero(cls, par):
        return cls(par, {}, _raw=True)

    @classmethod
    def monomial_field(cls, par, mono, direction, coeff=1):
        par.check_mono(mono)
        coeff %= par.p
        return cls(par, {(mono, direction): coeff} if coeff else {}, _raw=True)

    @classmethod
    def d(cls, par, direction):
        """The coordinate field partial_direction (0-based absolute)."""
        return cls.monomial_field(par, par.one_mono(), direction)

    def _require_same(self, other):
        if self.par != other.par:
            raise ParamsError("mixed Params in Witt operation")

    def __add__(self, other):
        self._require_same(other)
        p = self.par.p
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = (out.get(k, 0) + c) % p
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return VectorField(self.par, out, _raw=True)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        p = self.par.p
        return VectorField(self.par, {k: p - c for k, c in self.terms.items()}, _raw=True)

    def scale(self, c):
        c %= self.par.p
        if not c:
            return VectorField.zero(self.par)
        p = self.par.p
        return VectorField(self.par, {k: c * v % p for k, v in self.terms.items()}, _raw=True)

    def __rmul__(self, c):
        if isinstance(c, int):
            return self.scale(c)
        return NotImplemented

    def __eq__(self, other):
        return (isinstance(other, VectorField) and self.par == other.par
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.par, frozenset(self.terms.items())))

    def is_zero(self):
        return not self.terms

    def items_sorted(self):
        return sorted(self.terms.items(),
                      key=lambda kv: (kv[0][1], mono_sort_key(kv[0][0])))

    def coeff(self, mono, direction):
        return self.terms.get((mono, direction), 0)

    def parity(self):
        it = iter(self.terms)
        try:
            k = next(it)
        except StopIteration:
            return 0
        par0 = (mono_parity(k[0]) + self.par.mu[k[1]]) & 1
        for k in it:
            if (mono_parity(k[0]) + self.par.mu[k[1]]) & 1 != par0:
                return INHOMOGENEOUS
        return par0

    def zdeg(self):
        it = iter(self.terms)
        try:
            k = next(it)
        except StopIteration:
            return 0
        d0 = mono_zdeg(k[0]) - 1
        for k in it:
            if mono_zdeg(k[0]) - 1 != d0:
                return INHOMOGENEOUS
        return d0

    def homogeneous_parts(self):
        parts = {}
        for (mono, d), c in self.terms.items():
            parts.setdefault(mono_zdeg(mono) - 1, {})[(mono, d)] = c
        return {k: VectorField(self.par, t, _raw=True) for k, t in sorted(parts.items())}

    def __repr__(self):
        return f"VectorField({field_str(self)})"

    def __str__(self):
        return field_str(self)


def apply(D: VectorField, f: SuperPoly) -> SuperPoly:
    """Act on the algebra: (sum a_i d_i)(f) = sum a_i * partial_i(f)."""
    if D.par != f.par:
        raise ParamsError("mixed Params in apply")
    par = D.par
    p = par.p
    out = {}
    for (m1, d), c1 in D.terms.items():
        for m2, c2 in f.terms.items():
            hit = mono_partial(par, d, m2)
            if hit is None:
                continue
            s, mb = hit
            prod = mono_mul(par, m1, mb)
            if prod is None:
                continue
            cm, mono = prod
            v = (out.get(mono, 0) + c1 * c2 * s * cm) % p
            if v:
                out[mono] = v
            else:
                del out[mono]
    return SuperPoly(par, out, _raw=True)


def module_scale(a: SuperPoly, D: VectorField) -> VectorField:
    """O-module structure: a * (sum f_i d_i) = sum (a f_i) d_i."""
    if D.par != a.par:
        raise ParamsError("mixed Params in module_scale")
    par = D.par
    p = par.p
    out = {}
    for (m1, d), c1 in D.terms.items():
        for m2, c2 in a.terms.items():
            prod = mono_mul(par, m2, m1)
            if prod is None:
                continue
            cm, mono = prod
            key = (mono, d)
            v = (out.get(key, 0) + c1 * c2 * cm) % p
            if v:
                out[key] = v
            else:
                del out[key]
    return VectorField(par, out, _raw=True)


def bracket(A: VectorField, B: VectorField) -> VectorField:
    """Lie super-bracket on W(2m, n; t)."""
    A._require_same(B)
    return VectorField(A.par, bracket_items(A.par, A.terms.items(), B.terms.items()),
                       _raw=True)


def d_h(a: SuperPoly) -> VectorField:
    """The Hamiltonian map; kernel is exactly the constants.

    Inhomogeneous input is split by parity and the images summed, since the
    defining sign depends on p(a).
    """
    par = a.par
    p = par.p
    out = {}
    for mono, c in a.terms.items():
        for m2, d, s in dh_terms(par, mono):
            key = (m2, d)
            v = (out.get(key, 0) + c * s) % p
            if v:
                out[key] = v
            else:
                del out[key]
    return VectorField(par, out, _raw=True)


def d_h_mono(par: Params, mono: Mono) -> VectorField:
    return VectorField(par, {(m, d): c for m, d, c in dh_terms(par, mono)}, _raw=True)


def dh_invert(par: Params, F: VectorField):
    """The constant-free a with d_h(a) = F, or None if F is not a D_H image.

    Each W-coordinate (g, d) receives a contribution from at most one
    monomial b (the integral of g along prime(d)), so candidates are read
    off termwise and the reconstruction is verified exactly at the end.
    """
    if F.is_zero():
        return SuperPoly.zero(par)
    p = par.p
    cand = {}
    for (g, d), c in F.terms.items():
        i = par.prime[d]
        alpha, umask = g
        if i < par.two_m:
            if alpha[i] >= par.pi[i]:
                return None
            b = (alpha[:i] + (alpha[i] + 1,) + alpha[i + 1:], umask)
        else:
            bit = 1 << (i - par.two_m)
            if umask & bit:
                return None
            b = (alpha, umask | bit)
        if b in cand:
            continue
        s = 0
        for m2, dd, cc in dh_terms(par, b):
            if m2 == g and dd == d:
                s = cc
                break
        if not s:
            return None
        cand[b] = c * pow(s, p - 2, p) % p
    a = SuperPoly(par, cand, _raw=True)
    return a if d_h(a) == F else None


def poisson(a: SuperPoly, b: SuperPoly) -> SuperPoly:
    """D_H(a)(b), bilinearly: the coordinate bracket on D_H images."""
    a._require_same(b)
    par = a.par
    p = par.p
    out = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            cab = ca * cb
            for mono, c in poisson_mono(par, ma, mb).items():
                v = (out.get(mono, 0) + cab * c) % p
                if v:
                    out[mono] = v
                else:
                    del out[mono]
    return SuperPoly(par, out, _raw=True)


def field_parity(D: VectorField):
    return D.parity()


def field_zdeg(D: VectorField):
    return D.zdeg()


def field_str(D: VectorField) -> str:
    if not D.terms:
        return "0"
    out = []
    for (mono, d), c in D.items_sorted():
        ms = mono_str(D.par, mono)
        s = "" if c == 1 else f"{c}*"
        if ms != "1":
            s += ms + " "
        out.append(s + f"d{d + 1}")
    return " + ".join(out)
