"""Exact arithmetic in the truncated divided-power/exterior superalgebra over GF(p).

The base object is O(2m, n; t): the tensor product of a truncated divided
power algebra in 2m even variables (exponent i capped at p^{t_i} - 1) with an
exterior algebra in n odd variables.  Everything is exact over the prime
field: scalars are least nonnegative residues mod p, monomials are
(alpha, umask) pairs, polynomials are sparse dicts.

Monomial encoding used throughout the package:

    mono = (alpha, umask)

where ``alpha`` is a tuple of 2m nonnegative ints (componentwise <= pi_i) and
``umask`` is an n-bit int whose bit j stands for the exterior variable with
absolute index 2m + 1 + j.  All internal indices are 0-based; the printers
and the CLI expose the 1-based absolute indexing.
"""

from __future__ import annotations

import warnings
from itertools import product as _iproduct

Mono = tuple  # (alpha: tuple[int, ...], umask: int)

INHOMOGENEOUS = None  # returned by parity/zdeg for mixed elements


class ParamsError(ValueError):
    """Invalid or out-of-hypothesis algebra parameters."""


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    i = 2
    while i * i <= q:
        if q % i == 0:
            return False
        i += 1
    return True


class Params:
    """Fixed parameters (p, m, n, t) plus derived index tables.

    Even variables are indexed 0..2m-1, exterior variables 2m..2m+n-1
    (absolute).  ``prime[i]`` is the symplectic partner index i', ``tau[i]``
    the sign used by the Hamiltonian map, ``mu[i]`` the parity of the i-th
    derivation.  Strict mode enforces m > 1, n > 3, p > 3; relaxed mode
    permits smaller parameters for oracle runs and marks everything derived
    from them as extrapolated.
    """

    __slots__ = (
        "p", "m", "n", "t", "two_m", "nvars", "pi", "xi",
        "prime", "tau", "mu", "relaxed", "omega_mask", "dim_O",
        "_binom", "_dh_cache", "_dhi_cache", "_inv_cache",
    )

    def __init__(self, p, m, n, t, relaxed=False):
        if not _is_prime(p) or p == 2:
            raise ParamsError(f"p must be an odd prime, got {p}")
        if m < 1 or n < 0:
            raise ParamsError(f"need m >= 1 and n >= 0, got m={m}, n={n}")
        t = tuple(int(x) for x in t)
        if len(t) != 2 * m:
            raise ParamsError(f"t must have length 2m = {2*m}, got {len(t)}")
        if any(x < 1 for x in t):
            raise ParamsError(f"all t_i must be >= 1, got {t}")
        if not relaxed:
            bad = []
            if m <= 1:
                bad.append(f"m > 1 (got m={m})")
            if n <= 3:
                bad.append(f"n > 3 (got n={n})")
            if p <= 3:
                bad.append(f"p > 3 (got p={p})")
            if bad:
                raise ParamsError(
                    "strict mode requires " + ", ".join(bad)
                    + "; pass relaxed=True to override")
        else:
            if m <= 1 or n <= 3 or p <= 3:
                warnings.warn(
                    f"parameters (p={p}, m={m}, n={n}) are below the standing "
                    "hypotheses m > 1, n > 3, p > 3; results are extrapolated",
                    stacklevel=2)
        self.p = p
        self.m = m
        self.n = n
        self.t = t
        self.two_m = 2 * m
        self.nvars = 2 * m + n
        self.pi = tuple(p ** ti - 1 for ti in t)
        self.xi = sum(self.pi) + n
        self.relaxed = bool(relaxed)
        self.omega_mask = (1 << n) - 1
        dim = 1 << n
        for ti in t:
            dim *= p ** ti
        self.dim_O = dim
        prime = []
        tau = []
        for i in range(2 * m):
            prime.append(i + m if i < m else i - m)
            tau.append(1 if i < m else -1)
        for j in range(n):
            prime.append(2 * m + j)
            tau.append(1)
        self.prime = tuple(prime)
        self.tau = tuple(tau)
        self.mu = tuple(0 if i < 2 * m else 1 for i in range(self.nvars))
        # binomial tables mod p, one per even variable: B[i][a][b] = C(a, b)
        self._binom = []
        for i in range(2 * m):
            top = self.pi[i]
            tab = [[0] * (top + 1) for _ in range(top + 1)]
            for a in range(top + 1):
                tab[a][0] = 1
                for b in range(1, a + 1):
                    tab[a][b] = (tab[a - 1][b - 1] + (tab[a - 1][b] if b <= a - 1 else 0)) % p
            self._binom.append(tab)
        self._dh_cache = {}
        self._dhi_cache = {}
        self._inv_cache = {}

    def __eq__(self, other):
        return (isinstance(other, Params)
                and (self.p, self.m, self.n, self.t) == (other.p, other.m, other.n, other.t))

    def __hash__(self):
        return hash((self.p, self.m, self.n, self.t))

    def __repr__(self):
        mode = "relaxed" if self.relaxed else "strict"
        return f"Params(p={self.p}, m={self.m}, n={self.n}, t={self.t}, {mode})"

    # -- small helpers -------------------------------------------------

    def eps(self, i):
        """Unit exponent vector for even variable i (0-based)."""
        if not 0 <= i < self.two_m:
            raise IndexError(f"even variable index {i} out of range")
        return tuple(1 if k == i else 0 for k in range(self.two_m))

    def zero_alpha(self):
        return (0,) * self.two_m

    def one_mono(self) -> Mono:
        return ((0,) * self.two_m, 0)

    def omega_mono(self) -> Mono:
        """The full exterior monomial x^omega."""
        return ((0,) * self.two_m, self.omega_mask)

    def pi_mono(self) -> Mono:
        """x^(pi), the top divided-power monomial."""
        return (self.pi, 0)

    def top_mono(self) -> Mono:
        return (self.pi, self.omega_mask)

    def inv(self, a):
        """Multiplicative inverse mod p (Fermat; p is small)."""
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of zero mod p")
        got = self._inv_cache.get(a)
        if got is None:
            got = pow(a, self.p - 2, self.p)
            self._inv_cache[a] = got
        return got

    def check_mono(self, mono: Mono):
        alpha, umask = mono
        if len(alpha) != self.two_m:
            raise ParamsError(f"alpha has length {len(alpha)}, expected {self.two_m}")
        if any(a < 0 or a > self.pi[i] for i, a in enumerate(alpha)):
            raise ParamsError(f"alpha {alpha} outside the exponent box {self.pi}")
        if umask < 0 or umask > self.omega_mask:
            raise ParamsError(f"umask {umask} outside 0..{self.omega_mask}")

    def mono_from_u(self, alpha, u):
        """Build a monomial from an exponent iterable and a list of absolute
        exterior indices (1-based, in 2m+1 .. 2m+n)."""
        alpha = tuple(alpha)
        umask = 0
        for j in u:
            b = j - self.two_m - 1
            if not 0 <= b < self.n:
                raise ParamsError(f"exterior index {j} outside {self.two_m+1}..{self.nvars}")
            bit = 1 << b
            if umask & bit:
                raise ParamsError(f"repeated exterior index {j}")
            umask |= bit
        mono = (alpha, umask)
        self.check_mono(mono)
        return mono

    def u_list(self, umask):
        """Absolute (1-based) exterior indices of a mask, ascending."""
        return [self.two_m + 1 + b for b in range(self.n) if umask >> b & 1]

    # -- enumeration ----------------------------------------------------

    def enumerate_monomials(self, max_zdeg=None, parity=None, exact_zdeg=None):
        """All monomials passing the filter, in canonical graded-lex order.

        Canonical order: (zdeg, alpha, umask) ascending.  The unfiltered
        count is 2^n * prod p^{t_i}.
        """
        out = []
        ranges = [range(pi_i + 1) for pi_i in self.pi]
        for alpha in _iproduct(*ranges):
            da = sum(alpha)
            for umask in range(1 << self.n):
                d = da + umask.bit_count()
                if max_zdeg is not None and d > max_zdeg:
                    continue
                if exact_zdeg is not None and d != exact_zdeg:
                    continue
                if parity is not None and (umask.bit_count() & 1) != parity:
                    continue
                out.append((alpha, umask))
        out.sort(key=mono_sort_key)
        return out


def mono_zdeg(mono: Mono) -> int:
    alpha, umask = mono
    return sum(alpha) + umask.bit_count()


def mono_parity(mono: Mono) -> int:
    return mono[1].bit_count() & 1


def mono_sort_key(mono: Mono):
    alpha, umask = mono
    return (sum(alpha) + umask.bit_count(), alpha, umask)


def binom_mod_p(a, b, p):
    """Product of componentwise binomials C(a_i, b_i) mod p via Lucas.

    ``a`` and ``b`` may be ints or equal-length sequences; requires b <= a
    componentwise (caller contract).  Zero exactly when some base-p digit of
    b_i exceeds the matching digit of a_i.
    """
    if isinstance(a, int):
        a, b = (a,), (b,)
    out = 1
    for ai, bi in zip(a, b):
        assert 0 <= bi <= ai, "binom_mod_p requires 0 <= b <= a componentwise"
        while bi:
            ad, bd = ai % p, bi % p
            if bd > ad:
                return 0
            # C(ad, bd) for single digits: small product formula
            num, den = 1, 1
            for k in range(bd):
                num = num * (ad - k) % p
                den = den * (k + 1) % p
            out = out * num * pow(den, p - 2, p) % p
            ai //= p
            bi //= p
    return out % p


# -- raw monomial kernels (hot paths reach for these directly) ----------

def mono_mul(par: Params, m1: Mono, m2: Mono):
    """Product of two monomials: (coeff, mono) with coeff in 1..p-1, or None.

    Divided-power parts pick up C(alpha+beta, alpha); exponents past pi are
    dropped (their coefficient is 0 mod p by the base-p carry).  Exterior
    parts vanish on overlap, else merge with the interleaving sign.
    """
    a1, u1 = m1
    a2, u2 = m2
    if u1 & u2:
        return None
    coeff = 1
    p = par.p
    pi = par.pi
    binom = par._binom
    alpha = []
    for i, (x, y) in enumerate(zip(a1, a2)):
        s = x + y
        if s > pi[i]:
            if __debug__:
                assert binom_mod_p(s, x, p) == 0
            return None
        if y:
            coeff = coeff * binom[i][s][x] % p
            if not coeff:
                return None
        alpha.append(s)
    # interleaving sign: count pairs (a in u1, b in u2) with b < a
    if u2:
        inv = 0
        v = u2
        while v:
            low = v & -v
            inv += (u1 >> low.bit_length()).bit_count()
            v ^= low
        if inv & 1:
            coeff = p - coeff
    return coeff, (tuple(alpha), u1 | u2)


def mono_partial(par: Params, i: int, mono: Mono):
    """partial_i applied to a monomial: (coeff, mono) or None.

    For an even variable the exponent drops by one (divided powers carry no
    factor); for an exterior variable the sign is (-1)^(position-1).
    """
    alpha, umask = mono
    tm = par.two_m
    if i < tm:
        e = alpha[i]
        if e == 0:
            return None
        return 1, (alpha[:i] + (e - 1,) + alpha[i + 1:], umask)
    b = i - tm
    bit = 1 << b
    if not umask & bit:
        return None
    sign = par.p - 1 if (umask & (bit - 1)).bit_count() & 1 else 1
    return sign, (alpha, umask ^ bit)


class SuperPoly:
    """Sparse element of O(2m, n; t): a dict mono -> nonzero scalar in F_p.

    Instances are treated as immutable; all operations return new objects.
    Canonical term order for printing/iteration is graded-lex on
    (zdeg, alpha, umask).
    """

    __slots__ = ("par", "terms")

    def __init__(self, par: Params, terms=None, _raw=False):
        self.par = par
        if terms is None:
            self.terms = {}
        elif _raw:
            self.terms = terms
        else:
            clean = {}
            for mono, c in dict(terms).items():
                par.check_mono(mono)
                c %= par.p
                if c:
                    clean[mono] = c
            self.terms = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, par):
        return cls(par, {}, _raw=True)

    @classmethod
    def one(cls, par):
        return cls(par, {par.one_mono(): 1}, _raw=True)

    @classmethod
    def monomial(cls, par, mono, coeff=1):
        par.check_mono(mono)
        coeff %= par.p
        return cls(par, {mono: coeff} if coeff else {}, _raw=True)

    @classmethod
    def variable(cls, par, i):
        """x_i for absolute 0-based index i (even or exterior)."""
        if i < par.two_m:
            return cls(par, {(par.eps(i), 0): 1}, _raw=True)
        return cls(par, {(par.zero_alpha(), 1 << (i - par.two_m)): 1}, _raw=True)

    # -- ring structure ---------------------------------------------------

    def _require_same(self, other):
        if self.par != other.par:
            raise ParamsError("mixed Params in algebra operation")

    def __add__(self, other):
        self._require_same(other)
        p = self.par.p
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = (out.get(mono, 0) + c) % p
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return SuperPoly(self.par, out, _raw=True)

    def __sub__(self, other):
        self._require_same(other)
        p = self.par.p
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = (out.get(mono, 0) - c) % p
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return SuperPoly(self.par, out, _raw=True)

    def __neg__(self):
        p = self.par.p
        return SuperPoly(self.par, {m: p - c for m, c in self.terms.items()}, _raw=True)

    def scale(self, c):
        c %= self.par.p
        if not c:
            return SuperPoly.zero(self.par)
        p = self.par.p
        return SuperPoly(self.par, {m: c * v % p for m, v in self.terms.items()}, _raw=True)

    def __rmul__(self, c):
        if isinstance(c, int):
            return self.scale(c)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        return mul(self, other)

    def __eq__(self, other):
        return (isinstance(other, SuperPoly) and self.par == other.par
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.par, frozenset(self.terms.items())))

    def is_zero(self):
        return not self.terms

    def items_sorted(self):
        return sorted(self.terms.items(), key=lambda kv: mono_sort_key(kv[0]))

    def coeff(self, mono):
        return self.terms.get(mono, 0)

    def parity(self):
        """Common Z_2-parity of all terms, or INHOMOGENEOUS."""
        it = iter(self.terms)
        try:
            par0 = mono_parity(next(it))
        except StopIteration:
            return 0
        for mono in it:
            if mono_parity(mono) != par0:
                return INHOMOGENEOUS
        return par0

    def zdeg(self):
        """Common Z-degree of all terms, or INHOMOGENEOUS; zero poly -> 0."""
        it = iter(self.terms)
        try:
            d0 = mono_zdeg(next(it))
        except StopIteration:
            return 0
        for mono in it:
            if mono_zdeg(mono) != d0:
                return INHOMOGENEOUS
        return d0

    def homogeneous_parts(self):
        """Split into Z-homogeneous parts, as a dict degree -> SuperPoly."""
        parts = {}
        for mono, c in self.terms.items():
            parts.setdefault(mono_zdeg(mono), {})[mono] = c
        return {d: SuperPoly(self.par, t, _raw=True) for d, t in sorted(parts.items())}

    def parity_parts(self):
        ev, od = {}, {}
        for mono, c in self.terms.items():
            (od if mono[1].bit_count() & 1 else ev)[mono] = c
        return (SuperPoly(self.par, ev, _raw=True), SuperPoly(self.par, od, _raw=True))

    def __repr__(self):
        return f"SuperPoly({poly_str(self)})"

    def __str__(self):
        return poly_str(self)


def mul(f: SuperPoly, g: SuperPoly) -> SuperPoly:
    """Bilinear product in O(2m, n; t)."""
    f._require_same(g)
    par = f.par
    p = par.p
    out = {}
    for m1, c1 in f.terms.items():
        for m2, c2 in g.terms.items():
            hit = mono_mul(par, m1, m2)
            if hit is None:
                continue
            c, mono = hit
            s = (out.get(mono, 0) + c1 * c2 * c) % p
            if s:
                out[mono] = s
            else:
                del out[mono]
    return SuperPoly(par, out, _raw=True)


def partial(i: int, f: SuperPoly) -> SuperPoly:
    """The superderivation partial_i (0-based absolute index)."""
    par = f.par
    if not 0 <= i < par.nvars:
        raise IndexError(f"variable index {i} out of range 0..{par.nvars - 1}")
    p = par.p
    out = {}
    for mono, c in f.terms.items():
        hit = mono_partial(par, i, mono)
        if hit is None:
            continue
        s, m2 = hit
        v = (out.get(m2, 0) + c * s) % p
        if v:
            out[m2] = v
        else:
            del out[m2]
    return SuperPoly(par, out, _raw=True)


def parity(f: SuperPoly):
    return f.parity()


def zdeg(f: SuperPoly):
    return f.zdeg()


def enumerate_monomials(par: Params, max_zdeg=None, parity=None, exact_zdeg=None):
    return par.enumerate_monomials(max_zdeg=max_zdeg, parity=parity, exact_zdeg=exact_zdeg)


# -- canonical printing ------------------------------------------------

def mono_str(par: Params, mono: Mono) -> str:
    alpha, umask = mono
    parts = []
    if any(alpha):
        parts.append("x^(" + ",".join(str(a) for a in alpha) + ")")
    if umask:
        parts.append("x{" + ",".join(str(j) for j in par.u_list(umask)) + "}")
    return "".join(parts) if parts else "1"


def poly_str(f: SuperPoly) -> str:
    if not f.terms:
        return "0"
    out = []
    for mono, c in f.items_sorted():
        ms = mono_str(f.par, mono)
        if c == 1 and ms != "1":
            out.append(ms)
        elif ms == "1":
            out.append(str(c))
        else:
            out.append(f"{c}*{ms}")
    return " + ".join(out)
