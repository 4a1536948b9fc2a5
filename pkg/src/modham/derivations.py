"""Derivations D: L -> V for subalgebras L acting inside W(2m, n; t).

A LinearMapOnBasis stores the images of an ordered domain basis as vector
fields.  On the Hamiltonian side the domain bases are canonical (indexed by
the monomial a of D_H(a)), so brackets of domain vectors reduce to the
coordinate form D_H(a)(b) and Leibniz defects cost a handful of monomial
products.

The Der-space solver stacks the defect linearization of all domain pairs
over F_p, takes the kernel (dense numpy elimination; the budget precondition
keeps this to relaxed/desk sizes) and re-verifies every returned map
exhaustively, so the result does not depend on the row schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import random

import numpy as np

from .algebra import INHOMOGENEOUS, Params, ParamsError
from .linalg import BudgetError, Echelon, SparseMatrix, kernel as sparse_kernel, vec_addmul
from .spaces import SubspaceBasis, build_space, generator_monomials
from .witt import (
    VectorField,
    bracket,
    bracket_items,
    d_h_mono,
    dh_items,
    poisson_mono,
)


class CorrectionError(RuntimeError):
    """No inner correction exists within the prescribed slice."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class LinearMapOnBasis:
    """A linear map given by images of an ordered domain basis.

    ``images[i]`` is the image of ``domain`` basis row i, expressed in W.
    ``zdeg``/``parity`` carry the declared homogeneity metadata (None when
    not homogeneous or unknown).
    """

    __slots__ = ("domain", "images", "zdeg", "parity", "_items_by_key")

    def __init__(self, domain: SubspaceBasis, images, zdeg=None, parity=0):
        if len(images) != domain.dim:
            raise ValueError(f"{len(images)} images for a domain of dim {domain.dim}")
        self.domain = domain
        self.images = list(images)
        self.zdeg = zdeg
        self.parity = parity
        self._items_by_key = None

    @property
    def par(self) -> Params:
        return self.domain.par

    @classmethod
    def zero(cls, domain, zdeg=None):
        z = VectorField.zero(domain.par)
        return cls(domain, [z] * domain.dim, zdeg=zdeg)

    @classmethod
    def from_key_images(cls, domain, img_of_key, zdeg=None):
        """Build from a dict key -> VectorField (missing keys map to zero)."""
        z = VectorField.zero(domain.par)
        return cls(domain, [img_of_key.get(k, z) for k in domain.keys()], zdeg=zdeg)

    def image_items(self):
        """Per-key image term tuples, for the hot defect loops."""
        if self._items_by_key is None:
            self._items_by_key = {
                k: tuple(self.images[i].terms.items())
                for i, k in enumerate(self.domain.keys())
            }
        return self._items_by_key

    def image_of_key(self, key):
        i = self.domain.key_position(key)
        if i is None:
            raise KeyError(f"{key} is not a domain basis key")
        return self.images[i]

    def __add__(self, other):
        if other.domain is not self.domain and other.domain.pivots != self.domain.pivots:
            raise ValueError("maps live on different domains")
        zd = self.zdeg if self.zdeg == other.zdeg else None
        return LinearMapOnBasis(self.domain,
                                [a + b for a, b in zip(self.images, other.images)],
                                zdeg=zd)

    def __sub__(self, other):
        if other.domain is not self.domain and other.domain.pivots != self.domain.pivots:
            raise ValueError("maps live on different domains")
        zd = self.zdeg if self.zdeg == other.zdeg else None
        return LinearMapOnBasis(self.domain,
                                [a - b for a, b in zip(self.images, other.images)],
                                zdeg=zd)

    def scale(self, c):
        return LinearMapOnBasis(self.domain, [v.scale(c) for v in self.images],
                                zdeg=self.zdeg)

    def is_zero(self):
        return all(v.is_zero() for v in self.images)

    def __eq__(self, other):
        return (isinstance(other, LinearMapOnBasis)
                and self.domain.pivots == other.domain.pivots
                and self.images == other.images)

    def evaluate_coords(self, coords):
        out = VectorField.zero(self.par)
        for i, c in enumerate(coords):
            if c:
                out = out + self.images[i].scale(c)
        return out

    def evaluate(self, x: VectorField) -> VectorField:
        vec = _as_domain_coords(self.domain, x)
        coords = self.domain.member(vec) if vec is not None else None
        if coords is None:
            raise ValueError("element outside the map's domain span")
        return self.evaluate_coords(coords)

    def restrict(self, sub: SubspaceBasis) -> "LinearMapOnBasis":
        """Basis-slice view on a canonical sub-basis of the same ambient."""
        if sub.space is not self.domain.space:
            raise ValueError("restriction requires the same ambient coordinate space")
        pos = {c: i for i, c in enumerate(self.domain.pivots)}
        images = []
        for c in sub.pivots:
            i = pos.get(c)
            if i is None:
                raise ValueError("sub-basis is not contained in the domain")
            images.append(self.images[i])
        return LinearMapOnBasis(sub, images, zdeg=self.zdeg, parity=self.parity)

    def measured_zdeg(self):
        """Common degree shift of all nonzero images, or None if mixed."""
        seen = None
        for i in range(self.domain.dim):
            img = self.images[i]
            if img.is_zero():
                continue
            d = img.zdeg()
            if d is INHOMOGENEOUS:
                return INHOMOGENEOUS
            shift = d - self.domain.row_degree(i)
            if seen is None:
                seen = shift
            elif seen != shift:
                return INHOMOGENEOUS
        return seen

    def __repr__(self):
        return (f"LinearMapOnBasis(dim {self.domain.dim}, zdeg={self.zdeg}, "
                f"nonzero on {sum(1 for v in self.images if not v.is_zero())})")


def _as_domain_coords(domain: SubspaceBasis, x):
    """Ambient coordinates of x (field / poly / coord dict), or None."""
    if isinstance(x, dict):
        return x
    return domain.space.coordinatize(x)


def _domain_bracket_coords(domain: SubspaceBasis, i, j):
    """[x_i, x_j] in domain coordinates (dict basis-position -> coeff).

    Canonical H domains use the coordinate bracket D_H(a)(b); anything else
    brackets fields and solves membership.  Raises if the result leaves the
    domain span (the domain is then not closed under the bracket).
    """
    par = domain.par
    space = domain.space
    if space.kind == "H" and domain.is_canonical():
        a, b = domain.key(i), domain.key(j)
        raw = poisson_mono(par, a, b)
        raw.pop(par.one_mono(), None)
        pos = {c: k for k, c in enumerate(domain.pivots)}
        out = {}
        for mono, c in raw.items():
            col = space.index.get(mono)
            k = pos.get(col) if col is not None else None
            if k is None:
                raise ParamsError(
                    f"bracket of basis vectors leaves the domain at {mono}")
            out[k] = c
        return out
    f = bracket(domain.vector(i), domain.vector(j))
    coords = domain.member(_as_domain_coords(domain, f))
    if coords is None:
        raise ParamsError("bracket of basis vectors leaves the domain span")
    return {k: c for k, c in enumerate(coords) if c}


def leibniz_defect(D: LinearMapOnBasis, x: VectorField, y: VectorField) -> VectorField:
    """D([x,y]) - [D(x), y] - [x, D(y)] for x, y in the domain span."""
    domain = D.domain
    vx = _as_domain_coords(domain, x)
    vy = _as_domain_coords(domain, y)
    cx = domain.member(vx) if vx is not None else None
    cy = domain.member(vy) if vy is not None else None
    if cx is None or cy is None:
        raise ValueError("defect arguments must lie in the domain span")
    bxy = bracket(x, y)
    vb = _as_domain_coords(domain, bxy)
    cb = domain.member(vb) if vb is not None else None
    if cb is None:
        raise ParamsError("[x, y] leaves the domain span")
    out = D.evaluate_coords(cb)
    out = out - bracket(D.evaluate_coords(cx), y)
    out = out - bracket(x, D.evaluate_coords(cy))
    return out


def _pair_defect_canonical(D: LinearMapOnBasis, i, j, img_items):
    """Defect on canonical H-domain basis pair (i, j), as a raw term dict."""
    par = D.par
    p = par.p
    domain = D.domain
    a = domain.key(i)
    b = domain.key(j)
    out = {}
    raw = poisson_mono(par, a, b)
    one = par.one_mono()
    for mono, c in raw.items():
        if mono == one:
            continue
        items = img_items.get(mono)
        if items is None:
            raise ParamsError(f"bracket of basis vectors leaves the domain at {mono}")
        for k, v in items:
            s = (out.get(k, 0) + c * v) % p
            if s:
                out[k] = s
            else:
                del out[k]
    ia = img_items[a]
    if ia:
        for k, v in bracket_items(par, ia, dh_items(par, b)).items():
            s = (out.get(k, 0) - v) % p
            if s:
                out[k] = s
            else:
                del out[k]
    ib = img_items[b]
    if ib:
        for k, v in bracket_items(par, dh_items(par, a), ib).items():
            s = (out.get(k, 0) - v) % p
            if s:
                out[k] = s
            else:
                del out[k]
    return out


@dataclass
class DerivationReport:
    passed: bool
    mode: str
    pairs_checked: int
    counterexample: tuple | None = None
    notes: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


EXHAUSTIVE_LIMIT = 1200


def _structured_pairs(domain: SubspaceBasis, cap):
    """Index pairs for the structured sub-families: both degrees <= cap,
    plus generator x basis pairs for the Hamiltonian domains."""
    low = [i for i in range(domain.dim) if domain.row_degree(i) <= cap]
    for ii, i in enumerate(low):
        for j in low[ii:]:
            yield i, j
    par = domain.par
    keyset = {k: i for i, k in enumerate(domain.keys())}
    gens = []
    for fam in ("M", "Nset", "N0"):
        gens.extend(generator_monomials(par, fam))
    gens.append(par.pi_mono())
    seen = set()
    for g in gens:
        gi = keyset.get(g)
        if gi is None or gi in seen:
            continue
        seen.add(gi)
        for j in range(domain.dim):
            yield gi, j


def is_derivation(D: LinearMapOnBasis, mode="auto", seed=0xC0FFEE,
                  sample_count=1_000_000, cap=6, extra_pairs=()):
    """Check the Leibniz rule on domain basis pairs.

    mode "exhaustive": all unordered pairs (auto-selected when the domain
    dimension is at most 1200).  mode "sampled": seeded random pairs plus
    the structured sub-families (all pairs with both degrees <= cap, all
    generator x basis pairs).  Returns a DerivationReport with the first
    counterexample if any.
    """
    domain = D.domain
    if not (domain.space.kind == "H" and domain.is_canonical()):
        return _is_derivation_generic(D, mode, seed, sample_count)
    if mode == "auto":
        mode = "exhaustive" if domain.dim <= EXHAUSTIVE_LIMIT else "sampled"
    img_items = D.image_items()
    n = domain.dim
    checked = 0

    def run(pairs):
        nonlocal checked
        for i, j in pairs:
            defect = _pair_defect_canonical(D, i, j, img_items)
            checked += 1
            if defect:
                return (i, j, defect)
        return None

    if mode == "exhaustive":
        cex = run((i, j) for i in range(n) for j in range(i, n))
    else:
        rng = random.Random(seed)
        def sampled():
            yield from _structured_pairs(domain, cap)
            for _ in range(sample_count):
                yield rng.randrange(n), rng.randrange(n)
            yield from extra_pairs
        cex = run(sampled())
    if cex is None:
        return DerivationReport(True, mode, checked)
    i, j, defect = cex
    wit = (domain.key(i), domain.key(j),
           VectorField(D.par, defect, _raw=True))
    return DerivationReport(False, mode, checked, counterexample=wit)


def _is_derivation_generic(D, mode, seed, sample_count):
    domain = D.domain
    n = domain.dim
    if mode == "auto":
        mode = "exhaustive" if n <= EXHAUSTIVE_LIMIT else "sampled"
    vectors = domain.vectors()
    if mode == "exhaustive":
        pairs = ((i, j) for i in range(n) for j in range(i, n))
    else:
        rng = random.Random(seed)
        pairs = ((rng.randrange(n), rng.randrange(n)) for _ in range(sample_count))
    checked = 0
    for i, j in pairs:
        defect = leibniz_defect(D, vectors[i], vectors[j])
        checked += 1
        if not defect.is_zero():
            return DerivationReport(False, mode, checked,
                                    counterexample=(i, j, defect))
    return DerivationReport(True, mode, checked)


def ad(E: VectorField, domain: SubspaceBasis) -> LinearMapOnBasis:
    """The inner map x -> [E, x] restricted to the domain basis."""
    par = domain.par
    eit = tuple(E.terms.items())
    images = []
    if domain.space.kind == "H" and domain.is_canonical():
        for key in domain.keys():
            images.append(VectorField(
                par, bracket_items(par, eit, dh_items(par, key)), _raw=True))
    else:
        for i in range(domain.dim):
            images.append(bracket(E, domain.vector(i)))
    zd = E.zdeg()
    return LinearMapOnBasis(domain, images, zdeg=None if zd is INHOMOGENEOUS else zd)


def graded_components(D: LinearMapOnBasis):
    """Split D = sum_k D_k with D_k homogeneous of degree k."""
    domain = D.domain
    comps = {}
    for i in range(domain.dim):
        di = domain.row_degree(i)
        for k, part in D.images[i].homogeneous_parts().items():
            comps.setdefault(k - di, {})[i] = part
    out = {}
    z = VectorField.zero(D.par)
    for k, imap in sorted(comps.items()):
        out[k] = LinearMapOnBasis(domain,
                                  [imap.get(i, z) for i in range(domain.dim)],
                                  zdeg=k)
    return out


# -- ideals ----------------------------------------------------------------

def is_ideal(sub: SubspaceBasis, amb: SubspaceBasis):
    """Pair-exhaustive ideal test: [amb basis, sub basis] inside sub.

    Returns (True, None) or (False, witness) with witness = (amb key,
    sub key, offending field).  Canonical Hamiltonian bases run through the
    coordinate bracket; the membership test per pair is a key-set check.
    """
    par = sub.par
    if (sub.space is amb.space and sub.space.kind == "H"
            and sub.is_canonical() and amb.is_canonical()):
        sub_keys = set(sub.keys())
        if not sub_keys <= set(amb.keys()):
            raise ParamsError("sub must be contained in amb")
        one = par.one_mono()
        amb_list = amb.keys()
        sub_list = sub.keys()
        for a in amb_list:
            for b in sub_list:
                raw = poisson_mono(par, a, b)
                for mono in raw:
                    if mono not in sub_keys and mono != one:
                        wit_field = VectorField.zero(par)
                        for mo, c in raw.items():
                            if mo != one:
                                wit_field = wit_field + d_h_mono(par, mo).scale(c)
                        return False, (a, b, wit_field)
        return True, None
    # generic: echelon membership over the ambient coordinates
    sub_coords = [dict(r) for r in sub.rows]
    ech = Echelon(par.p)
    for r in sub_coords:
        ech.insert(r)
    for i in range(amb.dim):
        x = amb.vector(i)
        for j in range(sub.dim):
            y = sub.vector(j)
            f = bracket(x, y)
            vec = _as_domain_coords(sub, f)
            if ech.reduce(vec):
                return False, (i, j, f)
    return True, None


# -- centralizers -------------------------------------------------------------

def _kernel_refine(par, cand_fields, s_items):
    """Shrink candidate span to {v : [v, s] = 0}; candidates are W term dicts."""
    p = par.p
    eqs = {}
    for idx, v in enumerate(cand_fields):
        res = bracket_items(par, v.items(), s_items)
        for k, c in res.items():
            eqs.setdefault(k, {})[idx] = c
    if not eqs:
        return cand_fields
    M = SparseMatrix(p, len(eqs), len(cand_fields), list(eqs.values()))
    combos = sparse_kernel(M)
    out = []
    for combo in combos:
        acc = {}
        for idx, c in combo.items():
            vec_addmul(acc, cand_fields[idx], c, p)
        if acc:
            out.append(acc)
    return out


def centralizer(S, ambient: SubspaceBasis, method="auto") -> SubspaceBasis:
    """{x in ambient : [x, s] = 0 for all s in S}.

    "staged": intersect with the centralizer G of the degree -1 part first
    (valid when span(S) contains all the degree -1 coordinate fields), then
    impose the remaining generators inside that small space.  "slices":
    solve degree slice by degree slice of the ambient.  "auto" picks staged
    when applicable.
    """
    par = ambient.par
    if ambient.space.kind != "W" or not ambient.is_canonical():
        raise ParamsError("centralizer expects a canonical W-coordinate ambient")
    S = list(S)
    if not S:
        return ambient
    s_items = [tuple(s.terms.items()) for s in S]
    if method == "auto" or method == "staged":
        wm1 = [(par.one_mono(), d) for d in range(par.two_m)]
        ech = Echelon(par.p)
        space = ambient.space
        for s in S:
            ech.insert(space.coordinatize(s))
        covers = all(ech.member({space.index[k]: 1}) is not None for k in wm1)
        if method == "staged" and not covers:
            raise ParamsError("staged centralizer requires span(S) to contain "
                              "all degree -1 fields")
        if covers:
            g = build_space(par, "G")
            amb_keys = set(ambient.keys())
            cands = [{k: 1} for k in g.keys() if k in amb_keys]
            for it in s_items:
                if not cands:
                    break
                cands = _kernel_refine(par, cands, it)
            return SubspaceBasis.from_rows(
                ambient.space,
                [ambient.space.coordinatize(VectorField(par, c, _raw=True)) for c in cands],
                name="centralizer")
        method = "slices"
    if method != "slices":
        raise ParamsError(f"unknown centralizer method {method!r}")
    degrees = sorted({ambient.row_degree(i) for i in range(ambient.dim)})
    rows = []
    for d in degrees:
        cands = [{ambient.key(i): 1} for i in range(ambient.dim)
                 if ambient.row_degree(i) == d]
        for it in s_items:
            if not cands:
                break
            cands = _kernel_refine(par, cands, it)
        for c in cands:
            rows.append(ambient.space.coordinatize(VectorField(par, c, _raw=True)))
    return SubspaceBasis.from_rows(ambient.space, rows, name="centralizer")


# -- inner corrections ---------------------------------------------------------

def find_inner_correction(D: LinearMapOnBasis, stage: str):
    """Strip an inner part so that D vanishes on the stated slice.

    stage "minus_one": D homogeneous of degree t >= 0 on a Hamiltonian-side
    domain; returns E in W_[t] with (D - ad E)(domain degree -1 slice) = 0,
    found by divided-power integration of the required partials (exterior
    coefficient components are left free at 0).

    stage "zero": D vanishing on the degree -1 slice; returns E in the
    G-slice of matching degree with (D - ad E) vanishing on the degree 0
    slice as well.  Solvability is guaranteed by the theory for odd degree;
    even degrees are attempted on the same slice and may raise.

    Raises CorrectionError (carrying the residual images) when no solution
    exists within the slice.
    """
    domain = D.domain
    par = D.par
    p = par.p
    if not (domain.space.kind == "H" and domain.is_canonical()):
        raise ParamsError("inner correction requires a canonical Hamiltonian domain")
    key_index = {k: i for i, k in enumerate(domain.keys())}
    t = D.zdeg if D.zdeg is not None else D.measured_zdeg()
    if t is None or t is INHOMOGENEOUS:
        raise ParamsError("inner correction requires a Z-homogeneous map")

    if stage == "minus_one":
        if t < 0:
            raise ParamsError("stage minus_one expects degree >= 0")
        # desired [E, partial_j] for j in Y_0, from the images on D_H(x_i)
        want = {}
        for i in range(par.two_m):
            key = (par.eps(i), 0)
            idx = key_index.get(key)
            if idx is None:
                raise ParamsError("domain lacks the degree -1 coordinate fields")
            img = D.images[idx]
            j = par.prime[i]
            want[j] = {k: v * par.tau[i] % p for k, v in img.terms.items()}
        # [sum f_s d_s, d_j] = -d_j(f_s) d_s  =>  partial_j(f_s) = -want_j[s]
        terms = {}
        for j, rhs in want.items():
            for (mono, s), c in rhs.items():
                alpha, umask = mono
                na = alpha[:j] + (alpha[j] + 1,) + alpha[j + 1:]
                if na[j] > par.pi[j]:
                    raise CorrectionError(
                        "required integral leaves the exponent box", residual=rhs)
                # integrate along the smallest loaded direction only
                if min(k for k, e in enumerate(na) if e) == j:
                    terms[((na, umask), s)] = (p - c) % p
        E = VectorField(par, terms, _raw=True)
    elif stage == "zero":
        # verify vanishing on the -1 slice first
        for i in range(par.two_m):
            idx = key_index.get((par.eps(i), 0))
            if idx is not None and not D.images[idx].is_zero():
                raise CorrectionError("stage zero requires vanishing on the "
                                      "degree -1 slice",
                                      residual=D.images[idx])
        g = build_space(par, "G")
        slice_keys = [k for i, k in enumerate(g.keys()) if g.row_degree(i) == t]
        zero_keys = [k for i, k in enumerate(domain.keys())
                     if domain.row_degree(i) == 0]
        # one stacked linear system: columns are G-slice coefficients,
        # equations are the W-coordinates of [E, b] = D(b) over all b
        ech = Echelon(p, track=True)
        for gk in slice_keys:
            stacked = {}
            for bi, b in enumerate(zero_keys):
                for wk, c in bracket_items(par, ((gk, 1),), dh_items(par, b)).items():
                    stacked[(bi, wk)] = c
            ech.insert(stacked)
        target = {}
        for bi, b in enumerate(zero_keys):
            for wk, c in D.images[key_index[b]].terms.items():
                target[(bi, wk)] = c
        combo = ech.member(target)
        if combo is None:
            raise CorrectionError("no inner correction in the G-slice",
                                  residual=ech.reduce(target))
        E = VectorField(par, {slice_keys[idx]: c for idx, c in combo.items() if c},
                        _raw=True)
    else:
        raise ParamsError(f"unknown correction stage {stage!r}")

    Dprime = D - ad(E, domain)
    # exact verification on the target slice
    check_degs = (-1,) if stage == "minus_one" else (-1, 0)
    bad = None
    for i in range(domain.dim):
        if domain.row_degree(i) in check_degs and not Dprime.images[i].is_zero():
            bad = Dprime.images[i]
            break
    if bad is not None:
        raise CorrectionError(
            f"stage {stage} correction leaves a nonzero residual", residual=bad)
    return E, Dprime


# -- brute-force Der spaces ------------------------------------------------------

def der_space_homogeneous(L: SubspaceBasis, V: SubspaceBasis, k: int,
                          budget=200_000, seed=0xC0FFEE):
    """Basis of Der_[k](L, V): all degree-k maps with zero Leibniz defect.

    Unknowns are the images of the domain basis in the matching V slices
    (requires canonical V).  Constraint rows from domain pairs are streamed
    into a dense mod-p elimination until the rank stabilizes; the kernel is
    then re-verified exhaustively on all pairs and failing pairs feed back
    as new rows, so the returned maps are exactly the derivations.

    Returns a list of LinearMapOnBasis.  Raises BudgetError when the unknown
    count Sum_i dim L_[i] * dim V_[i+k] exceeds the budget.
    """
    par = L.par
    p = par.p
    if not V.is_canonical() or V.space.kind != "W":
        raise ParamsError("der_space_homogeneous requires a canonical W-side codomain")
    vkeys_by_deg = {}
    for i in range(V.dim):
        vkeys_by_deg.setdefault(V.row_degree(i), []).append(V.key(i))
    offsets = []
    cols_of = []
    total = 0
    for i in range(L.dim):
        keys = vkeys_by_deg.get(L.row_degree(i) + k, [])
        offsets.append(total)
        cols_of.append(keys)
        total += len(keys)
    if total > budget:
        raise BudgetError(
            f"{total} unknowns exceed the budget {budget}; use relaxed "
            "parameters or split by degree", partial=total)
    if total == 0:
        return []
    colpos = [{key: offsets[i] + j for j, key in enumerate(cols_of[i])}
              for i in range(L.dim)]

    # domain fields and cached bracket tables
    n = L.dim
    dom_items = []
    canonical_h = L.space.kind == "H" and L.is_canonical()
    for i in range(n):
        if canonical_h:
            dom_items.append(dh_items(par, L.key(i)))
        else:
            dom_items.append(tuple(L.vector(i).terms.items()))
    br_cache = {}

    def unit_bracket(ukey, j):
        """[e_ukey, x_j] as a term dict, cached."""
        got = br_cache.get((ukey, j))
        if got is None:
            got = bracket_items(par, ((ukey, 1),), dom_items[j])
            br_cache[(ukey, j)] = got
        return got

    def bracket_coords(i, j):
        return _domain_bracket_coords(L, i, j)

    mat = _DenseEchelonModP(p, total)

    def pair_rows(i, j):
        """Constraint rows of the pair (i, j): dict eq-key -> {col: coeff}.

        The defect D([x_i,x_j]) - [D(x_i), x_j] - [x_i, D(x_j)] is linear in
        the unknown image coordinates; one equation per codomain key.
        """
        rows = {}
        for pos, c in bracket_coords(i, j).items():
            for key, col in colpos[pos].items():
                r = rows.setdefault(key, {})
                r[col] = (r.get(col, 0) + c) % p
        for key, col in colpos[i].items():
            for wk, c in unit_bracket(key, j).items():
                r = rows.setdefault(wk, {})
                r[col] = (r.get(col, 0) - c) % p
        for key, col in colpos[j].items():
            # [x_i, D(x_j)] = -[D(x_j), x_i]
            for wk, c in unit_bracket(key, i).items():
                r = rows.setdefault(wk, {})
                r[col] = (r.get(col, 0) + c) % p
        return rows

    def insert_pair(i, j):
        grew = False
        for row in pair_rows(i, j).values():
            if mat.insert(row):
                grew = True
        return grew

    all_pairs = [(i, j) for i in range(n) for j in range(i, n)]
    stall = 0
    patience = max(200, 4 * n)
    for idx, (i, j) in enumerate(all_pairs):
        if insert_pair(i, j):
            stall = 0
        else:
            stall += 1
            if stall >= patience and mat.rank:
                break

    def kernel_maps():
        out = []
        for vec in mat.kernel():
            img_of = {}
            for i in range(n):
                terms = {}
                for key, col in colpos[i].items():
                    c = int(vec[col])
                    if c:
                        terms[key] = c
                if terms:
                    img_of[L.key(i) if canonical_h else i] = VectorField(par, terms, _raw=True)
            if canonical_h:
                out.append(LinearMapOnBasis.from_key_images(L, img_of, zdeg=k))
            else:
                z = VectorField.zero(par)
                out.append(LinearMapOnBasis(
                    L, [img_of.get(i, z) for i in range(n)], zdeg=k))
        return out

    # verify-and-repair loop: every returned basis map must pass exhaustively
    while True:
        maps = kernel_maps()
        bad_pair = None
        for Dm in maps:
            rep = is_derivation(Dm, mode="exhaustive")
            if not rep.passed:
                ii, jj = rep.counterexample[0], rep.counterexample[1]
                if canonical_h:
                    keys = L.keys()
                    bad_pair = (keys.index(ii), keys.index(jj))
                else:
                    bad_pair = (ii, jj)
                break
        if bad_pair is None:
            return maps
        if not insert_pair(*bad_pair):
            raise RuntimeError("verification failed on a pair that adds no "
                               "constraint; inconsistent state")


class _DenseEchelonModP:
    """Dense incremental RREF over F_p, rows stacked in one uint8 matrix.

    Full back-substitution is maintained, so stored rows never contain other
    pivot columns and reducing an incoming sparse row is a single pass over
    its support.  p < 16 keeps all intermediates inside uint8.
    """

    __slots__ = ("p", "ncols", "mat", "nrows", "pivot_of")

    def __init__(self, p, ncols):
        if p * p > 255:
            raise ValueError("dense elimination supports p <= 15 only")
        self.p = p
        self.ncols = ncols
        self.mat = np.zeros((256, ncols), dtype=np.uint8)
        self.nrows = 0
        self.pivot_of = {}

    @property
    def rank(self):
        return self.nrows

    def insert(self, row_dict):
        p = self.p
        row = np.zeros(self.ncols, dtype=np.uint8)
        for c, v in row_dict.items():
            row[c] = v % p
        for c in sorted(row_dict):
            v = int(row[c])
            if not v:
                continue
            ri = self.pivot_of.get(c)
            if ri is not None:
                np.add(row, (p - v) * self.mat[ri], out=row, casting="unsafe")
                np.mod(row, p, out=row)
        nz = np.nonzero(row)[0]
        if not nz.size:
            return False
        piv = int(nz[0])
        assert piv not in self.pivot_of  # stored rows avoid pivot columns
        inv = pow(int(row[piv]), p - 2, p)
        if inv != 1:
            row = (row * inv) % p
        if self.nrows == self.mat.shape[0]:
            grown = np.zeros((self.mat.shape[0] * 2, self.ncols), dtype=np.uint8)
            grown[: self.nrows] = self.mat[: self.nrows]
            self.mat = grown
        col = self.mat[: self.nrows, piv]
        holders = np.nonzero(col)[0]
        if holders.size:
            sub = self.mat[holders]
            np.add(sub, np.outer((p - col[holders]).astype(np.uint8), row),
                   out=sub, casting="unsafe")
            np.mod(sub, p, out=sub)
            self.mat[holders] = sub
        self.mat[self.nrows] = row
        self.pivot_of[piv] = self.nrows
        self.nrows += 1
        return True

    def kernel(self):
        free = [c for c in range(self.ncols) if c not in self.pivot_of]
        out = []
        for f in free:
            vec = np.zeros(self.ncols, dtype=np.uint8)
            vec[f] = 1
            col = self.mat[: self.nrows, f]
            for piv, ri in self.pivot_of.items():
                v = int(col[ri])
                if v:
                    vec[piv] = (self.p - v) % self.p
            out.append(vec)
        return out
