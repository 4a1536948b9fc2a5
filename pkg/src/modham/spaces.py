"""Named subspaces and generator families as indexed, echelonized bases.

Three coordinate systems cover everything the package manipulates:

* kind "O": columns are monomials of O(2m, n; t);
* kind "H": columns are monomials a standing for D_H(a) (constants and the
  top monomial excluded, so the indexing is faithful); linear algebra over
  the Hamiltonian spaces never re-derives D_H images, and a vector converts
  to W-coordinates on demand;
* kind "W": columns are (monomial, direction) pairs of W(2m, n; t),
  direction-major.

A SubspaceBasis is a reduced-echelon list of coordinate rows over one of
these systems.  The named spaces (H, its even part, the ideal N, the
centralizer G of the degree -1 part, ...) are canonical: their rows are unit
coordinate vectors, so membership is a key lookup.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import Params, ParamsError, SuperPoly, mono_parity, mono_sort_key, mono_zdeg
from .linalg import Echelon
from .witt import VectorField, d_h_mono

SPACE_NAMES = ("O", "W", "Weven", "H", "Heven", "N", "G", "Geven", "Godd")


@dataclass(frozen=True)
class SpaceId:
    name: str
    degree: int | None = None
    top: bool = False


class CoordSpace:
    """An ordered basis of coordinate keys with degree metadata."""

    __slots__ = ("par", "kind", "name", "keys", "index", "degrees")

    def __init__(self, par: Params, kind: str, name: str, keys):
        self.par = par
        self.kind = kind
        self.name = name
        self.keys = list(keys)
        self.index = {k: i for i, k in enumerate(self.keys)}
        if kind == "O":
            self.degrees = [mono_zdeg(k) for k in self.keys]
        elif kind == "H":
            self.degrees = [mono_zdeg(k) - 2 for k in self.keys]
        elif kind == "W":
            self.degrees = [mono_zdeg(k[0]) - 1 for k in self.keys]
        else:
            raise ValueError(f"unknown coordinate kind {kind!r}")

    @property
    def dim(self):
        return len(self.keys)

    def slice_dims(self):
        out = {}
        for d in self.degrees:
            out[d] = out.get(d, 0) + 1
        return out

    def coordinatize(self, value):
        """Coordinates of a SuperPoly ("O") or VectorField ("H"/"W"), or None
        if the value does not lie in the coordinate span.

        For "H" the value must be presented as a dict mono -> coeff (the a of
        D_H(a)); fields are converted by the caller where needed.
        """
        vec = {}
        if self.kind == "W":
            terms = value.terms if isinstance(value, VectorField) else value
        elif self.kind == "H" and isinstance(value, VectorField):
            from .witt import dh_invert
            poly = dh_invert(self.par, value)
            if poly is None:
                return None
            terms = poly.terms
        else:
            # "O" and "H" are monomial-keyed; "H" reads the a of D_H(a)
            terms = value.terms if isinstance(value, SuperPoly) else value
        for k, c in terms.items():
            i = self.index.get(k)
            if i is None:
                return None
            vec[i] = c
        return vec

    def materialize(self, vec):
        """Coordinate dict -> SuperPoly / VectorField."""
        par = self.par
        if self.kind == "O":
            return SuperPoly(par, {self.keys[i]: c for i, c in vec.items()}, _raw=True)
        if self.kind == "W":
            return VectorField(par, {self.keys[i]: c for i, c in vec.items()}, _raw=True)
        out = VectorField.zero(par)
        for i, c in vec.items():
            out = out + d_h_mono(par, self.keys[i]).scale(c)
        return out

    def __repr__(self):
        return f"CoordSpace({self.name}, dim={self.dim})"


_space_cache = {}


def _all_monos(par: Params):
    got = _space_cache.get((par, "_monos"))
    if got is None:
        got = par.enumerate_monomials()
        _space_cache[(par, "_monos")] = got
    return got


def o_space(par: Params) -> CoordSpace:
    got = _space_cache.get((par, "O"))
    if got is None:
        got = CoordSpace(par, "O", "O", _all_monos(par))
        _space_cache[(par, "O")] = got
    return got


def h_space(par: Params) -> CoordSpace:
    """Ambient for the Hamiltonian side: all monomials except 1 and the top
    one, indexing D_H images faithfully (Ker D_H = constants; the top image
    falls outside H by the degree bound)."""
    got = _space_cache.get((par, "Hspace"))
    if got is None:
        one = par.one_mono()
        top = par.top_mono()
        got = CoordSpace(par, "H", "Hspace",
                         (m for m in _all_monos(par) if m != one and m != top))
        _space_cache[(par, "Hspace")] = got
    return got


def w_space(par: Params) -> CoordSpace:
    got = _space_cache.get((par, "Wspace"))
    if got is None:
        monos = _all_monos(par)
        keys = [(m, d) for d in range(par.nvars) for m in monos]
        got = CoordSpace(par, "W", "Wspace", keys)
        _space_cache[(par, "Wspace")] = got
    return got


class SubspaceBasis:
    """Ordered echelonized basis of a subspace of a fixed coordinate space."""

    __slots__ = ("space", "rows", "pivots", "name", "_keys", "_keypos")

    def __init__(self, space: CoordSpace, rows, pivots, name=""):
        self.space = space
        self.rows = rows
        self.pivots = pivots
        self.name = name
        self._keys = None
        self._keypos = None

    @classmethod
    def from_keys(cls, space, keys, name=""):
        idx = sorted(space.index[k] for k in keys)
        return cls(space, [{i: 1} for i in idx], idx, name)

    @classmethod
    def from_rows(cls, space, rows, name=""):
        ech = Echelon(space.par.p)
        for r in rows:
            ech.insert(r)
        piv = ech.pivots()
        return cls(space, [ech.rows[c] for c in piv], piv, name)

    @property
    def par(self):
        return self.space.par

    @property
    def dim(self):
        return len(self.rows)

    def is_canonical(self):
        return all(len(r) == 1 and r[pc] == 1 for pc, r in zip(self.pivots, self.rows))

    def key(self, i):
        """Pivot key of basis row i (the indexing key for canonical bases)."""
        return self.space.keys[self.pivots[i]]

    def keys(self):
        if self._keys is None:
            self._keys = [self.space.keys[c] for c in self.pivots]
        return self._keys

    def key_position(self, key):
        """Row index of a pivot key, or None."""
        if self._keypos is None:
            self._keypos = {k: i for i, k in enumerate(self.keys())}
        return self._keypos.get(key)

    def row_degree(self, i):
        return self.space.degrees[self.pivots[i]]

    def vector(self, i):
        return self.space.materialize(self.rows[i])

    def vectors(self):
        return [self.vector(i) for i in range(self.dim)]

    def member(self, value):
        """Coordinates over the basis rows, or None (echelon-certified).

        Accepts a coordinate dict, or a SuperPoly/VectorField convertible to
        this basis's ambient coordinates.
        """
        vec = value if isinstance(value, dict) else self.space.coordinatize(value)
        if vec is None:
            return None
        coords = [0] * self.dim
        rest = dict(vec)
        pos = {c: i for i, c in enumerate(self.pivots)}
        while rest:
            c = min(rest)
            i = pos.get(c)
            if i is None:
                return None
            coef = rest[c]
            coords[i] = coef
            row = self.rows[i]
            p = self.par.p
            for col, v in row.items():
                s = (rest.get(col, 0) - coef * v) % p
                if s:
                    rest[col] = s
                else:
                    rest.pop(col, None)
        return coords

    def contains(self, value):
        return self.member(value) is not None

    def __repr__(self):
        return f"SubspaceBasis({self.name or self.space.name}, dim={self.dim})"


def _base_keys(par: Params, name: str):
    """(ambient CoordSpace, canonical key list) for a named space."""
    one = par.one_mono()
    top = par.top_mono()
    pim = par.pi_mono()
    if name == "O":
        return o_space(par), _all_monos(par)
    if name in ("H", "Heven", "N"):
        amb = h_space(par)
        if name == "H":
            keys = amb.keys
        elif name == "Heven":
            keys = [m for m in amb.keys if not m[1].bit_count() & 1]
        else:
            keys = [m for m in amb.keys if not m[1].bit_count() & 1 and m != pim]
        return amb, keys
    if name in ("W", "Weven", "G", "Geven", "Godd"):
        amb = w_space(par)
        if name == "W":
            keys = amb.keys
        elif name == "Weven":
            keys = [k for k in amb.keys
                    if not (mono_parity(k[0]) + par.mu[k[1]]) & 1]
        else:
            zero_a = par.zero_alpha()
            keys = [k for k in amb.keys
                    if k[0][0] == zero_a and not (mono_parity(k[0]) + par.mu[k[1]]) & 1]
            if name == "Geven":
                keys = [k for k in keys if not (mono_zdeg(k[0]) - 1) & 1]
            elif name == "Godd":
                keys = [k for k in keys if (mono_zdeg(k[0]) - 1) & 1]
        return amb, keys
    raise ParamsError(f"unknown space id {name!r}; expected one of {SPACE_NAMES}")


def build_space(par: Params, sid, degree=None, top=False) -> SubspaceBasis:
    """Canonical basis of a named space, optionally sliced by Z-degree.

    ``sid`` is a SpaceId or one of the names in SPACE_NAMES.  ``degree``
    selects one Z-degree slice; ``top`` keeps the non-positive degrees.
    """
    if isinstance(sid, SpaceId):
        degree = sid.degree if degree is None else degree
        top = sid.top or top
        sid = sid.name
    amb, keys = _base_keys(par, sid)
    name = sid
    if degree is not None:
        lo = 0 if sid == "O" else (-1 if sid not in ("H", "Heven", "N") else -1)
        hi = par.xi if sid == "O" else par.xi - 1
        if sid in ("H", "Heven", "N"):
            hi = par.xi - 2
        if not lo <= degree <= hi:
            raise ParamsError(f"degree {degree} outside {lo}..{hi} for {sid}")
        keys = [k for k in keys if amb.degrees[amb.index[k]] == degree]
        name = f"{sid}[{degree}]"
    if top:
        keys = [k for k in keys if amb.degrees[amb.index[k]] <= 0]
        name = f"top({name})"
    return SubspaceBasis.from_keys(amb, keys, name)


def graded_slice(basis: SubspaceBasis, k: int) -> SubspaceBasis:
    """Sub-basis of Z-degree-k rows; summing over k reassembles the space.

    Rows of a graded subspace in RREF are automatically homogeneous, so the
    slice is just a row filter keyed by pivot degree.
    """
    rows, piv = [], []
    for i in range(basis.dim):
        if basis.row_degree(i) == k:
            rows.append(basis.rows[i])
            piv.append(basis.pivots[i])
    return SubspaceBasis(basis.space, rows, piv, f"{basis.name}[{k}]")


# -- generator families --------------------------------------------------

def generator_monomials(par: Params, which: str):
    """Coordinate monomials of the generating families, canonical order.

    M: x^(q e_i) for 1 <= q <= pi_i; Nset: x_i x^u with |u| = 2;
    N0: the degree-0 slice of the ideal (all degree-2 monomials, |u| even).
    """
    tm = par.two_m
    if which == "M":
        out = []
        for i in range(tm):
            for q in range(1, par.pi[i] + 1):
                alpha = tuple(q if k == i else 0 for k in range(tm))
                out.append((alpha, 0))
        return out
    if which == "Nset":
        masks = [u for u in range(1 << par.n) if u.bit_count() == 2]
        out = []
        for i in range(tm):
            eps = par.eps(i)
            for u in masks:
                out.append((eps, u))
        return out
    if which == "N0":
        out = [m for m in par.enumerate_monomials(exact_zdeg=2)
               if not m[1].bit_count() & 1]
        out.sort(key=mono_sort_key)
        return out
    raise ParamsError(f"unknown generator family {which!r}; expected M, Nset or N0")


def generators(par: Params, which: str):
    """The generating families as vector fields (D_H of the monomials)."""
    return [d_h_mono(par, m) for m in generator_monomials(par, which)]
