"""Sparse exact linear algebra over F_p.

Vectors are dicts {column_index: nonzero_scalar}; columns are 0-based ints.
The workhorse is an incrementally maintained reduced echelon (full RREF:
every stored row is normalized and cleared of all other pivot columns), so
membership tests, kernels and bracket-closures never re-eliminate from
scratch.  For a span of codimension c every RREF row carries at most c + 1
entries, which keeps nearly-full-rank systems sparse throughout.
"""

from __future__ import annotations

from collections import deque


class BudgetError(RuntimeError):
    """A dimension/work budget was exceeded; carries partial progress."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def vec_addmul(out, row, c, p):
    """out += c * row (in place, mod p, dropping zeros)."""
    for col, v in row.items():
        s = (out.get(col, 0) + c * v) % p
        if s:
            out[col] = s
        else:
            del out[col]


class Echelon:
    """Incremental RREF over F_p with optional combination tracking.

    ``insert`` reduces the incoming vector against the current rows; an
    independent residue becomes a new normalized row and is eliminated from
    all older rows (so the stored basis is always the unique RREF of the
    span).  With ``track=True`` each row also carries its expression in the
    originally inserted vectors, which makes ``member`` return coordinates
    over the insertion history rather than over the RREF rows.
    """

    __slots__ = ("p", "rows", "combos", "track", "ninserted", "_col_rows")

    def __init__(self, p, track=False):
        self.p = p
        self.rows = {}            # pivot col -> row dict (row[pivot] == 1)
        self.combos = {} if track else None   # pivot col -> {orig index: coeff}
        self.track = track
        self.ninserted = 0
        self._col_rows = {}       # col -> set of pivot cols whose row hits col

    @property
    def rank(self):
        return len(self.rows)

    def pivots(self):
        return sorted(self.rows)

    def _reduce(self, vec, combo=None):
        row = dict(vec)
        hits = [c for c in row if c in self.rows]
        for c in hits:
            coef = row.get(c)
            if not coef:
                continue
            vec_addmul(row, self.rows[c], self.p - coef, self.p)
            if combo is not None:
                vec_addmul(combo, self.combos[c], self.p - coef, self.p)
        return row

    def reduce(self, vec):
        """Residue of vec modulo the current span (a fresh dict)."""
        return self._reduce(vec)

    def insert(self, vec):
        """Insert a vector; returns the new pivot column or None if dependent."""
        idx = self.ninserted
        self.ninserted += 1
        combo = {idx: 1} if self.track else None
        row = self._reduce(vec, combo)
        if not row:
            return None
        piv = min(row)
        inv = pow(row[piv], self.p - 2, self.p)
        if inv != 1:
            row = {c: v * inv % self.p for c, v in row.items()}
            if combo is not None:
                combo = {c: v * inv % self.p for c, v in combo.items()}
        # clear the new pivot column from all existing rows
        holders = self._col_rows.get(piv)
        if holders:
            for pc in list(holders):
                old = self.rows[pc]
                coef = old.get(piv)
                if not coef:
                    continue
                vec_addmul(old, row, self.p - coef, self.p)
                if self.track:
                    vec_addmul(self.combos[pc], combo, self.p - coef, self.p)
                for col in row:
                    if col in old:
                        self._col_rows.setdefault(col, set()).add(pc)
                    else:
                        s = self._col_rows.get(col)
                        if s:
                            s.discard(pc)
            self._col_rows.pop(piv, None)
        self.rows[piv] = row
        if self.track:
            self.combos[piv] = combo
        for col in row:
            if col != piv:
                self._col_rows.setdefault(col, set()).add(piv)
        return piv

    def member(self, vec):
        """Coordinates of vec over the RREF rows, or None if outside the span.

        With tracking on, coordinates are over the original inserted vectors
        instead (a dict original_index -> coeff).
        """
        combo = {} if self.track else None
        row = self._reduce(vec, combo)
        if row:
            return None
        if self.track:
            return {k: (self.p - v) % self.p for k, v in combo.items()}
        coords = {}
        rest = dict(vec)
        while rest:
            c = min(rest)
            if c not in self.rows:
                return None  # unreachable after zero residue; kept defensive
            coef = rest[c]
            coords[c] = coef
            vec_addmul(rest, self.rows[c], self.p - coef, self.p)
        return coords

    def basis_rows(self):
        """The RREF rows in pivot order (canonical for the span)."""
        return [self.rows[c] for c in sorted(self.rows)]


class SparseMatrix:
    """Rows of strictly increasing (column, scalar) pairs over F_p."""

    __slots__ = ("p", "nrows", "ncols", "rows")

    def __init__(self, p, nrows, ncols, rows=None):
        self.p = p
        self.nrows = nrows
        self.ncols = ncols
        self.rows = []
        for r in rows or []:
            d = {}
            for col, v in (r.items() if isinstance(r, dict) else r):
                if not 0 <= col < ncols:
                    raise IndexError(f"column {col} out of range 0..{ncols - 1}")
                v %= p
                if v:
                    d[col] = v
            self.rows.append(d)
        if len(self.rows) != nrows:
            raise ValueError(f"expected {nrows} rows, got {len(self.rows)}")

    def row_pairs(self):
        return [sorted(r.items()) for r in self.rows]

    def __eq__(self, other):
        return (isinstance(other, SparseMatrix)
                and (self.p, self.nrows, self.ncols) == (other.p, other.nrows, other.ncols)
                and self.rows == other.rows)


def rref(M: SparseMatrix):
    """Reduced row echelon form and rank."""
    ech = Echelon(M.p)
    for r in M.rows:
        ech.insert(r)
    rows = ech.basis_rows()
    out = SparseMatrix(M.p, len(rows), M.ncols, rows)
    return out, len(rows)


def kernel(M: SparseMatrix):
    """Basis of the null space, as coordinate dicts over the columns."""
    R, rank = rref(M)
    pivots = {min(r): r for r in R.rows}
    free = [c for c in range(M.ncols) if c not in pivots]
    out = []
    for f in free:
        v = {f: 1}
        for pc, row in pivots.items():
            c = row.get(f)
            if c:
                v[pc] = (M.p - c) % M.p
        out.append(v)
    return out


def member_rows(rows, vec, p):
    """Coordinates of vec over the given independent rows, or None.

    B . coords = vec with B the row list; certified by a zero echelon
    residual.
    """
    ech = Echelon(p, track=True)
    for r in rows:
        if ech.insert(r) is None:
            raise ValueError("member_rows requires independent rows")
    coords = ech.member(vec)
    if coords is None:
        return None
    return [coords.get(i, 0) for i in range(len(rows))]


def solve_combination(vectors, target, p):
    """Coefficients x with sum x_j vectors_j = target, or None."""
    ech = Echelon(p, track=True)
    for v in vectors:
        ech.insert(v)
    combo = ech.member(target)
    if combo is None:
        return None
    out = [0] * len(vectors)
    for idx, c in combo.items():
        out[idx] = c
    return out


def closure(gens, op, p, dim_budget, grading=None, ambient_slice_dims=None,
            record_schedule=False):
    """Smallest op-closed subspace containing the generators.

    ``gens`` are coordinate dicts, ``op(a, b)`` a bilinear map returning a
    coordinate dict.  Worklist order is generator order then FIFO; the
    result is the unique RREF of the closed span, so it is independent of
    the schedule.

    When ``grading`` (a list: column -> degree) and ``ambient_slice_dims``
    (degree -> ambient slice dimension) are supplied and the closed span
    fills a whole degree slice, further spanning vectors for that slice are
    replaced by the slice's unit coordinate vectors: brackets against single
    coordinates are far cheaper, and the span argument is unchanged since a
    full slice is spanned by its units.  Saturation is disabled when a
    bracket schedule is recorded, because unit vectors carry no pedigree.

    Returns (echelon, schedule) where schedule is a list aligned with the
    raw spanning vectors: ("gen", i), ("bracket", gen_i, spanning_idx) or
    ("unit", column).  Raises BudgetError past ``dim_budget``.
    """
    ech = Echelon(p)
    spanning = []          # raw vectors, in insertion/enqueue order
    schedule = []
    work = deque()
    saturate = grading is not None and not record_schedule
    rank_by_deg = {}
    saturated = set()

    def vec_degree(vec):
        it = iter(vec)
        d = grading[next(it)]
        for col in it:
            if grading[col] != d:
                return None
        return d

    def enqueue(vec, ped):
        spanning.append(vec)
        schedule.append(ped)
        work.append(len(spanning) - 1)

    def saturation_check(d):
        if d is None or d in saturated:
            return
        amb = ambient_slice_dims.get(d)
        if amb is not None and rank_by_deg.get(d, 0) == amb:
            saturated.add(d)
            for col, cd in enumerate(grading):
                if cd == d:
                    enqueue({col: 1}, ("unit", col))

    def try_insert(vec, ped):
        if ech.insert(vec) is None:
            return
        if ech.rank > dim_budget:
            raise BudgetError(
                f"closure exceeded the dimension budget {dim_budget}",
                partial=ech.rank)
        enqueue(vec, ped)
        if saturate:
            d = vec_degree(vec)
            if d is not None:
                rank_by_deg[d] = rank_by_deg.get(d, 0) + 1
                saturation_check(d)

    for i, g in enumerate(gens):
        if g:
            try_insert(g, ("gen", i))
    while work:
        idx = work.popleft()
        vec = spanning[idx]
        if saturate and schedule[idx][0] != "unit":
            d = vec_degree(vec)
            if d is not None and d in saturated:
                continue  # slice is spanned by its units, which are queued
        for gi, g in enumerate(gens):
            c = op(g, vec)
            if c:
                try_insert(c, ("bracket", gi, idx))
    return ech, spanning, schedule
