"""Exact linear algebra over QQ and over rational-function fields.

Vectors over a function field are plain lists of sympy field elements that
all belong to one :class:`~sympy.polys.fields.FracField`.
"""

from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

__all__ = ["Echelon", "rank_mpq", "relations", "solve_particular"]


def rank_mpq(rows: Sequence[Sequence]) -> int:
    """Rank of a matrix of exact rationals (Gaussian elimination)."""
    m = [list(r) for r in rows if any(r)]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for col in range(ncols):
        pivot = None
        for i in range(rank, len(m)):
            if m[i][col]:
                pivot = i
                break
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        prow = m[rank]
        inv = 1 / mpq(prow[col])
        for i in range(rank + 1, len(m)):
            f = m[i][col]
            if f:
                f = f * inv
                row = m[i]
                for j in range(col, ncols):
                    if prow[j]:
                        row[j] = row[j] - f * prow[j]
        rank += 1
        if rank == len(m):
            break
    return rank


class Echelon:
    """Reduced echelon form of a row space with pivots at rightmost entries.

    Each stored row has a 1 at its pivot (its rightmost nonzero column) and
    zeros at every other pivot.  For a fixed column order this form is
    unique, so two row spaces are equal iff their echelons are equal.
    Rows may be inserted incrementally; the form stays canonical.
    """

    __slots__ = ("field", "ncols", "rows", "pivots", "combos", "_track")

    def __init__(self, field, ncols: int, track: bool = False):
        self.field = field
        self.ncols = ncols
        self.rows: list[list] = []
        self.pivots: list[int] = []
        # combos[i][j]: coefficient of inserted vector j in rows[i]
        self._track = track
        self.combos: list[dict[int, object]] = []

    @property
    def rank(self) -> int:
        return len(self.rows)

    def copy(self) -> "Echelon":
        e = Echelon(self.field, self.ncols)
        e.rows = [list(r) for r in self.rows]
        e.pivots = list(self.pivots)
        e._track = self._track
        e.combos = [dict(c) for c in self.combos]
        return e

    def reduce(self, v: Sequence) -> list:
        """Residual of ``v`` after clearing every pivot column."""
        v = list(v)
        for row, p in zip(self.rows, self.pivots):
            c = v[p]
            if c:
                for j, r in enumerate(row):
                    if r:
                        v[j] = v[j] - c * r
        return v

    def _reduce_tracked(self, v: Sequence, label: int):
        v = list(v)
        combo = {label: self.field.one}
        for row, p, rc in zip(self.rows, self.pivots, self.combos):
            c = v[p]
            if c:
                for j, r in enumerate(row):
                    if r:
                        v[j] = v[j] - c * r
                for k, a in rc.items():
                    combo[k] = combo.get(k, self.field.zero) - c * a
        return v, {k: a for k, a in combo.items() if a}

    def contains(self, v: Sequence) -> bool:
        return not any(self.reduce(v))

    def add(self, v: Sequence, label: int | None = None):
        """Insert ``v``; returns True when the rank grew.

        With tracking enabled, a dependent ``v`` returns the relation (a
        dict label -> coefficient, summing to zero) instead of False.
        """
        if self._track:
            r, combo = self._reduce_tracked(v, label)
        else:
            r, combo = self.reduce(v), None
        lead = None
        for j in range(self.ncols - 1, -1, -1):
            if r[j]:
                lead = j
                break
        if lead is None:
            return combo if self._track else False
        inv = 1 / r[lead]
        r = [x * inv if x else x for x in r]
        if combo is not None:
            combo = {k: a * inv for k, a in combo.items()}
        for i, row in enumerate(self.rows):
            c = row[lead]
            if c:
                self.rows[i] = [a - c * b if b else a for a, b in zip(row, r)]
                if self._track:
                    rc = self.combos[i]
                    for k, a in combo.items():
                        rc[k] = rc.get(k, self.field.zero) - c * a
                    self.combos[i] = {k: a for k, a in rc.items() if a}
        self.rows.append(r)
        self.pivots.append(lead)
        if self._track:
            self.combos.append(combo)
        # keep rows ordered by pivot so the stored form is canonical
        order = sorted(range(len(self.pivots)), key=self.pivots.__getitem__)
        self.rows = [self.rows[i] for i in order]
        self.pivots = [self.pivots[i] for i in order]
        if self._track:
            self.combos = [self.combos[i] for i in order]
        return True

    def key(self) -> tuple:
        """Hashable canonical form."""
        return tuple(tuple(r) for r in self.rows)

    def complement(self) -> list[int]:
        piv = set(self.pivots)
        return [j for j in range(self.ncols) if j not in piv]


def relations(field, vectors: Sequence[Sequence], ncols: int) -> list[list]:
    """Basis of ``{c : sum_i c_i * vectors[i] = 0}`` over ``field``.

    Each basis vector has coefficient 1 on the first vector that turned out
    dependent on its predecessors.
    """
    ech = Echelon(field, ncols, track=True)
    out = []
    n = len(vectors)
    for i, v in enumerate(vectors):
        res = ech.add(v, label=i)
        if isinstance(res, dict):
            rel = [field.zero] * n
            for k, a in res.items():
                rel[k] = a
            out.append(rel)
    return out


def solve_particular(field, columns: Sequence[Sequence], target: Sequence, ncols: int):
    """Some ``c`` with ``sum_i c_i * columns[i] = target``, free entries zero.

    Returns None when the system is inconsistent.
    """
    ech = Echelon(field, ncols, track=True)
    for i, v in enumerate(columns):
        ech.add(v, label=i)
    res = ech._reduce_tracked(target, -1)
    if any(res[0]):
        return None
    combo = res[1]
    # combo * [target, columns...] = 0 with coefficient 1 on the target
    c = [field.zero] * len(columns)
    for k, a in combo.items():
        if k >= 0:
            c[k] = -a
    return c
