"""Boundary matrices, exact ranks and Betti numbers.

Ranks are computed by column reduction on sparse columns. Over the
rationals the arithmetic stays in the integers: a column is combined with a
stored pivot column by cross-multiplication and then divided by the gcd of
its entries, so no fractions ever appear. Over GF(p) entries are reduced
modulo p.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field as dc_field
from typing import TextIO, Union

import numpy as np

from .complex import Simplex, SimplicialComplex
from .errors import ValidationError

Field = Union[str, int]
RATIONALS = "Q"

Column = dict[int, int]


def parse_field(text: str | int) -> Field:
    """Accepts ``Q``/``rational``, ``gf2``, ``gf(7)``, ``GF7`` or a bare prime."""
    if isinstance(text, int):
        p = text
    else:
        t = text.strip().lower()
        if t in ("q", "rational", "rationals"):
            return RATIONALS
        t = t.removeprefix("gf").strip("()")
        try:
            p = int(t)
        except ValueError:
            raise ValidationError(f"unknown field {text!r}") from None
    if p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
        raise ValidationError(f"field characteristic must be prime, got {p}")
    return p


def field_name(field: Field) -> str:
    return "Q" if field == RATIONALS else f"GF({field})"


@dataclass(frozen=True)
class BoundaryMatrix:
    """Sparse column-major matrix of the k-th boundary map.

    ``columns[j]`` maps row positions to the entry of the column of
    ``cols[j]``; rows and columns follow lexicographic simplex order.
    """

    k: int
    rows: list[Simplex]
    cols: list[Simplex]
    columns: list[Column] = dc_field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.int64)
        for j, col in enumerate(self.columns):
            for i, v in col.items():
                out[i, j] = v
        return out

    def triplets(self) -> list[tuple[int, int, int]]:
        return sorted((i, j, v) for j, col in enumerate(self.columns) for i, v in col.items())


def boundary_matrix(cx: SimplicialComplex, k: int, exclude: int | None = None) -> BoundaryMatrix:
    """Matrix of the map from k-chains to (k-1)-chains.

    With ``exclude`` set, simplices containing that vertex are left out, which
    gives the matrix of the complex with the vertex deleted.
    """
    if k < 1:
        raise ValidationError("boundary_matrix needs k >= 1")
    rows = _level(cx, k - 1, exclude)
    cols = _level(cx, k, exclude)
    return BoundaryMatrix(k, rows, cols, _columns(rows, cols))


def _level(cx: SimplicialComplex, k: int, exclude: int | None) -> list[Simplex]:
    if exclude is None:
        return cx.simplices(k)
    return sorted(s for s in cx.iter_dim(k) if exclude not in s)


def _columns(rows: list[Simplex], cols: list[Simplex]) -> list[Column]:
    pos = {s: i for i, s in enumerate(rows)}
    out = []
    for s in cols:
        col = {}
        sign = 1
        for i in range(len(s)):
            col[pos[s[:i] + s[i + 1:]]] = sign
            sign = -sign
        out.append(col)
    return out


def rank(matrix: BoundaryMatrix | Sequence[Sequence[int]] | np.ndarray,
         field: Field = RATIONALS) -> int:
    """Exact rank of an integer matrix over Q or GF(p)."""
    if isinstance(matrix, BoundaryMatrix):
        columns: Iterable[Column] = matrix.columns
    else:
        dense = np.asarray(matrix, dtype=object)
        if dense.size == 0:
            return 0
        columns = [{i: int(v) for i, v in enumerate(dense[:, j]) if v != 0}
                   for j in range(dense.shape[1])]
    if field == RATIONALS:
        return _rank_rational(columns)
    return _rank_mod_p(columns, int(field))


def _rank_rational(columns: Iterable[Column]) -> int:
    pivots: dict[int, Column] = {}
    for col in columns:
        c = dict(col)
        while c:
            low = max(c)
            piv = pivots.get(low)
            if piv is None:
                pivots[low] = _normalize(c)
                break
            a, b = piv[low], c[low]
            g = math.gcd(a, b)
            a, b = a // g, b // g
            merged = {r: a * v for r, v in c.items()}
            for r, v in piv.items():
                x = merged.get(r, 0) - b * v
                if x:
                    merged[r] = x
                else:
                    merged.pop(r, None)
            c = _normalize(merged) if merged else merged
    return len(pivots)


def _normalize(c: Column) -> Column:
    g = 0
    for v in c.values():
        g = math.gcd(g, v)
        if g == 1:
            return c
    return {r: v // g for r, v in c.items()}


def _rank_mod_p(columns: Iterable[Column], p: int) -> int:
    pivots: dict[int, Column] = {}
    for col in columns:
        c = {r: v % p for r, v in col.items() if v % p}
        while c:
            low = max(c)
            piv = pivots.get(low)
            if piv is None:
                inv = pow(c[low], -1, p)
                pivots[low] = {r: v * inv % p for r, v in c.items()}
                break
            f = c[low]
            for r, v in piv.items():
                x = (c.get(r, 0) - f * v) % p
                if x:
                    c[r] = x
                else:
                    c.pop(r, None)
    return len(pivots)


@dataclass(frozen=True)
class BettiVector:
    betti: tuple[int, ...]
    field: Field = RATIONALS

    def __iter__(self):
        return iter(self.betti)

    def __len__(self) -> int:
        return len(self.betti)

    def __getitem__(self, i):
        return self.betti[i]


def betti_numbers(cx: SimplicialComplex, k0: int, field: Field = RATIONALS,
                  exclude: int | None = None) -> BettiVector:
    """Betti numbers beta_0 .. beta_{k0-1}.

    beta_k = s_k - rank d_k - rank d_{k+1}; d_0 is the zero map.
    """
    if k0 < 1:
        raise ValidationError("k0 must be at least 1")
    levels = [_level(cx, k, exclude) for k in range(k0 + 1)]
    ranks = [0]
    for k in range(1, k0 + 1):
        if not levels[k]:
            ranks.append(0)
            continue
        cols = _columns(levels[k - 1], levels[k])
        ranks.append(_rank_rational(cols) if field == RATIONALS else _rank_mod_p(cols, int(field)))
    betti = tuple(len(levels[k]) - ranks[k] - ranks[k + 1] for k in range(k0))
    return BettiVector(betti, field)


def write_boundary_triplets(m: BoundaryMatrix, stream: TextIO) -> None:
    """Coordinate (row, col, value) dump with the orderings in the header."""
    stream.write(f"# boundary k={m.k} shape={m.shape[0]}x{m.shape[1]}\n")
    stream.write("# rows: " + " ".join("-".join(map(str, s)) for s in m.rows) + "\n")
    stream.write("# cols: " + " ".join("-".join(map(str, s)) for s in m.cols) + "\n")
    for i, j, v in m.triplets():
        stream.write(f"{i} {j} {v}\n")
