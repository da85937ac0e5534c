"""Explicitly stored abstract simplicial complexes.

A simplex is a strictly increasing tuple of non-negative vertex ids; the
tuple is its canonical form, orientation is derived from that order by the
homology code. Every face of every stored simplex is stored as well, and
each simplex keeps the set of its immediate (one dimension up) cofaces.
"""

from __future__ import annotations

import io
from collections.abc import Iterable, Iterator
from typing import TextIO

from .errors import NotFoundError, ResourceError, ValidationError

Simplex = tuple[int, ...]

DEFAULT_SIMPLEX_CAP = 2**24
FILE_HEADER = "ascomplex v1"


def make_simplex(vertices: Iterable[int]) -> Simplex:
    """Return the canonical (sorted) form of ``vertices``.

    Raises ValidationError for duplicates, negative or non-integer ids and
    for the empty set.
    """
    verts = list(vertices)
    if not verts:
        raise ValidationError("a simplex needs at least one vertex")
    for v in verts:
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ValidationError(f"vertex ids must be non-negative integers, got {v!r}")
    simplex = tuple(sorted(verts))
    if len(set(simplex)) != len(simplex):
        raise ValidationError(f"duplicate vertex in simplex {verts}")
    return simplex


def facets(simplex: Simplex) -> list[Simplex]:
    """Codimension-one faces; the i-th entry omits the i-th vertex."""
    if len(simplex) == 1:
        return []
    return [simplex[:i] + simplex[i + 1:] for i in range(len(simplex))]


def dim(simplex: Simplex) -> int:
    return len(simplex) - 1


class SimplicialComplex:
    """Face-closed set of simplices with per-dimension storage.

    Mutation is single-writer; nothing here locks.
    """

    def __init__(self, maximal: Iterable[Iterable[int]] = (), *,
                 simplex_cap: int = DEFAULT_SIMPLEX_CAP):
        self.simplex_cap = simplex_cap
        self._by_dim: list[set[Simplex]] = []
        self._cofaces: dict[Simplex, set[Simplex]] = {}
        self._next_id = 0
        for sigma in maximal:
            self.insert_maximal(sigma)

    # -- construction -------------------------------------------------

    def insert_maximal(self, sigma: Iterable[int]) -> SimplicialComplex:
        """Insert ``sigma`` together with all of its faces (idempotent)."""
        sigma = make_simplex(sigma)
        if sigma in self._cofaces:
            return self
        missing: list[Simplex] = []
        seen = set()
        stack = [sigma]
        while stack:
            tau = stack.pop()
            if tau in seen or tau in self._cofaces:
                continue
            seen.add(tau)
            missing.append(tau)
            stack.extend(facets(tau))
        total = len(self) + len(missing)
        if total > self.simplex_cap:
            raise ResourceError(
                f"complex would hold {total} simplices, above the cap of {self.simplex_cap}",
                count=total)
        missing.sort(key=len)
        self._add_closed(missing)
        return self

    def _add_closed(self, simplices: Iterable[Simplex]) -> None:
        # Caller guarantees every facet is stored before the simplex itself.
        by_dim = self._by_dim
        cofaces = self._cofaces
        for tau in simplices:
            k = len(tau) - 1
            while len(by_dim) <= k:
                by_dim.append(set())
            by_dim[k].add(tau)
            cofaces[tau] = set()
            if k == 0:
                if tau[0] >= self._next_id:
                    self._next_id = tau[0] + 1
            else:
                for f in facets(tau):
                    cofaces[f].add(tau)

    def new_vertex_id(self) -> int:
        """An id never used by this complex, including deleted vertices."""
        return self._next_id

    def copy(self) -> SimplicialComplex:
        other = SimplicialComplex(simplex_cap=self.simplex_cap)
        other._by_dim = [set(level) for level in self._by_dim]
        other._cofaces = {s: set(c) for s, c in self._cofaces.items()}
        other._next_id = self._next_id
        return other

    # -- deletion -----------------------------------------------------

    def star(self, v: int) -> list[Simplex]:
        """All stored simplices containing vertex ``v``."""
        root = (v,)
        if root not in self._cofaces:
            raise NotFoundError(f"vertex {v} is not in the complex")
        out = [root]
        seen = {root}
        i = 0
        while i < len(out):
            for c in self._cofaces[out[i]]:
                if c not in seen:
                    seen.add(c)
                    out.append(c)
            i += 1
        return out

    def remove_vertex(self, v: int) -> list[Simplex]:
        """Delete ``v`` and every simplex containing it.

        Returns the deleted simplices, lowest dimension first.
        """
        star = self.star(v)
        star.sort(key=len)
        doomed = set(star)
        for tau in star:
            self._by_dim[len(tau) - 1].discard(tau)
            del self._cofaces[tau]
            for f in facets(tau):
                if f not in doomed:
                    self._cofaces[f].discard(tau)
        while self._by_dim and not self._by_dim[-1]:
            self._by_dim.pop()
        return star

    # -- queries ------------------------------------------------------

    def __contains__(self, sigma) -> bool:
        return tuple(sigma) in self._cofaces

    def __len__(self) -> int:
        return len(self._cofaces)

    def __iter__(self) -> Iterator[Simplex]:
        for level in self._by_dim:
            yield from sorted(level)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return self._cofaces.keys() == other._cofaces.keys()

    def __repr__(self) -> str:
        return f"SimplicialComplex(s={self.s_counts})"

    @property
    def max_dim(self) -> int:
        """Highest dimension present, -1 for the empty complex."""
        return len(self._by_dim) - 1

    @property
    def s_counts(self) -> tuple[int, ...]:
        return tuple(len(level) for level in self._by_dim)

    def count(self, k: int) -> int:
        return len(self._by_dim[k]) if 0 <= k < len(self._by_dim) else 0

    def simplices(self, k: int) -> list[Simplex]:
        """Dimension-``k`` simplices in lexicographic order."""
        if 0 <= k < len(self._by_dim):
            return sorted(self._by_dim[k])
        return []

    def iter_dim(self, k: int) -> Iterable[Simplex]:
        """Unordered view of the dimension-``k`` simplices."""
        if 0 <= k < len(self._by_dim):
            return self._by_dim[k]
        return ()

    @property
    def vertices(self) -> list[int]:
        return [s[0] for s in self.simplices(0)]

    def has_vertex(self, v: int) -> bool:
        return (v,) in self._cofaces

    def cofaces(self, sigma: Simplex) -> frozenset[Simplex]:
        """Immediate cofaces (one dimension higher) of ``sigma``."""
        try:
            return frozenset(self._cofaces[tuple(sigma)])
        except KeyError:
            raise NotFoundError(f"simplex {tuple(sigma)} is not in the complex") from None

    def is_maximal(self, sigma: Simplex) -> bool:
        return not self._cofaces[sigma]

    def cofaces_of(self, sigma: Iterable[int], target_dim: int) -> set[Simplex]:
        """Stored ``target_dim``-simplices containing ``sigma``."""
        sigma = tuple(sigma)
        if sigma not in self._cofaces:
            raise NotFoundError(f"simplex {sigma} is not in the complex")
        if target_dim <= len(sigma) - 1:
            raise ValidationError("target_dim must exceed the dimension of sigma")
        level = {sigma}
        for _ in range(target_dim - len(sigma) + 1):
            level = {c for s in level for c in self._cofaces[s]}
            if not level:
                break
        return level

    def maximal_simplices(self) -> list[Simplex]:
        return sorted(s for s, c in self._cofaces.items() if not c)

    @property
    def clique_number(self) -> int:
        """Vertex count of the largest simplex, 0 when empty."""
        return len(self._by_dim)

    def validate(self) -> list[str]:
        """Recheck every structural invariant; returns the violations found."""
        problems = []
        for k, level in enumerate(self._by_dim):
            for s in level:
                if len(s) != k + 1 or list(s) != sorted(set(s)):
                    problems.append(f"bad simplex {s} at dimension {k}")
                for f in facets(s):
                    if f not in self._cofaces:
                        problems.append(f"face {f} of {s} missing")
        if set(self._cofaces) != {s for level in self._by_dim for s in level}:
            problems.append("coface index keys differ from stored simplices")
        for s, cof in self._cofaces.items():
            expected = {c for c in self.iter_dim(len(s)) if set(s) <= set(c)}
            if cof != expected:
                problems.append(f"coface index of {s} is {cof}, expected {expected}")
        if self._by_dim and not self._by_dim[-1]:
            problems.append("trailing empty dimension")
        return problems


# -- text format -------------------------------------------------------

def write_complex(cx: SimplicialComplex, stream: TextIO, comments: Iterable[str] = ()) -> None:
    """Write the maximal simplices, sorted lexicographically, one per line."""
    stream.write(FILE_HEADER + "\n")
    for line in comments:
        stream.write(f"# {line}\n")
    for s in cx.maximal_simplices():
        stream.write(" ".join(map(str, s)) + "\n")


def read_complex(stream: TextIO, *, simplex_cap: int = DEFAULT_SIMPLEX_CAP) -> SimplicialComplex:
    header = stream.readline().strip()
    if header != FILE_HEADER:
        raise ValidationError(f"expected header {FILE_HEADER!r}, got {header!r}")
    cx = SimplicialComplex(simplex_cap=simplex_cap)
    for lineno, line in enumerate(stream, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            verts = [int(tok) for tok in line.split()]
        except ValueError:
            raise ValidationError(f"line {lineno}: non-integer vertex id in {line!r}") from None
        cx.insert_maximal(verts)
    return cx


def dumps_complex(cx: SimplicialComplex) -> str:
    buf = io.StringIO()
    write_complex(cx, buf)
    return buf.getvalue()


def loads_complex(text: str, **kwargs) -> SimplicialComplex:
    return read_complex(io.StringIO(text), **kwargs)


def full_simplex(vertices: Iterable[int]) -> SimplicialComplex:
    """The complex made of one simplex and all of its faces."""
    return SimplicialComplex([tuple(vertices)])
