"""Homology-preserving vertex reduction.

Each k0-simplex gets a *degree* (dimension of its largest coface) and each
vertex an *index* (smallest degree among its k0-simplices, 0 if it has
none). Vertices of the current maximal index are drawn at random and
removed whenever doing so leaves beta_0 .. beta_{k0-1} unchanged.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable
from dataclasses import asdict, dataclass, field
from itertools import combinations


from .complex import Simplex, SimplicialComplex, facets, loads_complex, dumps_complex
from .errors import NotFoundError, PreconditionError, ResourceError, ValidationError
from .geometry import PointConfiguration, make_rng, RNG_ALGORITHM
from .homology import RATIONALS, Field, betti_numbers, field_name, parse_field

log = logging.getLogger(__name__)

REPORT_FORMAT = "reduction-report/1"

CRITICAL = "critical"
TEMPORARY = "temporary"
PERMANENT = "permanent"

DegreeTable = dict[Simplex, int]


@dataclass
class OpCounters:
    """Operation counts.

    The first three are the units charged by the complexity audit: simplices
    visited while computing degrees, k0-simplices scanned while computing
    indices, and simplices deleted by confirmed removals.
    """

    degree_traversals: int = 0
    index_scans: int = 0
    simplex_deletions: int = 0
    degree_updates: int = 0
    index_recomputations: int = 0
    betti_evaluations: int = 0

    @property
    def charged(self) -> int:
        return self.degree_traversals + self.index_scans + self.simplex_deletions


@dataclass
class IndexTable:
    """Vertex indices plus the reason a vertex sits at -1, if it does."""

    index: dict[int, int]
    flags: dict[int, str] = field(default_factory=dict)

    def __getitem__(self, v: int) -> int:
        return self.index[v]

    @property
    def i_max(self) -> int:
        return max(self.index.values(), default=-1)

    def flag(self, v: int, reason: str) -> None:
        self.index[v] = -1
        self.flags[v] = reason

    def with_flag(self, reason: str) -> list[int]:
        return sorted(v for v, r in self.flags.items() if r == reason)


@dataclass
class ReductionTables:
    """Degrees, vertex-to-k0-simplex incidence and indices, kept in sync."""

    k0: int
    degrees: DegreeTable
    incidence: dict[int, set[Simplex]]
    indices: IndexTable


@dataclass
class ReduceOptions:
    full_domain: bool = False
    field: Field = RATIONALS
    verify_incremental: bool = False


@dataclass
class ReductionReport:
    k0: int
    critical: list[int]
    options: ReduceOptions
    seed: int | None
    initial_betti: tuple[int, ...]
    initial_s_counts: tuple[int, ...]
    initial_i_max: int
    e_k_histogram: dict[int, int]
    bounds: tuple[int, int]
    removal_order: list[int] = field(default_factory=list)
    step_betti: list[tuple[int, ...]] = field(default_factory=list)
    draws: list[tuple[int, int, bool]] = field(default_factory=list)
    rejected: list[int] = field(default_factory=list)
    final_complex: SimplicialComplex | None = None
    final_indices: dict[int, int] = field(default_factory=dict)
    counters: OpCounters = field(default_factory=OpCounters)
    warnings: list[str] = field(default_factory=list)
    incremental_mismatches: int = 0
    partial: bool = False

    @property
    def M(self) -> int:
        return len(self.removal_order)

    def to_dict(self) -> dict:
        opts = asdict(self.options)
        opts["field"] = field_name(self.options.field)
        return {
            "format_version": REPORT_FORMAT,
            "rng": RNG_ALGORITHM,
            "seed": self.seed,
            "k0": self.k0,
            "options": opts,
            "critical": self.critical,
            "initial_betti": list(self.initial_betti),
            "initial_s_counts": list(self.initial_s_counts),
            "initial_i_max": self.initial_i_max,
            "e_k_histogram": {str(k): v for k, v in sorted(self.e_k_histogram.items())},
            "bounds": list(self.bounds),
            "M": self.M,
            "removal_order": self.removal_order,
            "step_betti": [list(b) for b in self.step_betti],
            "draws": [{"vertex": v, "i_max": i, "accepted": ok} for v, i, ok in self.draws],
            "rejected": self.rejected,
            "final_complex": dumps_complex(self.final_complex) if self.final_complex else None,
            "final_indices": {str(v): i for v, i in sorted(self.final_indices.items())},
            "counters": asdict(self.counters),
            "warnings": self.warnings,
            "incremental_mismatches": self.incremental_mismatches,
            "partial": self.partial,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ReductionReport:
        if data.get("format_version") != REPORT_FORMAT:
            raise ValidationError(f"unsupported report format {data.get('format_version')!r}")
        opts = dict(data["options"])
        opts["field"] = parse_field(opts["field"])
        return cls(
            k0=data["k0"],
            critical=list(data["critical"]),
            options=ReduceOptions(**opts),
            seed=data["seed"],
            initial_betti=tuple(data["initial_betti"]),
            initial_s_counts=tuple(data["initial_s_counts"]),
            initial_i_max=data["initial_i_max"],
            e_k_histogram={int(k): v for k, v in data["e_k_histogram"].items()},
            bounds=tuple(data["bounds"]),
            removal_order=list(data["removal_order"]),
            step_betti=[tuple(b) for b in data["step_betti"]],
            draws=[(d["vertex"], d["i_max"], d["accepted"]) for d in data["draws"]],
            rejected=list(data["rejected"]),
            final_complex=loads_complex(data["final_complex"]) if data["final_complex"] else None,
            final_indices={int(v): i for v, i in data["final_indices"].items()},
            counters=OpCounters(**data["counters"]),
            warnings=list(data["warnings"]),
            incremental_mismatches=data["incremental_mismatches"],
            partial=data["partial"],
        )


# -- degrees and indices --------------------------------------------------

def degree_of(cx: SimplicialComplex, sigma: Simplex, counters: OpCounters | None = None) -> int:
    """Dimension of the largest stored coface of ``sigma``."""
    best = len(sigma) - 1
    seen = {sigma}
    stack = [sigma]
    while stack:
        tau = stack.pop()
        for c in cx._cofaces[tau]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
                if len(c) - 1 > best:
                    best = len(c) - 1
    if counters is not None:
        counters.degree_traversals += len(seen) - 1
    return best


def compute_degrees(cx: SimplicialComplex, k0: int, counters: OpCounters | None = None) -> DegreeTable:
    if k0 < 1:
        raise ValidationError("k0 must be at least 1")
    return {s: degree_of(cx, s, counters) for s in cx.iter_dim(k0)}


def _incidence(cx: SimplicialComplex, degrees: DegreeTable) -> dict[int, set[Simplex]]:
    inc: dict[int, set[Simplex]] = {v: set() for v in cx.vertices}
    for s in degrees:
        for v in s:
            inc[v].add(s)
    return inc


def _index_from(simplices: Iterable[Simplex], degrees: DegreeTable,
                counters: OpCounters | None) -> int:
    best = 0
    scanned = 0
    for s in simplices:
        scanned += 1
        d = degrees[s]
        if best == 0 or d < best:
            best = d
    if counters is not None:
        counters.index_scans += scanned
    return best


def compute_indices(cx: SimplicialComplex, degrees: DegreeTable, k0: int,
                    critical: Iterable[int] = (), counters: OpCounters | None = None) -> IndexTable:
    """Index of every vertex; ``critical`` vertices are pinned to -1."""
    inc = _incidence(cx, degrees)
    table = IndexTable({v: _index_from(inc[v], degrees, counters) for v in inc})
    for v in critical:
        if v not in table.index:
            raise NotFoundError(f"critical vertex {v} is not in the complex")
        table.flag(v, CRITICAL)
    return table


def build_tables(cx: SimplicialComplex, k0: int, critical: Iterable[int] = (),
                 counters: OpCounters | None = None) -> ReductionTables:
    degrees = compute_degrees(cx, k0, counters)
    indices = compute_indices(cx, degrees, k0, critical, counters)
    return ReductionTables(k0, degrees, _incidence(cx, degrees), indices)


def incremental_index_update(cx: SimplicialComplex, removed: int, removed_simplices: list[Simplex],
                             i_max: int, tables: ReductionTables,
                             counters: OpCounters | None = None) -> IndexTable:
    """Bring ``tables`` up to date after ``removed`` was deleted from ``cx``.

    ``removed_simplices`` is what :meth:`SimplicialComplex.remove_vertex`
    returned. Only k0-simplices whose every largest coface was deleted get a
    new degree; indices are recomputed for vertices at ``i_max``,
    temporarily flagged vertices, and vertices touching a k0-simplex that
    lost its degree or disappeared. The last group is needed: a vertex below
    ``i_max`` can still drop when its minimising simplex's largest coface
    went away with ``removed``.
    """
    k0 = tables.k0
    degrees, inc, idx = tables.degrees, tables.incidence, tables.indices
    touched: set[int] = set()

    gone = set(removed_simplices)
    not_maximal = {f for rho in removed_simplices for f in facets(rho) if f in gone}
    for s in removed_simplices:
        if len(s) == k0 + 1:
            del degrees[s]
            for v in s:
                if v != removed:
                    inc[v].discard(s)
                    touched.add(v)
    inc.pop(removed, None)

    stale: set[Simplex] = set()
    for tau in gone - not_maximal:
        top = len(tau) - 1
        if top <= k0:
            continue
        rest = tuple(v for v in tau if v != removed)
        for sigma in combinations(rest, k0 + 1):
            if degrees.get(sigma) == top:
                stale.add(sigma)
    for sigma in stale:
        new = degree_of(cx, sigma, counters)
        if counters is not None:
            counters.degree_updates += 1
        if new != degrees[sigma]:
            degrees[sigma] = new
            touched.update(sigma)

    idx.index.pop(removed, None)
    idx.flags.pop(removed, None)
    redo = {v for v, i in idx.index.items() if i == i_max}
    redo |= set(idx.with_flag(TEMPORARY))
    redo |= touched
    for v in redo:
        if idx.flags.get(v) in (CRITICAL, PERMANENT) or v not in idx.index:
            continue
        idx.flags.pop(v, None)
        idx.index[v] = _index_from(inc[v], degrees, counters)
        if counters is not None:
            counters.index_recomputations += 1
    return idx


def _table_mismatches(cx: SimplicialComplex, tables: ReductionTables) -> list[str]:
    fresh = build_tables(cx, tables.k0)
    out = []
    if fresh.degrees != tables.degrees:
        out.append("degree table differs from recomputation")
    for v, i in fresh.indices.index.items():
        held = tables.indices.index.get(v)
        if v in tables.indices.flags:
            if held != -1:
                out.append(f"flagged vertex {v} has index {held}")
        elif held != i:
            out.append(f"vertex {v}: maintained index {held}, recomputed {i}")
    if set(fresh.indices.index) != set(tables.indices.index):
        out.append("vertex sets differ")
    return out


# -- the reduction loop ------------------------------------------------------

def removal_bounds(histogram: dict[int, int], k0: int, i_max: int) -> tuple[int, int]:
    """(number of occupied index levels, number of vertices) over k0+1 .. i_max."""
    levels = range(k0 + 1, i_max + 1)
    lower = sum(1 for k in levels if histogram.get(k, 0) > 0)
    upper = sum(histogram.get(k, 0) for k in levels)
    return lower, upper


def reduce(cx: SimplicialComplex, critical: Iterable[int], k0: int,
           options: ReduceOptions | None = None, seed: int | None = None) -> ReductionReport:
    """Remove non-critical vertices while beta_0 .. beta_{k0-1} stay fixed.

    ``cx`` itself is not modified; the reduced complex is
    ``report.final_complex``.
    """
    options = options or ReduceOptions()
    if k0 < 1:
        raise ValidationError("k0 must be at least 1")
    critical = sorted(set(critical))
    for v in critical:
        if not cx.has_vertex(v):
            raise NotFoundError(f"critical vertex {v} is not in the complex")

    work = cx.copy()
    counters = OpCounters()
    rng = make_rng(seed)
    target = betti_numbers(work, k0, options.field).betti
    counters.betti_evaluations += 1
    tables = build_tables(work, k0, critical, counters)
    idx = tables.indices

    histogram = dict(sorted(Counter(idx.index.values()).items()))
    i_max = idx.i_max
    report = ReductionReport(
        k0=k0, critical=critical, options=options, seed=seed,
        initial_betti=target, initial_s_counts=work.s_counts, initial_i_max=i_max,
        e_k_histogram=histogram, bounds=removal_bounds(histogram, k0, i_max),
        counters=counters,
    )
    if options.full_domain:
        zeros = sorted(v for v, i in idx.index.items() if i == 0)
        if zeros:
            msg = (f"{len(zeros)} vertices have index 0, which the full-domain "
                   f"setting does not expect: {zeros[:10]}")
            log.warning(msg)
            report.warnings.append(msg)

    stop = k0 + 1 if options.full_domain else k0
    rejected: set[int] = set()
    try:
        while i_max >= stop:
            candidates = sorted(v for v, i in idx.index.items() if i == i_max)
            w = candidates[int(rng.integers(len(candidates)))]
            trial = betti_numbers(work, k0, options.field, exclude=w).betti
            counters.betti_evaluations += 1
            if trial != target:
                idx.flag(w, PERMANENT if options.full_domain else TEMPORARY)
                rejected.add(w)
                report.draws.append((w, i_max, False))
            else:
                removed = work.remove_vertex(w)
                counters.simplex_deletions += len(removed)
                incremental_index_update(work, w, removed, i_max, tables, counters)
                report.removal_order.append(w)
                report.step_betti.append(trial)
                report.draws.append((w, i_max, True))
                if options.verify_incremental:
                    problems = _table_mismatches(work, tables)
                    report.incremental_mismatches += len(problems)
                    for p in problems[:5]:
                        report.warnings.append(f"after removing {w}: {p}")
            i_max = idx.i_max
    except MemoryError as exc:
        report.partial = True
        report.rejected = sorted(rejected)
        report.final_complex = work
        raise ResourceError(f"ran out of memory during homology computation: {exc}",
                            partial=report) from None

    report.rejected = sorted(rejected)
    report.final_complex = work
    report.final_indices = dict(sorted(idx.index.items()))
    return report


# -- verification ------------------------------------------------------------

def _replay(report: ReductionReport, initial: SimplicialComplex) -> SimplicialComplex | None:
    cx = initial.copy()
    try:
        for v in report.removal_order:
            cx.remove_vertex(v)
    except NotFoundError:
        return None
    return cx


def verify_nash(report: ReductionReport, initial: SimplicialComplex, k0: int | None = None) -> bool:
    """Exhaustive single-removal check of the final complex.

    Every remaining non-critical vertex must either change some of
    beta_0 .. beta_{k0-1} when removed, or have index 0. Reports produced
    with ``full_domain`` use the relaxed rule: index <= k0 also passes.
    The final complex must equal the initial one minus the removal order.
    """
    k0 = report.k0 if k0 is None else k0
    final = report.final_complex
    replayed = _replay(report, initial)
    if final is None or replayed is None or replayed != final:
        return False
    field = report.options.field
    target = betti_numbers(final, k0, field).betti
    if target != tuple(report.initial_betti):
        return False
    tables = build_tables(final, k0)
    ceiling = k0 if report.options.full_domain else 0
    critical = set(report.critical)
    for v in final.vertices:
        if v in critical:
            continue
        if tables.indices.index[v] <= ceiling:
            continue
        if betti_numbers(final, k0, field, exclude=v).betti == target:
            return False
    return True


def verify_dominating(report: ReductionReport, initial: SimplicialComplex) -> bool:
    """Is every initial vertex kept, or adjacent in the initial 1-skeleton to a kept one?"""
    if report.k0 != 2 or not report.options.full_domain:
        raise PreconditionError("dominating-set check applies to k0=2 runs with full_domain")
    kept = set(report.final_complex.vertices)
    covered = set(kept)
    for u, v in initial.iter_dim(1):
        if u in kept:
            covered.add(v)
        if v in kept:
            covered.add(u)
    return covered >= set(initial.vertices)


# -- full-domain preprocessing ---------------------------------------------

def full_domain_prefilter(cx: SimplicialComplex, config: PointConfiguration,
                          critical: Iterable[int]) -> tuple[SimplicialComplex, list[int]]:
    """Drop vertices outside the region spanned by the critical vertices.

    d = 1: outside the interval between the extreme critical coordinates.
    d = 2: outside the convex hull of the critical points. Coordinates are
    taken as plain (unwrapped) values. Returns the filtered copy and the
    dropped vertex ids.
    """
    d = config.torus.d
    crit = sorted(set(critical))
    if d > 2:
        raise PreconditionError("full-domain prefiltering is defined for d <= 2")
    if not crit:
        raise ValidationError("prefiltering needs at least one critical vertex")
    pts = config.points
    verts = cx.vertices
    if d == 1:
        lo, hi = pts[crit, 0].min(), pts[crit, 0].max()
        outside = [v for v in verts if not lo <= pts[v, 0] <= hi]
    else:
        from scipy.spatial import Delaunay
        from scipy.spatial import QhullError

        try:
            hull = Delaunay(pts[crit])
            inside = hull.find_simplex(pts[verts], tol=1e-9) >= 0
        except (QhullError, ValueError):
            raise PreconditionError("critical vertices do not span a 2-d region") from None
        outside = [v for v, ok in zip(verts, inside) if not ok]
    outside = [v for v in outside if v not in set(crit)]
    out = cx.copy()
    for v in outside:
        out.remove_vertex(v)
    return out, outside


def random_critical(vertices: Iterable[int], p: float, seed) -> list[int]:
    """Each vertex independently critical with probability ``p``."""
    rng = make_rng(seed)
    verts = sorted(vertices)
    mask = rng.random(len(verts)) < p
    return [v for v, m in zip(verts, mask) if m]
