"""Point processes on the flat torus and Vietoris-Rips complexes.

Randomness comes from numpy's PCG64 generator. A run seeded with ``seed``
gives trial ``i`` the child stream ``SeedSequence(seed, spawn_key=(i,))``
(experiments that sweep several ``n`` use ``spawn_key=(n, i)``), so every
trial can be replayed on its own and results do not depend on scheduling.
"""

from __future__ import annotations

import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any, TextIO

import numpy as np
from scipy.spatial import cKDTree

from .complex import DEFAULT_SIMPLEX_CAP, Simplex, SimplicialComplex
from .errors import ResourceError, ValidationError

RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence; trial i -> SeedSequence(seed, spawn_key=(..., i))"
METRICS = ("uniform", "euclidean")
DEFAULT_POINT_CAP = 10**7
POINTS_HEADER = "points v1"


@dataclass(frozen=True)
class TorusSpec:
    """The domain [0, a)^d.

    With ``periodic`` (the default) coordinate gaps wrap around, i.e. the
    gap between x and y is min(|x-y|, a-|x-y|). ``periodic=False`` is the
    plain square [0, a]^d used for coverage runs with a boundary.
    """

    d: int
    a: float = 1.0
    metric: str = "uniform"
    periodic: bool = True

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError(f"dimension must be >= 1, got {self.d}")
        if not self.a > 0:
            raise ValidationError(f"side length must be positive, got {self.a}")
        if self.metric not in METRICS:
            raise ValidationError(f"metric must be one of {METRICS}, got {self.metric!r}")

    def gaps(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        if self.periodic:
            diff = np.minimum(diff, self.a - diff)
        return diff

    def distance(self, x, y) -> np.ndarray | float:
        g = self.gaps(x, y)
        if self.metric == "uniform":
            return g.max(axis=-1)
        return np.sqrt((g * g).sum(axis=-1))

    def pairwise(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self.distance(pts[:, None, :], pts[None, :, :])


@dataclass
class PointConfiguration:
    torus: TorusSpec
    points: np.ndarray
    seed: Any = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, self.torus.d)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class RipsParams:
    """Two points are joined iff their distance is strictly below ``epsilon``."""

    epsilon: float
    max_dim_cap: int | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_dim_cap is not None and self.max_dim_cap < 0:
            raise ValidationError("max_dim_cap must be non-negative")

    def theta(self, torus: TorusSpec) -> float:
        return (self.epsilon / torus.a) ** torus.d


def epsilon_for_theta(theta: float, torus: TorusSpec) -> float:
    return torus.a * theta ** (1.0 / torus.d)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def trial_seed(seed: int | None, *key: int) -> np.random.SeedSequence:
    """Child seed for one Monte-Carlo trial."""
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))


def _seed_label(seed):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    if isinstance(seed, np.random.Generator):
        return None
    return seed


def _uniform_points(rng: np.random.Generator, torus: TorusSpec, n: int) -> np.ndarray:
    pts = rng.uniform(0.0, torus.a, size=(n, torus.d))
    if torus.periodic:
        pts[pts >= torus.a] = 0.0
    # coincident points have probability zero; redraw if it ever happens
    while n > 1 and len(np.unique(pts, axis=0)) < n:
        _, first = np.unique(pts, axis=0, return_index=True)
        dup = np.setdiff1d(np.arange(n), first)
        pts[dup] = rng.uniform(0.0, torus.a, size=(len(dup), torus.d))
    return pts


def binomial_process(torus: TorusSpec, n: int, seed=None) -> PointConfiguration:
    """Exactly ``n`` i.i.d. uniform points."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    rng = make_rng(seed)
    return PointConfiguration(torus, _uniform_points(rng, torus, n), _seed_label(seed))


def poisson_process(torus: TorusSpec, lam: float, seed=None, *,
                    max_points: int = DEFAULT_POINT_CAP) -> PointConfiguration:
    """Poisson(lam * a^d) many uniform points."""
    if not lam > 0:
        raise ValidationError("intensity must be positive")
    mean = lam * torus.a**torus.d
    if mean > max_points:
        raise ResourceError(f"mean point count {mean:g} exceeds the cap of {max_points}",
                            count=int(mean))
    rng = make_rng(seed)
    n = int(rng.poisson(mean))
    if n > max_points:
        raise ResourceError(f"drew {n} points, above the cap of {max_points}", count=n)
    return PointConfiguration(torus, _uniform_points(rng, torus, n), _seed_label(seed))


def boundary_grid(a: float, step: float, d: int = 2) -> np.ndarray:
    """Evenly spaced points along the perimeter of [0, a]^2 (spacing <= step)."""
    if d != 2:
        raise ValidationError("boundary grids are only defined for d = 2")
    if not step > 0:
        raise ValidationError("grid step must be positive")
    m = max(1, math.ceil(a / step - 1e-12))
    t = np.linspace(0.0, a, m + 1)[:-1]
    sides = [
        np.column_stack([t, np.zeros(m)]),
        np.column_stack([np.full(m, a), t]),
        np.column_stack([a - t, np.full(m, a)]),
        np.column_stack([np.zeros(m), a - t]),
    ]
    return np.vstack(sides)


def add_boundary(config: PointConfiguration, step: float) -> tuple[PointConfiguration, list[int]]:
    """Append a perimeter grid; returns the new configuration and the grid's ids."""
    grid = boundary_grid(config.torus.a, step, config.torus.d)
    pts = np.vstack([config.points, grid]) if len(config) else grid
    ids = list(range(len(config), len(pts)))
    return PointConfiguration(config.torus, pts, config.seed), ids


# -- proximity graph and Rips complex --------------------------------------

def proximity_pairs(config: PointConfiguration, epsilon: float) -> list[tuple[int, int]]:
    """Pairs i < j with distance < epsilon (strict)."""
    pts = config.points
    n = len(pts)
    if n < 2:
        return []
    torus = config.torus
    p = np.inf if torus.metric == "uniform" else 2
    if torus.periodic:
        tree = cKDTree(np.mod(pts, torus.a), boxsize=torus.a)
    else:
        tree = cKDTree(pts)
    cand = tree.query_pairs(epsilon, p=p, output_type="ndarray")
    if len(cand) == 0:
        return []
    dist = torus.distance(pts[cand[:, 0]], pts[cand[:, 1]])
    keep = cand[dist < epsilon]
    keep.sort(axis=1)
    return sorted(map(tuple, keep.tolist()))


def neighbor_sets(n: int, pairs: Iterable[tuple[int, int]]) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for i, j in pairs:
        adj[i].add(j)
        adj[j].add(i)
    return adj


def clique_simplices(adj: Sequence[set[int]], max_size: int | None = None,
                     cap: int | None = None) -> list[Simplex]:
    """All cliques (as sorted tuples) by incremental expansion over higher neighbours."""
    n = len(adj)
    upper = [frozenset(w for w in adj[v] if w > v) for v in range(n)]
    out: list[Simplex] = []
    limit = max_size if max_size is not None else n
    stack: list[tuple[Simplex, frozenset]] = [((v,), upper[v]) for v in range(n - 1, -1, -1)]
    while stack:
        tau, common = stack.pop()
        out.append(tau)
        if cap is not None and len(out) > cap:
            raise ResourceError(
                f"Rips complex exceeds the simplex cap of {cap} (more than {len(out) - 1} simplices)",
                count=len(out))
        if len(tau) < limit:
            for w in sorted(common, reverse=True):
                stack.append((tau + (w,), common & upper[w]))
    return out


def rips_complex(config: PointConfiguration, params: RipsParams, *,
                 simplex_cap: int = DEFAULT_SIMPLEX_CAP) -> SimplicialComplex:
    """Vietoris-Rips complex: k-simplices are the (k+1)-cliques of the proximity graph."""
    adj = neighbor_sets(config.n, proximity_pairs(config, params.epsilon))
    max_size = None if params.max_dim_cap is None else params.max_dim_cap + 1
    simplices = clique_simplices(adj, max_size, cap=simplex_cap)
    simplices.sort(key=len)
    cx = SimplicialComplex(simplex_cap=simplex_cap)
    cx._add_closed(simplices)
    return cx


def one_skeleton_adjacency(cx: SimplicialComplex) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {v: set() for v in cx.vertices}
    for u, v in cx.iter_dim(1):
        adj[u].add(v)
        adj[v].add(u)
    return adj


# -- point file format ------------------------------------------------------

def write_points(config: PointConfiguration, stream: TextIO, comments: Iterable[str] = ()) -> None:
    t = config.torus
    header = f"{POINTS_HEADER} d={t.d} a={t.a!r}"
    if t.metric != "uniform":
        header += f" metric={t.metric}"
    if not t.periodic:
        header += " domain=square"
    stream.write(header + "\n")
    for line in comments:
        stream.write(f"# {line}\n")
    for p in config.points:
        stream.write(" ".join(repr(float(x)) for x in p) + "\n")


def read_points(stream: TextIO) -> PointConfiguration:
    header = stream.readline().split()
    if header[:2] != POINTS_HEADER.split():
        raise ValidationError(f"expected a '{POINTS_HEADER}' header, got {' '.join(header)!r}")
    opts = {}
    for tok in header[2:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ValidationError(f"bad header token {tok!r}")
        opts[key] = val
    try:
        torus = TorusSpec(d=int(opts["d"]), a=float(opts["a"]),
                          metric=opts.get("metric", "uniform"),
                          periodic=opts.get("domain", "torus") != "square")
    except KeyError as exc:
        raise ValidationError(f"points header lacks {exc.args[0]}=") from None
    rows = []
    for lineno, line in enumerate(stream, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError:
            raise ValidationError(f"line {lineno}: bad coordinate in {line!r}") from None
        if len(row) != torus.d:
            raise ValidationError(f"line {lineno}: expected {torus.d} coordinates, got {len(row)}")
        rows.append(row)
    pts = np.array(rows, dtype=float).reshape(-1, torus.d)
    return PointConfiguration(torus, pts)


def dumps_points(config: PointConfiguration) -> str:
    buf = io.StringIO()
    write_points(config, buf)
    return buf.getvalue()


def loads_points(text: str) -> PointConfiguration:
    return read_points(io.StringIO(text))
