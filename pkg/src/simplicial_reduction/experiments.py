"""Monte-Carlo checks of simplex-count moments and clique-number regimes,
plus the operation-count audit of reduction runs.

All trial functions are module level so they can be shipped to worker
processes; trial ``i`` always draws from ``trial_seed(seed, ..., i)``.
"""

from __future__ import annotations

import csv
import math
import time
from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from math import comb
from pathlib import Path

import numpy as np

from .cliques import clique_counts, clique_number
from .complex import SimplicialComplex
from .errors import ValidationError
from .geometry import (RNG_ALGORITHM, RipsParams, TorusSpec, add_boundary, binomial_process,
                       epsilon_for_theta, neighbor_sets, poisson_process, proximity_pairs,
                       rips_complex, trial_seed)
from .reduction import ReduceOptions, ReductionReport, random_critical, reduce

REGIMES = ("subcritical", "critical", "supercritical")


def _frac(x) -> Fraction:
    """Exact rational from int, Fraction, Decimal, str, or float (via its repr)."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def run_trials(fn: Callable, jobs: Sequence, threads: int = 1) -> list:
    """Map ``fn`` over ``jobs``, in order, optionally in worker processes."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


# -- exact moment formulas --------------------------------------------------

def expected_Nk(n: int, k: int, d: int, theta) -> Fraction:
    """Mean number of (k-1)-simplices of the uniform-norm Rips complex of n
    binomial points on the torus: C(n, k) k^d theta^(k-1)."""
    if k < 2:
        raise ValidationError("expected_Nk needs k >= 2 (N_1 = n)")
    return comb(n, k) * Fraction(k) ** d * _frac(theta) ** (k - 1)


def variance_Nk(n: int, k: int, d: int, theta) -> Fraction:
    r"""Sum over the overlap size i = 1..k of
    C(n, 2k-i) C(2k-i, k) C(k, i) theta^(2k-i-1) (2k-i + 2(k-i)^2/(i+1))^d."""
    if k < 2:
        raise ValidationError("variance_Nk needs k >= 2")
    t = _frac(theta)
    total = Fraction(0)
    for i in range(1, k + 1):
        shape = 2 * k - i + Fraction(2 * (k - i) ** 2, i + 1)
        total += comb(n, 2 * k - i) * comb(2 * k - i, k) * comb(k, i) * t ** (2 * k - i - 1) * shape**d
    return total


def variance_Nk_binomial(n: int, k: int, d: int, theta) -> Fraction:
    """Exact variance for a fixed number n of points.

    :func:`variance_Nk` sums the second moment over overlapping pairs of
    k-sets without subtracting the product of means. With exactly n points
    that product must be removed for every overlapping pair, which gives
    ``variance_Nk - E^2 + C(n,k) C(n-k,k) p^2`` with p = k^d theta^(k-1).
    """
    p = Fraction(k) ** d * _frac(theta) ** (k - 1)
    mean = expected_Nk(n, k, d, theta)
    return variance_Nk(n, k, d, theta) - mean**2 + comb(n, k) * comb(n - k, k) * p**2


@dataclass(frozen=True)
class Thresholds:
    theta_prime: Decimal
    theta: Decimal
    theta_next: Decimal
    valid: bool
    sufficient: bool


def thresholds(n: int, k: int, d: int, eta: float = 1.0, precision: int = 50) -> Thresholds:
    """Lower and upper subcritical thresholds for simplices of k vertices.

    ``valid`` is theta'_k < theta_{k+1} (the window for C = k is non-empty);
    ``sufficient`` is the cruder n > k^(2(1+eta)k).
    """
    if k < 2:
        raise ValidationError("thresholds need k >= 2")
    if n < 2:
        raise ValidationError("thresholds need n >= 2")
    if not eta > 0:
        raise ValidationError("eta must be positive")
    e = Decimal(str(eta))
    with localcontext() as ctx:
        ctx.prec = precision

        def pair(kk: int) -> tuple[Decimal, Decimal]:
            K, N = Decimal(kk), Decimal(n)
            scale = N ** (Decimal(kk) / Decimal(kk - 1))
            lo = K ** ((1 + e - d) / (kk - 1)) / scale
            hi = K ** (-(1 + e + d) / (kk - 1)) / scale
            return +lo, +hi

        tp, tk = pair(k)
        _, tnext = pair(k + 1)
        sufficient = Decimal(n) > Decimal(k) ** (2 * (1 + e) * k)
    return Thresholds(tp, tk, tnext, tp < tnext, bool(sufficient))


# -- moment experiment ------------------------------------------------------

def _moment_trial(job) -> list[int]:
    n, d, a, theta, ks, seed, i = job
    torus = TorusSpec(d, a, "uniform")
    cx = rips_complex(binomial_process(torus, n, trial_seed(seed, i)),
                      RipsParams(epsilon_for_theta(theta, torus), max_dim_cap=max(ks) - 1))
    return [cx.count(k - 1) for k in ks]


@dataclass
class MomentRow:
    k: int
    sample_mean: float
    sample_var: float
    formula_mean: Fraction
    formula_var: Fraction
    binomial_var: Fraction
    se_mean: float
    se_var: float
    z_mean: float
    z_var: float
    flagged: bool


@dataclass
class MomentReport:
    n: int
    d: int
    theta: float
    a: float
    trials: int
    seed: int | None
    z_threshold: float
    rows: list[MomentRow]
    samples: np.ndarray = field(repr=False)
    wall_time: float = 0.0
    rng: str = RNG_ALGORITHM

    def row(self, k: int) -> MomentRow:
        return next(r for r in self.rows if r.k == k)

    @property
    def flagged(self) -> bool:
        return any(r.flagged for r in self.rows)


def _z(diff: float, se: float) -> float:
    if not se > 0 or math.isnan(se):
        return math.nan if diff else 0.0
    return diff / se


def moment_experiment(n: int, d: int, theta: float, trials: int, seed: int | None = 0, *,
                      ks: Sequence[int] = (2, 3), a: float = 1.0, z_threshold: float = 4.0,
                      threads: int = 1) -> MomentReport:
    """Sample mean/variance of N_k over ``trials`` binomial Rips complexes,
    set against the exact formulas; rows are flagged when |z| > z_threshold."""
    if theta > 0.5**d:
        raise ValidationError("theta must not exceed (1/2)^d")
    if trials < 1:
        raise ValidationError("trials must be positive")
    start = time.perf_counter()
    jobs = [(n, d, a, theta, tuple(ks), seed, i) for i in range(trials)]
    samples = np.array(run_trials(_moment_trial, jobs, threads), dtype=float).reshape(trials, len(ks))
    rows = []
    for j, k in enumerate(ks):
        x = samples[:, j]
        mean = float(x.mean())
        var = float(x.var(ddof=1)) if trials > 1 else math.nan
        if trials > 1:
            m4 = float(((x - mean) ** 4).mean())
            se_mean = math.sqrt(var / trials)
            se_var = math.sqrt(max(m4 - (trials - 3) / (trials - 1) * var**2, 0.0) / trials)
        else:
            se_mean = se_var = math.nan
        f_mean = expected_Nk(n, k, d, theta)
        f_var = variance_Nk(n, k, d, theta)
        z_mean = _z(mean - float(f_mean), se_mean)
        z_var = _z(var - float(f_var), se_var) if trials > 1 else math.nan
        flagged = any(abs(z) > z_threshold for z in (z_mean, z_var) if not math.isnan(z))
        rows.append(MomentRow(k, mean, var, f_mean, f_var, variance_Nk_binomial(n, k, d, theta),
                              se_mean, se_var, z_mean, z_var, flagged))
    return MomentReport(n, d, theta, a, trials, seed, z_threshold, rows, samples,
                        time.perf_counter() - start)


# -- clique-number regimes --------------------------------------------------

@dataclass
class RegimeSpec:
    """How theta(n) is chosen for each n of the schedule.

    subcritical: geometric mean of theta'_k and theta_{k+1};
    critical: theta = c / n; supercritical: theta = n^(-exponent), exponent < 1.
    """

    regime: str
    d: int = 2
    n_values: list[int] = field(default_factory=lambda: [200, 400, 800])
    eta: float = 1.0
    k: int = 2
    c: float = 1.0
    exponent: float = 0.5
    a: float = 1.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValidationError(f"regime must be one of {REGIMES}")
        if not self.n_values:
            raise ValidationError("n schedule is empty")
        if self.regime == "supercritical" and not 0 < self.exponent < 1:
            raise ValidationError("supercritical schedule needs 0 < exponent < 1 so that n*theta grows")

    def theta(self, n: int) -> float:
        if self.regime == "subcritical":
            lo = thresholds(n, self.k, self.d, self.eta)
            hi = thresholds(n, self.k + 1, self.d, self.eta)
            if not lo.valid:
                raise ValidationError(f"empty subcritical window for n={n}, k={self.k}")
            value = float((lo.theta_prime * hi.theta).sqrt())
        elif self.regime == "critical":
            value = self.c / n
        else:
            value = n ** (-self.exponent)
        if value > 0.5**self.d:
            raise ValidationError(f"theta={value:g} exceeds (1/2)^d for n={n}")
        return value


@dataclass
class RegimeSample:
    seed: list[int]
    n: int
    theta: float
    N_counts: list[int]
    C: int
    wall_time: float
    op_counters: dict


def _regime_trial(job) -> RegimeSample:
    spec, n, theta, seed, i, budget = job
    start = time.perf_counter()
    torus = TorusSpec(spec.d, spec.a, "uniform")
    config = binomial_process(torus, n, trial_seed(seed, n, i))
    eps = epsilon_for_theta(theta, torus)
    pairs = proximity_pairs(config, eps)
    counts, complete = clique_counts(neighbor_sets(n, pairs), budget=budget)
    if complete:
        C, method = len(counts), "enumeration"
    else:
        C, method = clique_number(config, eps), "box" if eps <= spec.a / 3 else "branch"
    return RegimeSample([seed if seed is not None else -1, n, i], n, theta, counts, C,
                        time.perf_counter() - start,
                        {"edges": len(pairs), "counts_complete": complete, "clique_method": method})


@dataclass
class RegimeReport:
    spec: RegimeSpec
    trials: int
    seed: int | None
    samples: list[RegimeSample]
    summary: list[dict]
    rng: str = RNG_ALGORITHM

    def for_n(self, n: int) -> dict:
        return next(s for s in self.summary if s["n"] == n)


def _summarize(spec: RegimeSpec, n: int, theta: float, samples: list[RegimeSample]) -> dict:
    Cs = np.array([s.C for s in samples], dtype=float)
    out = {"n": n, "theta": theta, "trials": len(samples), "mean_C": float(Cs.mean()),
           "C_distribution": {int(c): int(m) for c, m in sorted(Counter(Cs.astype(int)).items())}}
    ln = math.log(n)
    if spec.regime == "subcritical":
        out["frac_C_eq_k"] = float(np.mean(Cs == spec.k))
    elif spec.regime == "critical":
        low = ln ** (1 - spec.eta)
        out["frac_in_band"] = float(np.mean((Cs > low) & (Cs < ln)))
        out["frac_below_ln_n"] = float(np.mean(Cs < ln))
        out["mean_C_over_ln_n"] = float(np.mean(Cs / ln))
    else:
        floor = n * theta / (1 + theta)
        out["pigeonhole_floor"] = floor
        out["pigeonhole_violations"] = int(np.sum(Cs <= floor))
        out["mean_C_over_n_theta"] = float(np.mean(Cs / (n * theta)))
    return out


def clique_regime_experiment(spec: RegimeSpec, trials: int, seed: int | None = 0, *,
                             threads: int = 1, count_budget: int = 2**14) -> RegimeReport:
    if trials < 1:
        raise ValidationError("trials must be positive")
    jobs = [(spec, n, spec.theta(n), seed, i, count_budget)
            for n in spec.n_values for i in range(trials)]
    samples = run_trials(_regime_trial, jobs, threads)
    summary = []
    for n in spec.n_values:
        group = [s for s in samples if s.n == n]
        summary.append(_summarize(spec, n, group[0].theta, group))
    return RegimeReport(spec, trials, seed, samples, summary)


def trend_non_decreasing(values: Sequence[float]) -> bool:
    return all(b >= a for a, b in zip(values, values[1:]))


# -- complexity audit ------------------------------------------------------

def complexity_bound(s_counts: Sequence[int], k0: int) -> int:
    """n^2 s_k0 + (n + s_k0) * (s_0 + ... + s_{C-1}) for the given counts."""
    if not s_counts:
        return 0
    n = s_counts[0]
    sk0 = s_counts[k0] if k0 < len(s_counts) else 0
    return n * n * sk0 + (n + sk0) * sum(s_counts)


@dataclass
class AuditResult:
    measured: int
    bound: int
    passed: bool
    breakdown: dict


def complexity_audit(report: ReductionReport, cx: SimplicialComplex) -> AuditResult:
    """Charged operation count of a run against the bound evaluated on ``cx``,
    the complex the run started from."""
    if tuple(cx.s_counts) != tuple(report.initial_s_counts):
        raise ValidationError("complex does not match the report's initial simplex counts")
    c = report.counters
    bound = complexity_bound(cx.s_counts, report.k0)
    measured = c.charged
    return AuditResult(measured, bound, measured <= bound, asdict(c))


# -- random instances -------------------------------------------------------

@dataclass
class Instance:
    complex: SimplicialComplex
    critical: list[int]
    config: object
    epsilon: float


def random_rips_instance(seed: int, *, n_range: tuple[int, int] = (10, 30), d: int = 2,
                         epsilon_range: tuple[float, float] = (0.15, 0.3), a: float = 1.0,
                         metric: str = "uniform", p_critical: float = 0.5) -> Instance:
    """Binomial Rips complex on the torus with Bernoulli(p_critical) critical vertices.

    n, epsilon and the critical set all come from ``seed``.
    """
    rng = np.random.default_rng(trial_seed(seed, 0))
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    eps = float(rng.uniform(*epsilon_range))
    config = binomial_process(TorusSpec(d, a, metric), n, trial_seed(seed, 1))
    cx = rips_complex(config, RipsParams(eps))
    critical = random_critical(cx.vertices, p_critical, trial_seed(seed, 2))
    return Instance(cx, critical, config, eps)


def coverage_instance(seed: int, *, lam: float = 4.2, a: float = 2.0, epsilon: float = 1.0,
                      step: float | None = None, metric: str = "uniform") -> Instance:
    """Poisson points in the square [0, a]^2 plus a perimeter grid whose
    vertices are the critical ones; no wraparound."""
    torus = TorusSpec(2, a, metric, periodic=False)
    config = poisson_process(torus, lam, trial_seed(seed, 0))
    config, boundary = add_boundary(config, step if step is not None else epsilon / 2)
    cx = rips_complex(config, RipsParams(epsilon))
    return Instance(cx, boundary, config, epsilon)


def _audit_trial(job) -> dict:
    seed, k0, kwargs = job
    inst = random_rips_instance(seed, **kwargs)
    report = reduce(inst.complex, inst.critical, k0, ReduceOptions(), seed=seed)
    audit = complexity_audit(report, inst.complex)
    return {"seed": seed, "k0": k0, "n": inst.complex.count(0), "epsilon": inst.epsilon,
            "M": report.M, "measured": audit.measured, "bound": audit.bound,
            "passed": audit.passed}


def audit_experiment(seeds: Iterable[int], k0_values: Sequence[int] = (1, 2), *,
                     threads: int = 1, **instance_kwargs) -> list[dict]:
    jobs = [(s, k0, instance_kwargs) for s in seeds for k0 in k0_values]
    return run_trials(_audit_trial, jobs, threads)


# -- output ----------------------------------------------------------------

def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence],
              comments: Iterable[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(f"# columns: {', '.join(columns)}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def plot_svg(path: Path, x: Sequence[float], series: dict[str, Sequence[float]],
             xlabel: str, ylabel: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, ys in series.items():
        ax.plot(x, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
