"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (including usage errors and failed
verifications), 2 resource limits. Diagnostics go to stderr; artifacts go
to files or stdout so that subcommands can be piped together.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import logging
import sys
from pathlib import Path
from typing import ContextManager, TextIO

from . import experiments as ex
from .complex import DEFAULT_SIMPLEX_CAP, dumps_complex, loads_complex, read_complex, write_complex
from .errors import ResourceError, ValidationError
from .geometry import (RNG_ALGORITHM, RipsParams, TorusSpec, add_boundary, binomial_process,
                       poisson_process, read_points, rips_complex, write_points)
from .homology import betti_numbers, boundary_matrix, parse_field, write_boundary_triplets
from .reduction import (ReduceOptions, ReductionReport, full_domain_prefilter, reduce,
                        verify_dominating, verify_nash)

log = logging.getLogger("simplicial_reduction")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _open_in(path: str | None) -> ContextManager[TextIO]:
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdin)
    try:
        return open(path)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def _write_out(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _config_line(args: argparse.Namespace, *skip: str) -> str:
    """Resolved run configuration, minus output locations, as one JSON line."""
    drop = {"func", "out", "report", "out_complex", "critical_out", "verbose", *skip}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in drop}
    return "config: " + json.dumps(cfg, sort_keys=True)


def _read_ids(path: str) -> list[int]:
    with _open_in(path) as fh:
        text = fh.read()
    ids = []
    for tok in text.replace(",", " ").split():
        if tok.startswith("#"):
            break
        try:
            ids.append(int(tok))
        except ValueError:
            raise ValidationError(f"{path}: bad vertex id {tok!r}") from None
    return ids


# -- subcommands --------------------------------------------------------

def cmd_generate(args) -> int:
    torus = TorusSpec(args.d, args.a, args.metric, periodic=not args.square)
    if args.process == "binomial":
        if args.n is None:
            raise ValidationError("--n is required for the binomial process")
        config = binomial_process(torus, args.n, args.seed)
    else:
        if args.lam is None:
            raise ValidationError("--lambda is required for the Poisson process")
        config = poisson_process(torus, args.lam, args.seed)
    comments = [_config_line(args), f"rng: {RNG_ALGORITHM}"]
    if args.boundary_step is not None:
        config, ids = add_boundary(config, args.boundary_step)
        comments.append("boundary: " + " ".join(map(str, ids)))
        if args.critical_out:
            Path(args.critical_out).write_text(" ".join(map(str, ids)) + "\n")
    buf = io.StringIO()
    write_points(config, buf, comments)
    _write_out(args.out, buf.getvalue())
    log.info("generated %d points", config.n)
    return 0


def cmd_rips(args) -> int:
    with _open_in(args.input) as fh:
        config = read_points(fh)
    cx = rips_complex(config, RipsParams(args.epsilon, args.max_dim), simplex_cap=args.simplex_cap)
    buf = io.StringIO()
    write_complex(cx, buf, [_config_line(args), f"s_counts: {' '.join(map(str, cx.s_counts))}"])
    _write_out(args.out, buf.getvalue())
    log.info("rips complex with simplex counts %s", cx.s_counts)
    return 0


def _load_complex(args):
    with _open_in(args.input) as fh:
        return read_complex(fh, simplex_cap=args.simplex_cap)


def cmd_homology(args) -> int:
    cx = _load_complex(args)
    field = parse_field(args.field)
    betti = betti_numbers(cx, args.k0, field)
    sys.stdout.write("beta: " + " ".join(map(str, betti)) + "\n")
    if args.dump_boundary is not None:
        write_boundary_triplets(boundary_matrix(cx, args.dump_boundary), sys.stdout)
    return 0


def cmd_reduce(args) -> int:
    cx = _load_complex(args)
    critical = _read_ids(args.critical) if args.critical else []
    if args.points:
        if not args.full_domain:
            raise ValidationError("--points is only used with --full-domain")
        with _open_in(args.points) as fh:
            cx, dropped = full_domain_prefilter(cx, read_points(fh), critical)
        log.info("prefilter dropped %d vertices", len(dropped))
    options = ReduceOptions(full_domain=args.full_domain, field=parse_field(args.field),
                            verify_incremental=args.verify_incremental)
    report = reduce(cx, critical, args.k0, options, seed=args.seed)
    for w in report.warnings:
        log.warning(w)
    data = report.to_dict()
    data["config"] = json.loads(_config_line(args).removeprefix("config: "))
    data["initial_complex"] = dumps_complex(cx)
    _write_out(args.report, json.dumps(data, sort_keys=True, indent=1) + "\n")
    if args.out_complex:
        with open(args.out_complex, "w") as fh:
            write_complex(report.final_complex, fh, [_config_line(args)])
    log.info("removed %d vertices; bounds %s", report.M, report.bounds)
    return 0


def cmd_verify(args) -> int:
    with _open_in(args.report) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"report is not valid JSON: {exc}") from None
    report = ReductionReport.from_dict(data)
    if args.input:
        initial = _load_complex(args)
    elif data.get("initial_complex"):
        initial = loads_complex(data["initial_complex"], simplex_cap=args.simplex_cap)
    else:
        raise ValidationError("no initial complex: pass --in or use a report that embeds one")
    results = {"nash": verify_nash(report, initial)}
    if report.k0 == 2 and report.options.full_domain:
        results["dominating"] = verify_dominating(report, initial)
    audit = ex.complexity_audit(report, initial)
    results["audit"] = audit.passed
    results["audit_measured"] = audit.measured
    results["audit_bound"] = audit.bound
    sys.stdout.write(json.dumps(results, sort_keys=True) + "\n")
    ok = all(v for k, v in results.items() if not k.startswith("audit_"))
    return 0 if ok else 1


# -- experiments ----------------------------------------------------------

MOMENT_DEFAULTS = {"n": 50, "d": 2, "theta": 0.02, "trials": 2000, "ks": [2, 3], "a": 1.0,
                   "z_threshold": 4.0}
REGIME_DEFAULTS = {"regime": "subcritical", "d": 2, "n_values": [200, 400, 800], "eta": 1.0,
                   "k": 2, "c": 1.0, "exponent": 0.5, "a": 1.0, "trials": 500}
AUDIT_DEFAULTS = {"runs": 100, "first_seed": 0, "k0_values": [1, 2], "n_range": [10, 30],
                  "epsilon_range": [0.15, 0.3], "d": 2}


def _resolve(defaults: dict, path: str | None) -> dict:
    cfg = dict(defaults)
    if path:
        with _open_in(path) as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config is not valid JSON: {exc}") from None
        unknown = set(user) - set(defaults) - {"seed"}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    return cfg


def cmd_experiment(args) -> int:
    defaults = {"moments": MOMENT_DEFAULTS, "regime": REGIME_DEFAULTS, "audit": AUDIT_DEFAULTS}
    cfg = _resolve(defaults[args.kind], args.config)
    cfg.setdefault("seed", args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = [f"{args.kind} experiment", "config: " + json.dumps(cfg, sort_keys=True),
              f"rng: {RNG_ALGORITHM}"]
    (out / f"{args.kind}_config.json").write_text(json.dumps(cfg, sort_keys=True, indent=1) + "\n")
    if args.kind == "moments":
        _run_moments(cfg, out, header, args)
    elif args.kind == "regime":
        _run_regime(cfg, out, header, args)
    else:
        _run_audit(cfg, out, header, args)
    return 0


def _run_moments(cfg, out: Path, header, args) -> None:
    rep = ex.moment_experiment(cfg["n"], cfg["d"], cfg["theta"], cfg["trials"], cfg["seed"],
                               ks=cfg["ks"], a=cfg["a"], z_threshold=cfg["z_threshold"],
                               threads=args.threads)
    cols = ["k", "sample_mean", "sample_var", "formula_mean", "formula_var", "binomial_var",
            "se_mean", "se_var", "z_mean", "z_var", "flagged"]
    rows = [[r.k, r.sample_mean, r.sample_var, float(r.formula_mean), float(r.formula_var),
             float(r.binomial_var), r.se_mean, r.se_var, r.z_mean, r.z_var, int(r.flagged)]
            for r in rep.rows]
    ex.write_csv(out / "moments.csv", cols, rows, header)
    ex.write_csv(out / "moments_samples.csv", ["trial"] + [f"N_{k}" for k in cfg["ks"]],
                 [[i, *map(int, s)] for i, s in enumerate(rep.samples)], header)
    if not args.no_plot:
        ks = [r.k for r in rep.rows]
        ex.plot_svg(out / "moments.svg", ks,
                    {"sample mean": [r.sample_mean for r in rep.rows],
                     "formula mean": [float(r.formula_mean) for r in rep.rows]},
                    "k", "N_k", f"n={cfg['n']}, theta={cfg['theta']}")
    for r in rep.rows:
        log.info("N_%d: mean %.3f (formula %.3f, z=%.2f) var %.3f (formula %.3f, z=%.2f)%s",
                 r.k, r.sample_mean, float(r.formula_mean), r.z_mean, r.sample_var,
                 float(r.formula_var), r.z_var, "  FLAGGED" if r.flagged else "")


def _run_regime(cfg, out: Path, header, args) -> None:
    spec = ex.RegimeSpec(cfg["regime"], cfg["d"], list(cfg["n_values"]), cfg["eta"], cfg["k"],
                         cfg["c"], cfg["exponent"], cfg["a"])
    rep = ex.clique_regime_experiment(spec, cfg["trials"], cfg["seed"], threads=args.threads)
    cols = ["n", "trial", "theta", "C", "N_counts", "counts_complete", "clique_method", "wall_time"]
    rows = [[s.n, s.seed[-1], s.theta, s.C, " ".join(map(str, s.N_counts)),
             int(s.op_counters["counts_complete"]), s.op_counters["clique_method"], s.wall_time]
            for s in rep.samples]
    ex.write_csv(out / "regime.csv", cols, rows, header)
    keys = [k for k in rep.summary[0] if k != "C_distribution"]
    ex.write_csv(out / "regime_summary.csv", keys + ["C_distribution"],
                 [[s[k] for k in keys] + [json.dumps(s["C_distribution"])] for s in rep.summary],
                 header)
    if not args.no_plot:
        ns = [s["n"] for s in rep.summary]
        ex.plot_svg(out / "regime.svg", ns, {"mean C": [s["mean_C"] for s in rep.summary]},
                    "n", "C", f"{spec.regime} regime")
    for s in rep.summary:
        log.info("n=%d: %s", s["n"], s)


def _run_audit(cfg, out: Path, header, args) -> None:
    seeds = range(cfg["first_seed"], cfg["first_seed"] + cfg["runs"])
    rows = ex.audit_experiment(seeds, cfg["k0_values"], threads=args.threads,
                               n_range=tuple(cfg["n_range"]), d=cfg["d"],
                               epsilon_range=tuple(cfg["epsilon_range"]))
    cols = ["seed", "k0", "n", "epsilon", "M", "measured", "bound", "passed"]
    ex.write_csv(out / "audit.csv", cols, [[r[c] for c in cols] for r in rows], header)
    if not args.no_plot:
        ex.plot_svg(out / "audit.svg", list(range(len(rows))),
                    {"measured": [r["measured"] for r in rows], "bound": [r["bound"] for r in rows]},
                    "run", "operations", "complexity audit")
    failed = [r for r in rows if not r["passed"]]
    log.info("audit: %d runs, %d over the bound", len(rows), len(failed))


# -- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--simplex-cap", type=int, default=DEFAULT_SIMPLEX_CAP,
                        help="abort when a complex would exceed this many simplices")
    common.add_argument("--threads", type=int, default=1, help="worker processes for experiments")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="simplicial-reduction",
                     description="Simplicial complexes, homology and homology-preserving reduction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="sample a point configuration")
    p.add_argument("--process", choices=["binomial", "poisson"], required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--metric", choices=["uniform", "euclidean"], default="uniform")
    p.add_argument("--square", action="store_true", help="plain square instead of the torus")
    p.add_argument("--boundary-step", type=float, help="append a perimeter grid with this spacing")
    p.add_argument("--critical-out", help="write the perimeter grid ids here")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("rips", parents=[common], help="build a Rips complex from points")
    p.add_argument("--in", dest="input", help="points file (default stdin)")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--max-dim", type=int, help="skip simplices above this dimension")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_rips)

    p = sub.add_parser("homology", parents=[common], help="print Betti numbers")
    p.add_argument("--in", dest="input", help="complex file (default stdin)")
    p.add_argument("--k0", type=int, required=True, help="print beta_0 .. beta_{k0-1}")
    p.add_argument("--field", default="Q")
    p.add_argument("--dump-boundary", type=int, metavar="K", help="also print the K-th boundary matrix")
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("reduce", parents=[common], help="homology-preserving vertex reduction")
    p.add_argument("--in", dest="input", help="complex file (default stdin)")
    p.add_argument("--critical", help="file of critical vertex ids")
    p.add_argument("--k0", type=int, required=True)
    p.add_argument("--full-domain", action="store_true")
    p.add_argument("--points", help="points file used to prefilter under --full-domain")
    p.add_argument("--field", default="Q")
    p.add_argument("--verify-incremental", action="store_true")
    p.add_argument("--report", help="report file (default stdout)")
    p.add_argument("--out-complex", help="also write the reduced complex here")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("experiment", parents=[common], help="Monte-Carlo experiments")
    p.add_argument("kind", choices=["moments", "regime", "audit"])
    p.add_argument("--config", help="JSON file overriding the defaults")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", parents=[common], help="check a saved reduction report")
    p.add_argument("--report", required=True)
    p.add_argument("--in", dest="input", help="initial complex (default: the one in the report)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
