"""Command line interface.

Subcommands: census, simulate, green, zero-one, invariance, jeulin.
Each emits CSV rows (stdout by default) and, with --out DIR, writes the
CSV, a JSON report, and a manifest recording the fully resolved
configuration with a content hash, so a run can be reproduced exactly.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 resource
limit.  A --config FILE holds key=value lines; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .census import census_for, verify_oracle_equivalence
from .errors import ResourceError, UsageError, VerificationError
from .green import green_dp, green_mc, spitzer_asymptotic
from .jeulin import (
    bernoulli_non_unifiable,
    limit_jeulin_harness,
    route_a_scenario,
    shiga3_run,
    shiga3_scenario,
    shiga5_run,
)
from .norms import NormSpec, make_norm
from .summability import PowerLaw, PowerLog, zero_one_experiment
from .walk import (
    WalkRun,
    make_simple_walk,
    map_replicas,
    simulate,
    truncation_bias_bound,
)

SCHEMA_VERSION = 1


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _norm_from_args(args) -> NormSpec:
    transform = None
    if getattr(args, "transform", None):
        rows = [[int(v) for v in row.split(",")]
                for row in args.transform.split(";")]
        transform = rows
    family = args.norm.replace("-", "_")
    return make_norm(family, args.dim, factor=getattr(args, "factor", 1),
                     transform=transform)


def _guard_degenerate(spec: NormSpec, args) -> None:
    if spec.degenerate and not getattr(args, "allow_degenerate", False):
        raise UsageError(
            "scaled_max has empty odd levels (the monotone-census assumption "
            "fails); pass --allow-degenerate to proceed anyway")


def _parse_int_list(text: str) -> list:
    return [int(float(tok)) for tok in text.split(",") if tok.strip()]


class Emitter:
    """Collects CSV rows and a JSON report; writes stdout or --out files."""

    def __init__(self, subcommand: str, out_dir: Optional[str], fmt: str,
                 config: dict):
        self.subcommand = subcommand
        self.out_dir = Path(out_dir) if out_dir else None
        self.fmt = fmt
        self.config = config
        self.header: Optional[list] = None
        self.rows: list = []
        self.report: dict = {}

    def csv_rows(self, header: Sequence[str], rows: Sequence[Sequence]) -> None:
        self.header = list(header)
        self.rows = [list(r) for r in rows]

    def finish(self) -> None:
        if self.out_dir is None:
            if self.fmt in ("csv", "both") and self.header is not None:
                w = csv.writer(sys.stdout)
                w.writerow(self.header)
                w.writerows(self.rows)
            if self.fmt in ("json", "both") and self.report:
                json.dump(self.report, sys.stdout, indent=2, default=str)
                sys.stdout.write("\n")
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if self.header is not None:
            with (self.out_dir / f"{self.subcommand}.csv").open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(self.header)
                w.writerows(self.rows)
        if self.report:
            with (self.out_dir / f"{self.subcommand}.json").open("w") as fh:
                json.dump(self.report, fh, indent=2, default=str)
                fh.write("\n")
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "tool": "normwalk",
            "version": __version__,
            "subcommand": self.subcommand,
            "config": self.config,
        }
        blob = json.dumps(manifest, sort_keys=True, default=str)
        manifest["config_hash"] = hashlib.sha256(blob.encode()).hexdigest()
        with (self.out_dir / "manifest.json").open("w") as fh:
            json.dump(manifest, fh, indent=2, default=str)
            fh.write("\n")


# -- subcommand implementations ---------------------------------------------


def _cmd_census(args) -> int:
    spec = _norm_from_args(args)
    _guard_degenerate(spec, args)
    emitter = Emitter("census", args.out, args.format, vars(args).copy())
    method = "bruteforce" if args.bruteforce else "auto"
    cen = census_for(spec, args.kmax, method=method)
    emitter.csv_rows(["k", "count", "method"],
                     [(k, cen[k], cen.method) for k in range(cen.k_max + 1)])
    emitter.report = {"schema_version": SCHEMA_VERSION,
                      "spec": spec.describe(), "k_max": cen.k_max,
                      "method": cen.method}
    if args.verify:
        extra = [spec] if (spec.transform is not None or spec.degenerate) else []
        mismatches = verify_oracle_equivalence(
            dims=(spec.dim,), k_max=min(args.kmax, 15), extra_specs=extra)
        emitter.report["verified"] = not mismatches
        emitter.report["mismatches"] = mismatches
        if mismatches:
            emitter.finish()
            raise VerificationError(f"census oracle mismatch: {mismatches[0]}")
    emitter.finish()
    return 0


def _cmd_simulate(args) -> int:
    spec = _norm_from_args(args)
    step = make_simple_walk(args.dim)
    emitter = Emitter("simulate", args.out, args.format, vars(args).copy())

    def one(i: int):
        run = WalkRun(step=step, master_seed=args.seed, replica_index=i,
                      horizon=args.horizon, stop_radius=args.stop_radius)
        return simulate(run, spec)

    recs = map_replicas(one, args.replicas, threads=args.threads)
    rows = []
    for i, rec in enumerate(recs):
        for k, c in enumerate(rec.level_counts):
            if c:
                rows.append((i, k, int(c)))
    emitter.csv_rows(["replica", "k", "count"], rows)
    summary = [{"replica": i, "n_effective": rec.n_effective,
                "truncated": rec.truncated} for i, rec in enumerate(recs)]
    bias = None
    if args.stop_radius is not None:
        populated = [k for _, k, _ in rows if k < args.stop_radius]
        if populated:
            bias = truncation_bias_bound(spec, max(populated), args.stop_radius)
    emitter.report = {"schema_version": SCHEMA_VERSION,
                      "n_effective": [r["n_effective"] for r in summary],
                      "truncated": [r["truncated"] for r in summary],
                      "bias_bound": bias}
    emitter.finish()
    return 0


def _cmd_green(args) -> int:
    step = make_simple_walk(args.dim)
    x = tuple(int(v) for v in args.x.split(","))
    if len(x) != args.dim:
        raise UsageError("--x must have --dim coordinates")
    emitter = Emitter("green", args.out, args.format, vars(args).copy())
    if args.method == "dp":
        est = green_dp(step, x, n_max=args.nmax, box_radius=args.box_radius)
    elif args.method == "mc":
        spec = make_norm("max", args.dim)
        est = green_mc(step, spec, x, replicas=args.replicas,
                       master_seed=args.seed, threads=args.threads)
    else:
        if all(v == 0 for v in x):
            raise UsageError("the asymptotic needs x != 0")
        val = spitzer_asymptotic(step.covariance, x)
        emitter.report = {"schema_version": SCHEMA_VERSION, "x": list(x),
                          "value": val, "error_bound": None,
                          "method": "asymptotic"}
        emitter.csv_rows(["x", "value", "error_bound", "method"],
                         [(" ".join(map(str, x)), val, "", "asymptotic")])
        emitter.finish()
        return 0
    emitter.report = {"schema_version": SCHEMA_VERSION, "x": list(est.x),
                      "value": est.value, "error_bound": est.error_bound,
                      "method": est.method}
    emitter.csv_rows(["x", "value", "error_bound", "method"],
                     [(" ".join(map(str, est.x)), est.value,
                       est.error_bound, est.method)])
    emitter.finish()
    return 0


def _cmd_zero_one(args) -> int:
    spec = _norm_from_args(args)
    _guard_degenerate(spec, args)
    step = make_simple_walk(args.dim)
    if args.gamma is not None:
        f = PowerLog(beta=args.beta, gamma=args.gamma)
    else:
        f = PowerLaw(beta=args.beta)
    horizons = _parse_int_list(args.horizons)
    census = census_for(spec, 64)
    rep = zero_one_experiment(step, spec, f, replicas=args.replicas,
                              horizons=horizons, master_seed=args.seed,
                              census=census, threads=args.threads)
    emitter = Emitter("zero-one", args.out, args.format, vars(args).copy())
    rows = [(i, h, rep.partials[i, j])
            for i in range(args.replicas)
            for j, h in enumerate(rep.horizons)]
    emitter.csv_rows(["replica", "horizon", "partial_sum"], rows)
    emitter.report = {
        "schema_version": SCHEMA_VERSION,
        "f": f.label,
        "criterion_v": rep.criterion_v.value,
        "criterion_iv": rep.criterion_iv.value if rep.criterion_iv else None,
        "stabilized_fraction": rep.stabilized_fraction,
        "eps_abs": rep.eps_abs,
        "eps_rel": rep.eps_rel,
    }
    emitter.finish()
    if args.verify and rep.criterion_v.value != "undecidable":
        expect_high = rep.criterion_v.value == "converges"
        ok = rep.stabilized_fraction >= 0.8 if expect_high \
            else rep.stabilized_fraction <= 0.2
        if not ok:
            raise VerificationError(
                f"stabilized fraction {rep.stabilized_fraction} contradicts "
                f"the symbolic verdict {rep.criterion_v.value}")
    return 0


def _cmd_invariance(args) -> int:
    spec = _norm_from_args(args)
    _guard_degenerate(spec, args)
    step = make_simple_walk(args.dim)
    ladder = _parse_int_list(args.k_ladder)
    emitter = Emitter("invariance", args.out, args.format, vars(args).copy())
    from .measures import scaled_samples
    rows = []
    sets = []
    for j, k in enumerate(sorted(ladder)):
        s = scaled_samples(step, spec, k, args.replicas,
                           master_seed=args.seed + 7919 * j,
                           threads=args.threads)
        sets.append(s)
        rows.extend((k, i, v) for i, v in enumerate(s.samples))
    emitter.csv_rows(["k", "replica", "scaled_value"], rows)
    from .measures import distributional_cauchy
    ks_seq = [distributional_cauchy(a.samples, b.samples, seed=args.seed)
              for a, b in zip(sets, sets[1:])]
    emitter.report = {
        "schema_version": SCHEMA_VERSION,
        "k_ladder": sorted(ladder),
        "ks_sequence": [{"statistic": c.statistic, "noise_band": c.noise_band}
                        for c in ks_seq],
        "zero_fraction": float(np.mean([s.zero_fraction for s in sets])),
        "mean_sequence": [s.mean for s in sets],
    }
    emitter.finish()
    return 0


def _cmd_jeulin(args) -> int:
    emitter = Emitter("jeulin", args.out, args.format, vars(args).copy())
    if args.scenario == "bernoulli":
        rep = bernoulli_non_unifiable()
        emitter.report = {"schema_version": SCHEMA_VERSION, **rep.as_dict()}
        emitter.csv_rows(["finiteness_probability", "series_diverges"],
                         [(str(rep.finiteness_probability), rep.series_diverges)])
        emitter.finish()
        return 0
    if args.scenario == "shiga3":
        ladder = sorted({max(1, args.K // 100), max(1, args.K // 10), args.K})
        rep = shiga3_run(args.alpha, ladder, args.replicas, args.seed,
                         threads=args.threads)
        emitter.csv_rows(["K", "target", "empirical", "z", "divergence_fraction"],
                         [(row["K"], row["target"], row["empirical"], row["z"], fr)
                          for row, fr in zip(rep.laplace_rows,
                                             rep.divergence_fractions)])
        emitter.report = {
            "schema_version": SCHEMA_VERSION,
            "laplace_targets": [r["target"] for r in rep.laplace_rows],
            "laplace_empirical": [r["empirical"] for r in rep.laplace_rows],
            "z_scores": [r["z"] for r in rep.laplace_rows],
            "divergence_fractions": list(rep.divergence_fractions),
        }
        emitter.finish()
        return 0
    if args.scenario == "shiga5":
        rep = shiga5_run(args.alpha, args.levels, args.replicas, args.seed,
                         threads=args.threads)
        emitter.csv_rows(["eps", "target", "empirical", "z"],
                         [(r["eps"], r["target"], r["empirical"], r["z"])
                          for r in rep.laplace_rows])
        emitter.report = {
            "schema_version": SCHEMA_VERSION,
            "phi_integral": rep.phi_integral,
            "laplace_targets": [r["target"] for r in rep.laplace_rows],
            "laplace_empirical": [r["empirical"] for r in rep.laplace_rows],
            "z_scores": [r["z"] for r in rep.laplace_rows],
            "partial_medians": list(rep.partial_medians),
        }
        emitter.finish()
        return 0
    if args.scenario == "harness":
        scen = shiga3_scenario(args.alpha) if args.alpha < 0.5 else route_a_scenario(2.0)
        fam = [PowerLaw(4.0), PowerLaw(2.5), PowerLaw(1.0 / args.alpha)] \
            if args.alpha < 0.5 else [PowerLaw(4.0), PowerLaw(2.5)]
        rep = limit_jeulin_harness(scen, fam, [args.K // 100, args.K],
                                   replicas=args.replicas,
                                   master_seed=args.seed, threads=args.threads)
        emitter.csv_rows(["f", "series_verdict", "stabilized_fraction",
                          "implication_violated", "converse_fails"],
                         [(r.f_label, r.series_verdict.value,
                           r.stabilized_fraction, r.implication_violated,
                           r.converse_fails) for r in rep.rows])
        emitter.report = {"schema_version": SCHEMA_VERSION,
                          "scenario": rep.scenario,
                          "implication_respected": rep.implication_respected,
                          "exhibits_converse_failure": rep.exhibits_converse_failure}
        emitter.finish()
        if not rep.implication_respected:
            raise VerificationError("harness saw finite-evidence rows with a "
                                    "divergent weighted series")
        return 0
    raise UsageError(f"unknown scenario {args.scenario!r}")


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="normwalk",
                description="Norm-process experiments for transient lattice walks")
    p.add_argument("--config", help="key=value defaults file; flags override")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(q, dim_required=True):
        q.add_argument("--dim", type=int, required=dim_required,
                       default=None if dim_required else 3)
        q.add_argument("--norm", default="max",
                       choices=["max", "l1", "w1", "scaled-max", "scaled_max"])
        q.add_argument("--factor", type=int, default=1,
                       help="scale factor for scaled-max")
        q.add_argument("--transform",
                       help="unimodular matrix, rows ; separated, entries , separated")
        q.add_argument("--allow-degenerate", action="store_true")
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--threads", type=int, default=1)
        q.add_argument("--out", help="output directory (default: stdout)")
        q.add_argument("--format", choices=["csv", "json", "both"], default="csv")

    q = sub.add_parser("census", help="sphere counts N(k)")
    common(q)
    q.add_argument("--kmax", type=int, required=True)
    q.add_argument("--bruteforce", action="store_true")
    q.add_argument("--verify", action="store_true",
                   help="cross-check against brute force; exit 2 on mismatch")
    q.set_defaults(func=_cmd_census)

    q = sub.add_parser("simulate", help="walk replicas and level local times")
    common(q)
    q.add_argument("--replicas", type=int, default=1)
    q.add_argument("--horizon", type=int, default=None)
    q.add_argument("--stop-radius", type=int, default=None)
    q.set_defaults(func=_cmd_simulate)

    q = sub.add_parser("green", help="Green function estimates")
    common(q)
    q.add_argument("--x", required=True, help="lattice point, comma separated")
    q.add_argument("--method", choices=["dp", "mc", "asymptotic"], default="dp")
    q.add_argument("--nmax", type=int, default=4000)
    q.add_argument("--box-radius", type=int, default=None)
    q.add_argument("--replicas", type=int, default=20000)
    q.set_defaults(func=_cmd_green)

    q = sub.add_parser("zero-one", help="summability dichotomy experiment")
    common(q)
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--gamma", type=float, default=None)
    q.add_argument("--replicas", type=int, default=200)
    q.add_argument("--horizons", default="1e4,1e5")
    q.add_argument("--verify", action="store_true",
                   help="exit 2 when the fraction contradicts the verdict")
    q.set_defaults(func=_cmd_zero_one)

    q = sub.add_parser("invariance", help="scaled local-time ladder")
    common(q)
    q.add_argument("--k-ladder", default="10,20,40")
    q.add_argument("--replicas", type=int, default=500)
    q.set_defaults(func=_cmd_invariance)

    q = sub.add_parser("jeulin", help="stable-subordinator counterexamples")
    common(q, dim_required=False)
    q.add_argument("--scenario", required=True,
                   choices=["shiga3", "shiga5", "bernoulli", "harness"])
    q.add_argument("--alpha", type=float, default=0.4)
    q.add_argument("--K", type=int, default=10000)
    q.add_argument("--levels", type=int, default=16)
    q.add_argument("--replicas", type=int, default=5000)
    q.set_defaults(func=_cmd_jeulin)
    return p


def _apply_config_file(argv: list) -> list:
    """Splice key=value entries in as flags right after the subcommand.

    Explicit command-line flags come later in argv, so they win.
    """
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a file path")
    path = Path(argv[i + 1])
    if not path.exists():
        raise UsageError(f"config file {path} not found")
    tokens = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {line!r} is not key=value")
        key, val = line.split("=", 1)
        tokens.extend([f"--{key.strip().replace('_', '-')}", val.strip()])
    rest = argv[:i] + argv[i + 2:]
    if not rest:
        raise UsageError("a subcommand is required")
    return [rest[0], *tokens, *rest[1:]]


def main(argv: Optional[list] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        for name in ("seed", "threads", "replicas", "kmax", "horizon",
                     "stop_radius", "dim", "K", "levels", "nmax"):
            if hasattr(args, name) and isinstance(getattr(args, name), str):
                setattr(args, name, int(float(getattr(args, name))))
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
