"""Command-line front end.

    sfvuq sample     --case case2.toml --n 100 --seed 1
    sfvuq partition  --case case1.toml --n 1000 --clusters 32
    sfvuq run-mc     --case case1.toml --n 1000 --budget 256
    sfvuq run-sfv    --case case1.toml --n 1000 --clusters 32
    sfvuq converge   --case case1.toml --seed 7 --budgets 4,8,16 --methods mc,sfv-kmeans
    sfvuq case-info  --case case2.toml
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cases import load_case
from .io import (
    read_samples,
    write_convergence,
    write_estimates,
    write_partition,
    write_samples,
    write_stats,
)
from .partition import cluster_stats, kmeans_partition, tensor_partition
from .random_fields import draw_sample_set
from .solvers import SolverError
from .uq import convergence_study, method_name, run_study


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _budget_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"budgets must be comma-separated integers: {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("budgets must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("budgets must be strictly increasing")
    return vals


def _method_list(text):
    try:
        return [method_name(m.strip()) for m in text.split(",") if m.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", required=True, help="TOML case file or shipped case name")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n", type=_positive_int, default=1000, help="number of base samples")
    common.add_argument("--samples", type=Path, help="read base samples from CSV instead of drawing")
    common.add_argument("--out-dir", type=Path, default=Path("."))
    common.add_argument("--jobs", type=_positive_int, default=None,
                        help="worker processes (default: $SFV_UQ_JOBS or 1)")
    common.add_argument("--pi", type=float, help="override every well's productivity index")
    common.add_argument("--thickness", type=float, help="override cell thickness (m)")
    common.add_argument("--swept-porosity", action="store_true",
                        help="multiply swept volume by porosity")
    common.add_argument("--paper-literal-estimator", action="store_true",
                        help="apply the extra 1/N_c factor to SFV moments")

    p = argparse.ArgumentParser(prog="sfvuq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="write the base sample set")
    sp = sub.add_parser("partition", parents=[common], help="cluster the base samples")
    sp.add_argument("--clusters", type=_positive_int, required=True)
    sp.add_argument("--method", choices=("kmeans", "tensor"), default="kmeans")
    sp = sub.add_parser("run-mc", parents=[common], help="Monte Carlo estimate")
    sp.add_argument("--budget", type=_positive_int, help="samples to simulate (default: all)")
    sp = sub.add_parser("run-sfv", parents=[common], help="clustered SFV estimate")
    sp.add_argument("--clusters", type=_positive_int, required=True)
    sp.add_argument("--method", choices=("kmeans", "tensor"), default="kmeans")
    sp = sub.add_parser("converge", parents=[common], help="convergence study")
    sp.add_argument("--budgets", type=_budget_list, required=True)
    sp.add_argument("--methods", type=_method_list, default=["MC", "SFV-kmeans"])
    sub.add_parser("case-info", parents=[common], help="print the resolved case")
    return p


def _resolve(args):
    case = load_case(args.case)
    case = case.with_overrides(pi=args.pi, thickness=args.thickness,
                               swept_porosity=True if args.swept_porosity else None)
    if args.samples is not None:
        samples = read_samples(args.samples)
        if samples.dim != case.dim:
            raise ValueError(f"{args.samples} has {samples.dim} columns, case needs {case.dim}")
    else:
        samples = draw_sample_set(list(case.distributions), args.n, args.seed)
    return case, samples


def _meta(args, case, samples, **extra):
    overrides = {"pi": args.pi, "thickness": args.thickness,
                 "swept_porosity": bool(args.swept_porosity),
                 "paper_literal_estimator": bool(args.paper_literal_estimator)}
    meta = {"seed": args.seed, "case": case.name, "case_hash": case.digest(),
            "n_samples": samples.n,
            "samples_source": str(args.samples) if args.samples else "drawn",
            "overrides": json.dumps(overrides, sort_keys=True)}
    if any(w.pi is None for w in case.wells):
        meta["pi"] = "peaceman default (PI not given by the case)"
    meta.update(extra)
    return meta


def _cmd_sample(args):
    case, samples = _resolve(args)
    write_samples(samples, args.out_dir / "samples.csv", _meta(args, case, samples))


def _cmd_partition(args):
    case, samples = _resolve(args)
    if args.clusters > samples.n:
        raise ValueError(f"--clusters {args.clusters} exceeds the {samples.n} samples")
    if args.method == "kmeans":
        part = kmeans_partition(samples, args.clusters, seed=args.seed)
    else:
        from .partition import tensor_bins_for_budget

        part = tensor_partition(samples, tensor_bins_for_budget(args.clusters, samples.dim))
    meta = _meta(args, case, samples, method=args.method, clusters=part.n_clusters)
    write_partition(part, args.out_dir / "partition.csv", meta)
    write_stats(cluster_stats(part, samples), args.out_dir / "stats.csv", meta)


def _cmd_run_mc(args):
    case, samples = _resolve(args)
    budget = samples.n if args.budget is None else args.budget
    est = run_study(case, "MC", budget, samples, args.seed, args.jobs)
    write_estimates([est], args.out_dir / "estimate_mc.csv", _meta(args, case, samples))


def _cmd_run_sfv(args):
    case, samples = _resolve(args)
    method = method_name(args.method)
    est = run_study(case, method, args.clusters, samples, args.seed, args.jobs,
                    paper_literal=args.paper_literal_estimator)
    write_estimates([est], args.out_dir / f"estimate_{method.lower()}.csv",
                    _meta(args, case, samples))


def _cmd_converge(args):
    case, samples = _resolve(args)
    recs = convergence_study(case, args.budgets, args.methods, samples, args.seed, args.jobs,
                             paper_literal=args.paper_literal_estimator)
    for m, rec in recs.items():
        meta = _meta(args, case, samples, reference_mean=repr(rec.reference.mean),
                     reference_std=repr(rec.reference.std),
                     mean_slope=repr(rec.mean_slope), std_slope=repr(rec.std_slope))
        write_convergence(rec, args.out_dir / f"convergence_{m.lower()}.csv", meta)


def _cmd_case_info(args):
    case = load_case(args.case).with_overrides(
        pi=args.pi, thickness=args.thickness,
        swept_porosity=True if args.swept_porosity else None)
    info = case.to_dict()
    info["case_hash"] = case.digest()
    for w, entry in zip(case.wells, info["wells"]):
        if w.pi is None:
            # Peaceman PI over the support of the well block's component
            comp = int(case.field_layout.component_of_cell[w.cell])
            lo, hi = case.distributions[comp].support
            from .grid import MILLIDARCY

            pis = case.well_pi(np.array([[lo * MILLIDARCY], [hi * MILLIDARCY]]))[:, 0]
            entry["pi_defaulted"] = True
            entry["pi_range"] = [float(pis[0]), float(pis[1])]
    print(json.dumps(info, indent=2, sort_keys=True))


COMMANDS = {"sample": _cmd_sample, "partition": _cmd_partition, "run-mc": _cmd_run_mc,
            "run-sfv": _cmd_run_sfv, "converge": _cmd_converge, "case-info": _cmd_case_info}


def run_cli(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except SolverError as exc:
        print(f"sfvuq: solver failure: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"sfvuq: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
