"""Command-line entry point.

Exit codes: 0 when the run passes, 1 when an experiment fails, 2 on usage
errors (unknown flags, invalid parameters).  Every run writes a CSV table
and a JSON document under the output directory, named with the config hash.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import json
import math
import os
import sys
from pathlib import Path

from .classcert import certify
from .experiments import (
    DEFAULT_POINTS,
    SAMPLED,
    ExperimentConfig,
    ResultTable,
    _metadata,
    family_to_dict,
    heat_sandwich_grid,
    run_boundedness_probe,
    run_converge,
    run_distinguished,
    run_vv,
    sandwich_study,
)
from .kernels import KernelFamily, log_kernel_profile
from .weights import ZOO_FAMILIES, RadialWeight, dp_membership, load_zoo

USAGE_ERROR = 2


class UsageError(Exception):
    pass


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SYMKER_THREADS", "1")))
    except ValueError:
        return 1


def _family(args) -> KernelFamily:
    kind = args.family
    if kind == "heat":
        return KernelFamily.heat(args.zeta)
    if kind == "frac_heat":
        if args.alpha is None:
            raise UsageError("--alpha is required for frac_heat")
        return KernelFamily.frac_heat(args.alpha, args.zeta)
    if args.sigma is None:
        raise UsageError("--sigma is required for frac_poisson")
    return KernelFamily.frac_poisson(args.sigma, args.zeta)


def _add_family(p: argparse.ArgumentParser):
    p.add_argument("--family", choices=["heat", "frac_heat", "frac_poisson"], required=True)
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--sigma", type=float)


def _add_output(p: argparse.ArgumentParser):
    p.add_argument("--out", default="results", help="output directory for CSV/JSON")
    p.add_argument("--no-write", action="store_true", help="skip writing result files")


def _add_experiment(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON experiment config; overrides the other flags")
    p.add_argument("--family", choices=["heat", "frac_heat", "frac_poisson"], required=False, default="heat")
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--weight", default="unit", help="zoo entry name or spec such as 'exp:-3' or 'a:-2,b:-2'")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--points", type=float, nargs="+", default=list(DEFAULT_POINTS))
    p.add_argument("--test-function", default="smooth")
    p.add_argument("--shells", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symker", description="Kernels, maximal operators and weight classes on H^3.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-eval", help="evaluate a kernel profile psi_t(r)")
    _add_family(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--log", action="store_true", help="print log psi_t(r)")

    p = sub.add_parser("sandwich", help="kernel/envelope bands with grid-doubling drift")
    _add_family(p)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--nt", type=int, default=25)
    p.add_argument("--nr", type=int, default=40)
    _add_output(p)

    p = sub.add_parser("weight-class", help="classify a radial weight")
    _add_family(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--weight", required=True)
    p.add_argument("--json", action="store_true")
    _add_output(p)

    p = sub.add_parser("certify", help="certify membership of a kernel family in the class P_gamma")
    _add_family(p)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.1)
    _add_output(p)

    for name, help_text in (
        ("converge", "pointwise convergence run or divergence witness"),
        ("probe", "weighted boundedness probe (or --vv for the vector-valued experiment)"),
        ("distinguished", "distinguished-Laplacian reruns"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_experiment(p)
        if name == "probe":
            p.add_argument("--vv", action="store_true", help="run the l^q-valued maximal experiment instead")
            p.add_argument("--q", type=float, default=2.0)

    p = sub.add_parser("zoo", help="classify the curated weight zoo against its expected verdicts")
    p.add_argument("--json", action="store_true")
    _add_output(p)
    return parser


def _write(table: ResultTable, args, stem: str):
    if getattr(args, "no_write", False):
        return
    table.write(args.out, stem)
    if table.columns[:3] == ["k", "t", "x"]:
        # plot-ready (t, error) curve per evaluation point
        h = table.metadata.get("config_hash", "nohash")
        for x in sorted({row[2] for row in table.rows}):
            lines = [f"{row[1]!r} {row[4]!r}" for row in table.rows if row[2] == x]
            (Path(args.out) / f"{stem}-{h}-x{x:g}.dat").write_text("# t error\n" + "\n".join(lines) + "\n")


def _config_from(args, experiment: str) -> ExperimentConfig:
    if args.config:
        return ExperimentConfig.from_json(Path(args.config).read_text())
    fam = family_to_dict(_family(args))
    return ExperimentConfig(
        experiment=experiment,
        family=fam,
        weight=args.weight,
        p=args.p,
        R=args.R,
        k_max=args.k_max,
        points=tuple(args.points),
        test_function=args.test_function,
        shells=args.shells,
        output_dir=args.out,
        seed=args.seed,
    )


def _fmt(x: float) -> str:
    if x != 0 and (abs(x) < 1e-4 or abs(x) >= 1e4):
        return f"{x:.6e}"
    return f"{x:.6f}"


def cmd_kernel_eval(args) -> int:
    fam = _family(args)
    if args.t <= 0 or args.r < 0:
        raise UsageError("need t > 0 and r >= 0")
    lv = float(log_kernel_profile(fam, args.t, args.r))
    print(_fmt(lv) if args.log else _fmt(math.exp(lv)))
    return 0


def cmd_sandwich(args) -> int:
    fam = _family(args)
    study = sandwich_study(fam, coarse=(args.nt, args.nr), kappa=args.kappa)
    ok = study["stable"]
    if fam.kind == "heat":
        grid = heat_sandwich_grid(fam.zeta)
        study["closed_form_grid"] = grid
        ok = ok and grid["band"] <= 2.2
    rows = [[reg, v["c1"], v["c2"], v["band"], v["drift"]] for reg, v in study["regimes"].items()]
    cfg = {"family": family_to_dict(fam), "kappa": args.kappa, "nt": args.nt, "nr": args.nr}
    md = _metadata(None, "envelopes.EnvelopeSpec + kernels.log_kernel_profile", study=study)
    md["config_hash"] = ExperimentConfig("sandwich", family_to_dict(fam)).hash + f"-k{args.kappa:g}-{args.nt}x{args.nr}"
    md["config"] = cfg
    table = ResultTable(["regime", "c1", "c2", "band", "drift"], rows, md, ok)
    _write(table, args, "sandwich")
    for r in rows:
        print(f"{fam.label()} {r[0]:<5} c1={r[1]:.4g} c2={r[2]:.4g} band={r[3]:.4g} drift={r[4]:.2e}")
    print("stable under grid doubling " + SAMPLED if ok else "band unstable or too wide")
    return 0 if ok else 1


def cmd_weight_class(args) -> int:
    fam = _family(args)
    try:
        v = RadialWeight.parse(args.weight)
    except ValueError as e:
        raise UsageError(str(e)) from e
    report = dp_membership(v, fam, args.p)
    print(report.verdict)
    d = report.to_dict()
    d["source"] = "weights.dp_membership"
    if args.json:
        print(json.dumps(d, default=str, indent=1))
    cfg = ExperimentConfig("weight-class", family_to_dict(fam), args.weight, args.p)
    table = ResultTable(["verdict", "trend", "consistent"], [[report.verdict, report.trend, report.consistent]], _metadata(cfg, "weights.dp_membership", report=d), report.consistent)
    _write(table, args, "weight-class")
    return 0 if report.consistent else 1


def cmd_certify(args) -> int:
    fam = _family(args)
    report = certify(fam, R=args.R, a=args.a)
    print(report.to_json(indent=1))
    if not args.no_write:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        h = ExperimentConfig("certify", family_to_dict(fam), R=args.R).hash
        (out / f"certify-{h}.json").write_text(report.to_json(indent=1))
        rows = [[name, ax.verdict, max(ax.drift.values(), default=0.0)] for name, ax in report.axioms.items()]
        (out / f"certify-{h}.csv").write_text("axiom,verdict,max_drift\n" + "".join(f"{a},{b},{c!r}\n" for a, b, c in rows))
    print(report.summary(), file=sys.stderr)
    return 0 if report.passed else 1


def cmd_experiment(args, runner, stem: str) -> int:
    cfg = _config_from(args, stem)
    table = runner(cfg)
    _write(table, args, stem)
    md = table.metadata
    print(json.dumps({k: md[k] for k in md if k not in ("config",)}, default=str, indent=1))
    print(md.get("statement", ""))
    return 0 if table.passed else 1


def _zoo_job(item):
    name, weight, fam_name, p = item
    report = dp_membership(weight, ZOO_FAMILIES[fam_name], p)
    return name, fam_name, p, report.verdict, report.trend, report.consistent


def cmd_zoo(args) -> int:
    zoo = load_zoo()
    jobs = [(e.name, e.weight, fam, p) for e in zoo for fam in ZOO_FAMILIES for p in (1.0, 2.0)]
    n = _threads()
    if n > 1:
        with cf.ProcessPoolExecutor(max_workers=n) as ex:
            results = list(ex.map(_zoo_job, jobs))
    else:
        results = [_zoo_job(j) for j in jobs]
    expected = {e.name: e.expected for e in zoo}
    rows, ok = [], True
    for name, fam, p, verdict, trend, consistent in results:
        exp = expected[name][fam][str(int(p))]
        match = exp == verdict
        ok = ok and match and consistent
        rows.append([name, fam, p, verdict, exp, trend, consistent])
        if not args.json:
            print(f"{name:<16} {fam:<13} p={p:g}  {verdict:<11} expected {exp:<11} trend {trend:<9} {'ok' if match and consistent else 'MISMATCH'}")
    md = _metadata(None, "weights.dp_membership", entries=len(zoo))
    md["config_hash"] = "zoo"
    table = ResultTable(["weight", "family", "p", "verdict", "expected", "trend", "consistent"], rows, md, ok)
    if args.json:
        print(table.to_json())
    _write(table, args, "zoo")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        if args.command == "kernel-eval":
            return cmd_kernel_eval(args)
        if args.command == "sandwich":
            return cmd_sandwich(args)
        if args.command == "weight-class":
            return cmd_weight_class(args)
        if args.command == "certify":
            return cmd_certify(args)
        if args.command == "converge":
            return cmd_experiment(args, run_converge, "converge")
        if args.command == "probe":
            if args.vv:
                return cmd_experiment(args, lambda c: run_vv(c, q=args.q), "vv")
            return cmd_experiment(args, run_boundedness_probe, "probe")
        if args.command == "distinguished":
            return cmd_experiment(args, run_distinguished, "distinguished")
        if args.command == "zoo":
            return cmd_zoo(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"symker: error: {e}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, KeyError) as e:
        print(f"symker: error: {e}", file=sys.stderr)
        return USAGE_ERROR
    return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
