"""Command line front end: plan generation, route queries, simulation, A/B runs.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  The environment
variable ``CGRLAB_OUT`` overrides any ``--out`` directory.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from cgrlab import constellation, simcore, traffic
from cgrlab.contactgraph import build_contact_graph
from cgrlab.contactplan import (
    ContactPlan,
    make_demo_plan,
    parse_contact_plan,
    serialize_contact_plan,
)
from cgrlab.routesearch import routes_to_csv, yen_plus


class SystemExit2(Exception):
    """Usage error that should exit with status 2."""


def _parse_walker(value: str) -> tuple[int, int]:
    try:
        sats, planes = value.lower().split("x")
        return int(sats), int(planes)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"walker spec {value!r} must look like 12x10 (sats-per-plane x planes)"
        ) from None


def _parse_seeds(value: str) -> list[int]:
    seeds: list[int] = []
    for part in value.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def _load_plan(args: argparse.Namespace) -> ContactPlan:
    if getattr(args, "demo_plan", False):
        return make_demo_plan()
    if getattr(args, "plan", None):
        return parse_contact_plan(Path(args.plan).read_text())
    if getattr(args, "walker", None):
        sats, planes = args.walker
        params = constellation.WalkerParams(
            sats_per_plane=sats,
            planes=planes,
            phase_factor=args.phase,
            altitude_km=args.alt,
            inclination_deg=args.inc,
        )
        constraints = constellation.IslConstraints(
            max_interorbit_km=args.max_interorbit,
            terminals_per_sat=args.terminals,
        )
        return constellation.generate_contact_plan(
            params, constraints, horizon=args.horizon, step=args.step, rate=args.rate
        )
    raise SystemExit2("one plan source is required: --plan, --walker or --demo-plan")


def _add_walker_flags(parser: argparse.ArgumentParser, require: bool = False) -> None:
    parser.add_argument("--walker", type=_parse_walker, required=require,
                        help="constellation as SATSxPLANES, e.g. 12x10")
    parser.add_argument("--phase", type=int, default=1, help="Walker phase factor")
    parser.add_argument("--alt", type=float, help="orbital altitude in km")
    parser.add_argument("--inc", type=float, default=55.0, help="inclination in degrees")
    parser.add_argument("--horizon", type=float, default=6565.0, help="plan horizon in seconds")
    parser.add_argument("--step", type=float, default=1.0, help="sampling step in seconds")
    parser.add_argument("--max-interorbit", type=float, default=4909.0,
                        help="maximum inter-plane link distance in km")
    parser.add_argument("--terminals", type=int, default=4, help="ISL terminals per satellite")
    parser.add_argument("--rate", type=float, default=1.0, help="link rate in Mb/s")


def _cmd_gen_plan(args: argparse.Namespace) -> int:
    if args.alt is None:
        raise SystemExit2("--alt is required")
    sats, planes = args.walker
    params = constellation.WalkerParams(
        sats_per_plane=sats,
        planes=planes,
        phase_factor=args.phase,
        altitude_km=args.alt,
        inclination_deg=args.inc,
    )
    constraints = constellation.IslConstraints(
        max_interorbit_km=args.max_interorbit, terminals_per_sat=args.terminals
    )
    plan = constellation.generate_contact_plan(
        params, constraints, horizon=args.horizon, step=args.step, rate=args.rate
    )
    text = serialize_contact_plan(plan)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(plan.contacts)} contacts to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    if args.positions:
        times = [float(t) for t in range(0, int(args.horizon) + 1, max(1, int(args.step)))]
        Path(args.positions).write_text(constellation.positions_csv(params, times))
    return 0


def _cmd_route(args: argparse.Namespace) -> int:
    plan = _load_plan(args)
    if args.src not in plan.node_ids or args.dst not in plan.node_ids:
        raise SystemExit2(f"unknown node; plan knows {len(plan.node_ids)} nodes")
    graph = build_contact_graph(plan, args.src, args.dst)
    routes = yen_plus(graph, args.k, depart=args.depart)
    if not routes:
        print(f"warning: no route from {args.src} to {args.dst}", file=sys.stderr)
    sys.stdout.write(routes_to_csv(routes))
    return 0


def _out_dir(args: argparse.Namespace) -> Path:
    out = os.environ.get("CGRLAB_OUT") or args.out
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _scenario_bundles(args: argparse.Namespace, plan: ContactPlan, seed: int):
    if args.tasks:
        return traffic.read_tasks(Path(args.tasks).read_text())
    dest_pool = tuple(sorted(plan.node_ids - {args.source}))
    spec = traffic.ScenarioSpec(
        seed=seed,
        duration=args.duration,
        source=args.source,
        dest_pool=dest_pool,
        with_critical=not args.no_critical,
    )
    return traffic.generate_scenario(spec)


def _run_one(plan, bundles, policy, seed, k, outdir) -> dict:
    metrics = simcore.run_simulation(plan, bundles, policy, seed=seed, k=k)
    (outdir / f"metrics_{policy}_{seed}.csv").write_text(metrics.metrics_csv())
    (outdir / f"bundles_{policy}_{seed}.csv").write_text(metrics.bundles_csv())
    return {
        "seed": seed,
        "policy": policy,
        "generated": metrics.generated,
        "delivered": metrics.delivered_count,
        "failed": metrics.failed_count,
        "delivery_rate": round(metrics.delivery_rate(), 6),
        "mean_r_o": round(metrics.mean_occupancy(), 6),
        "computing": metrics.computing_total,
        "peak_at_sending": round(metrics.peak_at_sending(), 3),
        "mean_early_margin": round(metrics.mean_early_margin(), 3),
    }


_SUMMARY_FIELDS = (
    "seed", "policy", "generated", "delivered", "failed", "delivery_rate",
    "mean_r_o", "computing", "peak_at_sending", "mean_early_margin",
)


def _write_summary(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_SUMMARY_FIELDS)
        writer.writeheader()
        writer.writerows(rows)


def _cmd_simulate(args: argparse.Namespace) -> int:
    plan = _load_plan(args)
    if args.source not in plan.node_ids:
        raise SystemExit2(f"source node {args.source!r} not in plan")
    outdir = _out_dir(args)
    rows = []
    for seed in args.seeds:
        bundles = _scenario_bundles(args, plan, seed)
        rows.append(_run_one(plan, bundles, args.policy, seed, args.k, outdir))
    _write_summary(outdir / f"summary_{args.policy}.csv", rows)
    means = {
        key: sum(r[key] for r in rows) / len(rows)
        for key in ("delivery_rate", "mean_r_o", "computing", "peak_at_sending", "mean_early_margin")
    }
    print(
        f"{args.policy}: {len(rows)} run(s); mean delivery_rate "
        f"{means['delivery_rate']:.3f}, mean R_O {means['mean_r_o']:.4f}, "
        f"mean computing {means['computing']:.0f}, "
        f"mean peak at_sending {means['peak_at_sending']:.0f} Mb"
    )
    return 0


def _read_summary(path: Path) -> dict[int, dict]:
    with path.open() as fh:
        return {int(row["seed"]): row for row in csv.DictReader(fh)}


def _cmd_compare(args: argparse.Namespace) -> int:
    a = _read_summary(Path(args.a))
    b = _read_summary(Path(args.b))
    shared = sorted(set(a) & set(b))
    if not shared:
        raise SystemExit2("the two summaries share no seeds")
    fields = ("delivery_rate", "mean_early_margin", "mean_r_o", "computing", "peak_at_sending")
    lines = ["seed," + ",".join(f"delta_{f}" for f in fields)]
    deltas = {f: 0.0 for f in fields}
    for seed in shared:
        row = [str(seed)]
        for f in fields:
            d = float(b[seed][f]) - float(a[seed][f])
            deltas[f] += d
            row.append(f"{d:g}")
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        outdir = _out_dir(args)
        (outdir / "comparison.csv").write_text(text)
    sys.stdout.write(text)
    n = len(shared)
    print(
        f"# mean deltas (b - a) over {n} seed(s): "
        + ", ".join(f"{f} {deltas[f] / n:+.4f}" for f in fields),
        file=sys.stderr,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgrlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-plan", help="generate a constellation contact plan")
    _add_walker_flags(gen, require=True)
    gen.add_argument("--out", help="output file (default: stdout)")
    gen.add_argument("--positions", help="also write a positions CSV to this file")
    gen.set_defaults(func=_cmd_gen_plan)

    route = sub.add_parser("route", help="print the best routes between two nodes")
    route.add_argument("--plan", help="contact plan file")
    route.add_argument("--demo-plan", action="store_true", help="use the built-in six-node plan")
    _add_walker_flags(route)
    route.add_argument("--from", dest="src", required=True)
    route.add_argument("--to", dest="dst", required=True)
    route.add_argument("--k", type=int, default=7)
    route.add_argument("--depart", type=float, default=0.0)
    route.set_defaults(func=_cmd_route)

    sim = sub.add_parser("simulate", help="run seeded simulations under one policy")
    sim.add_argument("--plan", help="contact plan file")
    sim.add_argument("--demo-plan", action="store_true")
    _add_walker_flags(sim)
    sim.add_argument("--tasks", help="task CSV file instead of a generated scenario")
    sim.add_argument("--policy", choices=simcore.POLICIES, required=True)
    sim.add_argument("--k", type=int, default=4)
    sim.add_argument("--seed", dest="seeds", type=_parse_seeds, default=[1],
                     help="seed list: 1,2,3 or 1..20")
    sim.add_argument("--source", default="1", help="traffic source node")
    sim.add_argument("--duration", type=int, default=25, help="traffic generation window (s)")
    sim.add_argument("--no-critical", action="store_true", help="omit the critical traffic class")
    sim.add_argument("--out", default="out", help="output directory")
    sim.set_defaults(func=_cmd_simulate)

    cmp_ = sub.add_parser("compare", help="diff two simulate summary files")
    cmp_.add_argument("--a", required=True, help="baseline summary CSV")
    cmp_.add_argument("--b", required=True, help="contender summary CSV")
    cmp_.add_argument("--out", help="directory for comparison.csv")
    cmp_.set_defaults(func=_cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
