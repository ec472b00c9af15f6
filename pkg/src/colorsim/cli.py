"""Command-line front end: gen, run, sweep, audit, compare.

Exit codes are a stable contract: 0 success, 1 usage error, 2 cap
exhaustion, 3 audit violation. All run-affecting options have deterministic
defaults and end up in the output metadata; the only environment variable
honored is COLORSIM_WORKERS (worker-pool width).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from ._version import __version__
from . import graph as graphs
from .dynamics import make_rng, run
from .harness import (
    AuditSweepSpec,
    ExperimentConfig,
    aggregate_row,
    build_graph,
    compare_variants,
    drift_audit_sweep,
    initial_state,
    public_config,
    run_ensemble,
    run_rows,
    scaling_fit,
    trace_lines,
    write_aggregate_csv,
    write_jsonl,
    write_runs_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CAP = 2
EXIT_VIOLATION = 3


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code (1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("COLORSIM_WORKERS", "1")))
    except ValueError:
        return 1


def _add_family_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", required=True,
                   choices=["complete", "cliques", "bipartite", "cycle", "er", "file"])
    p.add_argument("--n", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--graph-seed", type=int, default=0)
    p.add_argument("--graph", help="edge-list path for --family file")


_FAMILY_NAMES = {
    "complete": "complete",
    "cliques": "disjoint_cliques",
    "bipartite": "complete_bipartite",
    "cycle": "cycle",
    "er": "erdos_renyi",
    "file": "file",
}

_VARIANT_NAMES = {
    "uniform": "uniform",
    "component": "component_view",
    "component_view": "component_view",
    "persistent": "persistent",
    "parallel": "parallel",
}


def _config_from_args(args, seeds: int = 1) -> ExperimentConfig:
    init = {"random": "random", "ones": "all_ones", "file": "explicit"}[args.init]
    explicit = None
    if init == "explicit":
        if not args.init_file:
            raise SystemExit(EXIT_USAGE)
        with open(args.init_file, encoding="utf-8") as f:
            explicit = tuple(int(line) for line in f.read().split())
    return ExperimentConfig(
        family=_FAMILY_NAMES[args.family],
        n=args.n,
        count=args.count,
        size=args.size,
        a=args.a,
        b=args.b,
        p=args.p,
        graph_seed=args.graph_seed,
        path=args.graph,
        variant=_VARIANT_NAMES[args.variant],
        k=args.k,
        init=init,
        explicit_colors=explicit,
        seeds=seeds,
        master_seed=args.seed,
        cap=args.cap,
        workers=getattr(args, "workers", 1),
    )


# -- gen ------------------------------------------------------------------------


def _cmd_gen(args) -> int:
    try:
        cfg = ExperimentConfig(
            family=_FAMILY_NAMES[args.family],
            n=args.n, count=args.count, size=args.size,
            a=args.a, b=args.b, p=args.p,
            graph_seed=args.graph_seed, path=args.graph, seeds=1,
        )
        g = build_graph(cfg)
    except (ValueError, TypeError, OSError) as exc:
        print(f"gen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(graphs.to_edge_list(g))
    except OSError as exc:
        print(f"gen: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"n={g.n} m={g.m} delta={g.max_degree}")
    return EXIT_OK


# -- run ------------------------------------------------------------------------


def _cmd_run(args) -> int:
    try:
        config = _config_from_args(args, seeds=1)
        graph = build_graph(config)
        rng = make_rng(config.master_seed, 0)
        state = initial_state(graph, config, rng)
    except (ValueError, TypeError, OSError) as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_USAGE
    result, trace = run(state, config.variant, config.cap, rng, trace=bool(args.trace_out), seed=0)
    k = config.k if config.k is not None else graph.max_degree + 1
    print(
        f"config_id={config.resolved_id()} n={graph.n} m={graph.m} delta={graph.max_degree} "
        f"k={k} variant={config.variant} init={config.init} master_seed={config.master_seed} "
        f"steps={result.steps} terminated={str(result.terminated).lower()} "
        f"stalled={str(result.stalled).lower()} "
        f"initial_phi={result.initial_phi} final_phi={result.final_phi}"
    )
    if args.trace_out:
        meta = {"tool": f"colorsim {__version__}", "config": public_config(config)}
        with open(args.trace_out, "w", encoding="utf-8") as f:
            write_jsonl(f, meta, trace_lines(trace))
    if not result.terminated:
        return EXIT_CAP
    return EXIT_OK


# -- sweep ------------------------------------------------------------------------


def _load_sweep_file(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _cmd_sweep(args) -> int:
    try:
        spec = _load_sweep_file(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"sweep: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    defaults = {
        "seeds": spec.get("seeds", 200),
        "master_seed": spec.get("master_seed", 0),
        "cap": spec.get("cap", 1_000_000),
    }
    for key, flag_name in (("seeds", "--seeds"), ("master_seed", "--seed"), ("cap", "--cap")):
        flag = getattr(args, key if key != "master_seed" else "seed", None)
        if flag is not None:
            if key in spec:
                print(f"sweep: config file overrides {flag_name}", file=sys.stderr)
            else:
                defaults[key] = flag
    workers = args.workers if args.workers is not None else _default_workers()
    configs = []
    all_rows = []
    agg_rows = []
    fit_points = []
    failures = 0
    for cell in spec.get("cells", []):
        try:
            merged = dict(defaults)
            merged.update(cell)
            merged["workers"] = workers
            if merged.get("family") in _FAMILY_NAMES:
                merged["family"] = _FAMILY_NAMES[merged["family"]]
            config = ExperimentConfig(**merged)
        except (TypeError, ValueError) as exc:
            print(f"sweep: bad cell {cell}: {exc}", file=sys.stderr)
            failures += 1
            continue
        configs.append(config)
        try:
            graph = build_graph(config)
            stats, records = run_ensemble(config, timing=args.timing)
        except (ValueError, OSError) as exc:
            print(f"sweep: cell {config.resolved_id()} failed: {exc}", file=sys.stderr)
            failures += 1
            continue
        all_rows.extend(run_rows(config, graph, records))
        agg_rows.append((config, graph, stats))
        fit_points.append((graph.n, graph.max_degree, stats.mean_steps))
    fit = None
    fit_spec = spec.get("fit")
    if fit_spec and len(fit_points) >= 3:
        try:
            fit = scaling_fit(fit_points, fit_spec["model"])
        except ValueError as exc:
            print(f"sweep: fit failed: {exc}", file=sys.stderr)
    if args.per_run:
        with open(args.per_run, "w", encoding="utf-8", newline="") as f:
            write_runs_csv(f, configs, all_rows)
    if args.aggregate:
        rows = [aggregate_row(c, g, s, fit) for c, g, s in agg_rows]
        with open(args.aggregate, "w", encoding="utf-8", newline="") as f:
            write_aggregate_csv(f, configs, rows)
    for config, graph, stats in agg_rows:
        print(
            f"{config.resolved_id()}: mean={stats.mean_steps:.2f} median={stats.median_steps:.1f} "
            f"terminated={stats.termination_fraction:.3f}"
        )
    if fit:
        print(f"fit[{fit.model}]: coefficient={fit.coefficient:.4f} r2={fit.r_squared:.4f}")
    return EXIT_OK


# -- audit ------------------------------------------------------------------------


def _cmd_audit(args) -> int:
    families = tuple(_FAMILY_NAMES[f] for f in args.families.split(",")) if args.families else (
        "erdos_renyi", "disjoint_cliques", "complete_bipartite", "cycle",
    )
    spec = AuditSweepSpec(
        instances=args.instances,
        master_seed=args.seed,
        families=families,
        max_n=args.max_n,
        negate_margins=args.self_test_fault,
    )
    meta = {
        "tool": f"colorsim {__version__}",
        "spec": {
            "instances": spec.instances,
            "master_seed": spec.master_seed,
            "families": list(spec.families),
            "max_n": spec.max_n,
        },
    }
    violations = []
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout

    def lines():
        for line in drift_audit_sweep(spec):
            if not line.get("skipped") and not line["satisfied"]:
                violations.append(line)
            yield line

    try:
        write_jsonl(sink, meta, lines())
    finally:
        if sink is not sys.stdout:
            sink.close()
    if violations:
        for line in violations[:10]:
            print(f"audit: VIOLATION {line['claim']} digest={line['state_digest']}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


# -- compare ------------------------------------------------------------------------


def _cmd_compare(args) -> int:
    try:
        base = _config_from_args(args, seeds=args.seeds)
    except (ValueError, OSError) as exc:
        print(f"compare: {exc}", file=sys.stderr)
        return EXIT_USAGE
    variants = [_VARIANT_NAMES[v] for v in args.variants.split(",")]
    configs = [dataclasses.replace(base, variant=v, config_id="") for v in variants]
    rows = compare_variants(configs, timing=args.timing)
    header = f"{'variant':<16}{'init':<10}{'mean':>12}{'median':>10}{'ci95':>22}{'term':>7}{'ratio':>8}"
    print(header)
    for row in rows:
        ci = f"[{row['ci95_low']:.1f}, {row['ci95_high']:.1f}]"
        print(
            f"{row['variant']:<16}{row['init']:<10}{row['mean_steps']:>12.2f}"
            f"{row['median_steps']:>10.1f}{ci:>22}{row['termination_fraction']:>7.2f}"
            f"{row['mean_ratio_vs_first']:>8.3f}"
        )
    return EXIT_OK


# -- entry ------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="colorsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"colorsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a graph and write its edge list")
    _add_family_args(p_gen)
    p_gen.add_argument("--seed", type=int, dest="graph_seed", default=argparse.SUPPRESS,
                       help="alias for --graph-seed")
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(fn=_cmd_gen)

    p_run = sub.add_parser("run", help="one seeded run of a variant")
    _add_family_args(p_run)
    p_run.add_argument("--variant", default="uniform", choices=sorted(_VARIANT_NAMES))
    p_run.add_argument("--k", type=int)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--cap", type=int, default=1_000_000)
    p_run.add_argument("--init", default="random", choices=["random", "ones", "file"])
    p_run.add_argument("--init-file")
    p_run.add_argument("--trace-out")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a declarative sweep config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seeds", type=int)
    p_sweep.add_argument("--seed", type=int, dest="seed")
    p_sweep.add_argument("--cap", type=int)
    p_sweep.add_argument("--workers", type=int)
    p_sweep.add_argument("--per-run", help="per-run CSV output path")
    p_sweep.add_argument("--aggregate", help="aggregate CSV output path")
    p_sweep.add_argument("--timing", action="store_true", help="measure wall_ns per run")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_audit = sub.add_parser("audit", help="exact drift-inequality sweep")
    p_audit.add_argument("--instances", type=int, default=1000)
    p_audit.add_argument("--max-n", type=int, default=50)
    p_audit.add_argument("--seed", type=int, default=0)
    p_audit.add_argument("--families", help="comma list: er,cliques,bipartite,cycle,complete")
    p_audit.add_argument("--out", help="JSONL output path (default stdout)")
    p_audit.add_argument("--self-test-fault", action="store_true", help=argparse.SUPPRESS)
    p_audit.set_defaults(fn=_cmd_audit)

    p_cmp = sub.add_parser("compare", help="side-by-side variant comparison")
    _add_family_args(p_cmp)
    p_cmp.add_argument("--variants", default="uniform,persistent")
    p_cmp.add_argument("--variant", default="uniform", help=argparse.SUPPRESS)
    p_cmp.add_argument("--k", type=int)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--seeds", type=int, default=200)
    p_cmp.add_argument("--cap", type=int, default=1_000_000)
    p_cmp.add_argument("--init", default="random", choices=["random", "ones", "file"])
    p_cmp.add_argument("--init-file")
    p_cmp.add_argument("--timing", action="store_true")
    p_cmp.set_defaults(fn=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
