"""Seeded ensembles, scaling experiments, and the randomized audit sweep.

Every run inside an ensemble draws from its own PCG64 stream derived from
(master_seed, run_index), so aggregates do not depend on worker count or
completion order. Results flow out as CSV (one row per run, one row per
config) and JSON lines (audit reports, traces); every output starts with a
metadata header sufficient to reproduce it.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Iterator, TextIO

import numpy as np

from ._version import __version__
from . import graph as graphs
from .audit import (
    AuditEntry,
    additive_drift_bound,
    audit_state,
    multiplicative_drift_bound,
    state_digest,
)
from .dynamics import RunResult, TraceRecord, make_rng, run, step_parallel
from .graph import Graph
from .state import ColoringState, init_fixed, init_random

RUN_CSV_FIELDS = (
    "config_id",
    "family",
    "n",
    "m",
    "delta",
    "k",
    "variant",
    "init",
    "seed",
    "steps",
    "terminated",
    "initial_phi_num",
    "final_phi_num",
    "wall_ns",
)

AGGREGATE_CSV_FIELDS = (
    "config_id",
    "family",
    "n",
    "m",
    "delta",
    "k",
    "variant",
    "init",
    "seeds",
    "cap",
    "master_seed",
    "mean_steps",
    "median_steps",
    "std_steps",
    "ci95_low",
    "ci95_high",
    "termination_fraction",
    "min_steps",
    "max_steps",
    "fit_model",
    "fit_coefficient",
    "fit_r2",
)

PERSISTENT_STEP_NOTE = (
    "persistent steps count every color draw, including draws equal to the current color"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One ensemble cell: a graph family, a variant, and run parameters."""

    family: str
    n: int | None = None
    count: int | None = None
    size: int | None = None
    a: int | None = None
    b: int | None = None
    p: float | None = None
    graph_seed: int = 0
    path: str | None = None
    variant: str = "uniform"
    k: int | None = None
    init: str = "random"
    explicit_colors: tuple[int, ...] | None = None
    seeds: int = 200
    master_seed: int = 0
    cap: int = 1_000_000
    workers: int = 1
    config_id: str = ""

    def __post_init__(self):
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")

    def resolved_id(self) -> str:
        if self.config_id:
            return self.config_id
        parts = [self.family]
        for name in ("n", "count", "size", "a", "b", "p"):
            value = getattr(self, name)
            if value is not None:
                parts.append(f"{name}{value}")
        parts.append(self.variant)
        parts.append(self.init)
        if self.k is not None:
            parts.append(f"k{self.k}")
        return "-".join(parts)

    def family_signature(self) -> tuple:
        return (self.family, self.n, self.count, self.size, self.a, self.b, self.p,
                self.graph_seed, self.path)


@dataclass(frozen=True)
class RunRecord:
    """Per-run CSV payload; ``seed`` is the run index under the master seed."""

    seed: int
    steps: int
    terminated: bool
    stalled: bool
    initial_phi_num: int
    final_phi_num: int
    wall_ns: int


@dataclass(frozen=True)
class EnsembleStats:
    seeds: int
    mean_steps: float
    median_steps: float
    std_steps: float
    ci95_low: float
    ci95_high: float
    termination_fraction: float
    min_steps: int
    max_steps: int


@dataclass(frozen=True)
class FitResult:
    """Least squares through the origin of mean steps against one regressor."""

    model: str
    coefficient: float
    r_squared: float
    residuals: tuple[float, ...]


FIT_MODELS = {
    "n_log_delta": lambda n, delta: n * math.log(delta),
    "n_log_n": lambda n, delta: n * math.log(n),
    "n_delta": lambda n, delta: n * delta,
}


def build_graph(config: ExperimentConfig) -> Graph:
    family = config.family
    if family == "complete":
        return graphs.complete(config.n)
    if family == "disjoint_cliques":
        return graphs.disjoint_cliques(config.count, config.size)
    if family == "complete_bipartite":
        return graphs.complete_bipartite(config.a, config.b)
    if family == "cycle":
        return graphs.cycle(config.n)
    if family == "erdos_renyi":
        return graphs.erdos_renyi(config.n, config.p, config.graph_seed)
    if family == "file":
        with open(config.path, encoding="utf-8") as f:
            return graphs.from_edge_list(f.read(), n=config.n)
    raise ValueError(f"unknown graph family {config.family!r}")


def initial_state(graph: Graph, config: ExperimentConfig, rng) -> ColoringState:
    k = config.k if config.k is not None else graph.max_degree + 1
    if config.init == "random":
        return init_random(graph, k, rng)
    if config.init == "all_ones":
        return init_fixed(graph, k, [1] * graph.n)
    if config.init == "explicit":
        if config.explicit_colors is None:
            raise ValueError("explicit init needs explicit_colors")
        return init_fixed(graph, k, config.explicit_colors)
    raise ValueError(f"unknown init {config.init!r}")


def run_one(graph: Graph, config: ExperimentConfig, index: int, timing: bool = False) -> RunRecord:
    rng = make_rng(config.master_seed, index)
    state = initial_state(graph, config, rng)
    start = time.perf_counter_ns() if timing else 0
    result, _ = run(state, config.variant, config.cap, rng, trace=False, seed=index)
    wall = time.perf_counter_ns() - start if timing else 0
    return RunRecord(
        seed=index,
        steps=result.steps,
        terminated=result.terminated,
        stalled=result.stalled,
        initial_phi_num=_phi_num(result.initial_phi, graph),
        final_phi_num=_phi_num(result.final_phi, graph),
        wall_ns=wall,
    )


def run_traced(config: ExperimentConfig, index: int) -> tuple[RunResult, list[TraceRecord]]:
    """One run with its full trace; used by trace sinks and step-size checks."""
    graph = build_graph(config)
    rng = make_rng(config.master_seed, index)
    state = initial_state(graph, config, rng)
    return run(state, config.variant, config.cap, rng, trace=True, seed=index)


def _phi_num(phi: Fraction, graph: Graph) -> int:
    return int(phi * 100 * graph.max_degree)


def _run_chunk(config: ExperimentConfig, start: int, stop: int, timing: bool) -> list[RunRecord]:
    graph = build_graph(config)
    return [run_one(graph, config, i, timing) for i in range(start, stop)]


def run_ensemble(
    config: ExperimentConfig, timing: bool = False
) -> tuple[EnsembleStats, list[RunRecord]]:
    """Execute ``config.seeds`` independent runs and aggregate them.

    The reduction is by run index, never completion order, so the outcome is
    identical for any worker count.
    """
    seeds = config.seeds
    workers = max(1, config.workers)
    if workers == 1 or seeds < 4:
        records = _run_chunk(config, 0, seeds, timing)
    else:
        chunk = max(1, math.ceil(seeds / (workers * 4)))
        spans = [(s, min(s + chunk, seeds)) for s in range(0, seeds, chunk)]
        starts, stops = zip(*spans)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _run_chunk, [config] * len(spans), starts, stops, [timing] * len(spans)
            )
            records = [r for part in parts for r in part]
    return summarize(records), records


def summarize(records: list[RunRecord]) -> EnsembleStats:
    steps = np.array([r.steps for r in records], dtype=np.float64)
    seeds = len(records)
    mean = float(steps.mean())
    std = float(steps.std(ddof=1)) if seeds > 1 else 0.0
    half = 1.96 * std / math.sqrt(seeds) if seeds > 1 else 0.0
    return EnsembleStats(
        seeds=seeds,
        mean_steps=mean,
        median_steps=float(np.median(steps)),
        std_steps=std,
        ci95_low=mean - half,
        ci95_high=mean + half,
        termination_fraction=sum(r.terminated for r in records) / seeds,
        min_steps=int(steps.min()),
        max_steps=int(steps.max()),
    )


def coupon_reference(n: int) -> Fraction:
    """Expected rounds of the classical collect-all-n process: n times H_n."""
    if n < 1:
        raise ValueError("coupon_reference needs n >= 1")
    return n * sum(Fraction(1, i) for i in range(1, n + 1))


def scaling_fit(points: Iterable[tuple[int, int, float]], model: str) -> FitResult:
    """Fit mean steps to coefficient * regressor, through the origin.

    ``points`` are (n, max_degree, mean_steps) triples; the regressor is one
    of the registered growth models. R squared is computed against the fitted
    single-coefficient model.
    """
    if model not in FIT_MODELS:
        raise ValueError(f"unknown fit model {model!r}; choose from {sorted(FIT_MODELS)}")
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("scaling_fit needs at least 3 points")
    reg = FIT_MODELS[model]
    xs = []
    ys = []
    for n, delta, mean_steps in pts:
        x = reg(n, delta)
        if x == 0:
            raise ValueError(f"degenerate regressor at point (n={n}, delta={delta})")
        xs.append(x)
        ys.append(mean_steps)
    x = np.array(xs)
    y = np.array(ys)
    a = float((x * y).sum() / (x * x).sum())
    residuals = y - a * x
    ss_res = float((residuals**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-12 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return FitResult(
        model=model,
        coefficient=a,
        r_squared=r2,
        residuals=tuple(float(r) for r in residuals),
    )


# -- parallel-variant survival ------------------------------------------------


@dataclass(frozen=True)
class SurvivalRecord:
    seed: int
    rounds: int
    terminated: bool
    min_conflicted: int
    ever_below: bool


@dataclass(frozen=True)
class SurvivalStats:
    seeds: int
    terminations: int
    min_conflicted_overall: int
    runs_ever_below: int
    median_rounds: float


def parallel_survival(
    config: ExperimentConfig, epsilon_fraction: float
) -> tuple[SurvivalStats, list[SurvivalRecord]]:
    """Track how low the conflicted count gets under simultaneous recoloring.

    Per run: rounds executed, the minimum conflicted count over rounds t >= 1,
    and whether it ever dropped to epsilon_fraction * n. Runs stop at
    termination or at ``config.cap`` rounds.
    """
    if config.variant != "parallel":
        raise ValueError("parallel_survival needs variant='parallel'")
    graph = build_graph(config)
    threshold = epsilon_fraction * graph.n
    records: list[SurvivalRecord] = []
    for index in range(config.seeds):
        rng = make_rng(config.master_seed, index)
        state = initial_state(graph, config, rng)
        min_conflicted = graph.n + 1
        ever_below = False
        rounds = 0
        while state.conflicted_count > 0 and rounds < config.cap:
            step_parallel(state, rng)
            rounds += 1
            x = state.conflicted_count
            min_conflicted = min(min_conflicted, x)
            if x <= threshold:
                ever_below = True
        records.append(
            SurvivalRecord(
                seed=index,
                rounds=rounds,
                terminated=state.conflicted_count == 0,
                min_conflicted=min_conflicted,
                ever_below=ever_below,
            )
        )
    stats = SurvivalStats(
        seeds=len(records),
        terminations=sum(r.terminated for r in records),
        min_conflicted_overall=min(r.min_conflicted for r in records),
        runs_ever_below=sum(r.ever_below for r in records),
        median_rounds=float(np.median([r.rounds for r in records])),
    )
    return stats, records


# -- variant comparison --------------------------------------------------------


def compare_variants(configs: list[ExperimentConfig], timing: bool = False) -> list[dict]:
    """Side-by-side ensemble stats for configs differing only in variant/init.

    The first config is the baseline; each row reports its mean divided by
    the baseline mean.
    """
    if not configs:
        return []
    signature = configs[0].family_signature()
    for cfg in configs[1:]:
        if cfg.family_signature() != signature:
            raise ValueError("compare_variants configs must share the graph family")
    rows = []
    base_mean: float | None = None
    for cfg in configs:
        stats, _ = run_ensemble(cfg, timing=timing)
        if base_mean is None:
            base_mean = stats.mean_steps
        ratio = stats.mean_steps / base_mean if base_mean else float("nan")
        rows.append(
            {
                "config_id": cfg.resolved_id(),
                "variant": cfg.variant,
                "init": cfg.init,
                "k": cfg.k,
                "mean_steps": stats.mean_steps,
                "median_steps": stats.median_steps,
                "std_steps": stats.std_steps,
                "ci95_low": stats.ci95_low,
                "ci95_high": stats.ci95_high,
                "termination_fraction": stats.termination_fraction,
                "mean_ratio_vs_first": ratio,
            }
        )
    return rows


def theorem_step_budget(n: int, delta: int) -> float:
    """Loose two-phase budget implied by the proven decay and endgame drifts.

    Decay phase: multiplicative drift 1/(1000 n) from at most n*delta down to
    n/delta. Endgame: additive drift 1/(delta+1) on at most 2n/delta
    monochromatic edges. Empirical means must come in far below this.
    """
    if delta < 1:
        return 0.0
    decay = multiplicative_drift_bound(n * delta, n / delta, 1.0 / (1000 * n))
    endgame = additive_drift_bound(2 * n / delta, 1.0 / (delta + 1))
    return decay + endgame


# -- randomized audit sweep ----------------------------------------------------


@dataclass(frozen=True)
class AuditSweepSpec:
    """Deterministic generator spec for random (graph, coloring) audits."""

    instances: int = 1000
    master_seed: int = 0
    families: tuple[str, ...] = (
        "erdos_renyi",
        "disjoint_cliques",
        "complete_bipartite",
        "cycle",
    )
    er_n_range: tuple[int, int] = (5, 50)
    er_p_values: tuple[float, ...] = (0.1, 0.3, 0.7)
    max_n: int = 200
    outcome_budget: int = 100_000
    negate_margins: bool = False  # test-only fault hook for the violation path


def audit_instance(spec: AuditSweepSpec, index: int) -> tuple[ColoringState, bool]:
    """Build audit instance ``index``: a graph plus a fresh random coloring.

    Returns the state and whether the bipartite refinement applies. Fully
    determined by (spec, index).
    """
    rng = make_rng(spec.master_seed, index)
    family = spec.families[index % len(spec.families)]
    bipartite = False
    if family == "erdos_renyi":
        lo, hi = spec.er_n_range
        hi = min(hi, spec.max_n)
        n = lo + int(rng.integers(hi - lo + 1))
        p = spec.er_p_values[int(rng.integers(len(spec.er_p_values)))]
        g = graphs.erdos_renyi(n, p, int(rng.integers(2**63)))
    elif family == "disjoint_cliques":
        count = 1 + int(rng.integers(3))
        size = 2 + int(rng.integers(9))
        g = graphs.disjoint_cliques(count, size)
    elif family == "complete_bipartite":
        a = 1 + int(rng.integers(10))
        b = 1 + int(rng.integers(10))
        g = graphs.complete_bipartite(a, b)
        bipartite = True
    elif family == "cycle":
        n = 3 + int(rng.integers(min(48, spec.max_n - 2)))
        g = graphs.cycle(n)
    elif family == "complete":
        n = 2 + int(rng.integers(11))
        g = graphs.complete(n)
        bipartite = False
    else:
        raise ValueError(f"unknown audit family {family!r}")
    k = g.max_degree + 1
    state = init_random(g, k, rng)
    return state, bipartite


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _entry_line(entry: AuditEntry, digest: str, negate: bool) -> dict:
    margin = -entry.margin if negate else entry.margin
    line = {
        "claim": entry.claim,
        "lhs": _frac(entry.lhs),
        "rhs": _frac(entry.rhs),
        "margin": _frac(margin),
        "satisfied": margin >= 0,
        "state_digest": digest,
    }
    line.update(entry.detail)
    return line


def drift_audit_sweep(spec: AuditSweepSpec) -> Iterator[dict]:
    """Audit ``spec.instances`` random states, yielding one JSON-able line per check.

    Proper colorings skip the decay check with an explicit marker; instances
    whose enumeration would exceed the outcome budget are skipped whole.
    Every line carries the state digest needed to replay it.
    """
    for index in range(spec.instances):
        state, bipartite = audit_instance(spec, index)
        digest = state_digest(state)
        budget = state.k * state.conflicted_count
        if budget > spec.outcome_budget:
            yield {
                "claim": "all",
                "skipped": True,
                "reason": f"enumeration budget exceeded ({budget} outcomes)",
                "state_digest": digest,
            }
            continue
        if state.conflicted_count == 0:
            for entry in audit_state(state, bipartite=bipartite):
                yield _entry_line(entry, digest, spec.negate_margins)
            yield {
                "claim": "multiplicative_decay",
                "skipped": True,
                "reason": "proper coloring",
                "state_digest": digest,
            }
            continue
        for entry in audit_state(state, bipartite=bipartite):
            yield _entry_line(entry, digest, spec.negate_margins)


def replay_audit(spec: AuditSweepSpec, digest: str) -> list[dict]:
    """Regenerate the report lines of the instance with the given digest."""
    for index in range(spec.instances):
        state, bipartite = audit_instance(spec, index)
        if state_digest(state) != digest:
            continue
        lines = []
        if state.conflicted_count == 0:
            lines.extend(
                _entry_line(e, digest, spec.negate_margins)
                for e in audit_state(state, bipartite=bipartite)
            )
            lines.append(
                {
                    "claim": "multiplicative_decay",
                    "skipped": True,
                    "reason": "proper coloring",
                    "state_digest": digest,
                }
            )
        else:
            lines.extend(
                _entry_line(e, digest, spec.negate_margins)
                for e in audit_state(state, bipartite=bipartite)
            )
        return lines
    return []


# -- output writers -------------------------------------------------------------


def public_config(config: ExperimentConfig) -> dict:
    # workers shape execution only, never results; keep them out so reruns
    # with different pool widths stay byte-identical.
    payload = asdict(config)
    payload.pop("workers")
    payload["config_id"] = config.resolved_id()
    return payload


def metadata_lines(configs: list[ExperimentConfig]) -> list[str]:
    lines = [
        f"# colorsim {__version__}",
        "# rng: numpy PCG64 via SeedSequence(master_seed, spawn_key=(run_index,))",
        f"# note: {PERSISTENT_STEP_NOTE}",
        f"# config: {json.dumps([public_config(c) for c in configs], sort_keys=True)}",
    ]
    return lines


def run_rows(config: ExperimentConfig, graph: Graph, records: list[RunRecord]) -> list[dict]:
    base = {
        "config_id": config.resolved_id(),
        "family": config.family,
        "n": graph.n,
        "m": graph.m,
        "delta": graph.max_degree,
        "k": config.k if config.k is not None else graph.max_degree + 1,
        "variant": config.variant,
        "init": config.init,
    }
    rows = []
    for r in records:
        row = dict(base)
        row.update(
            seed=r.seed,
            steps=r.steps,
            terminated="true" if r.terminated else "false",
            initial_phi_num=r.initial_phi_num,
            final_phi_num=r.final_phi_num,
            wall_ns=r.wall_ns,
        )
        rows.append(row)
    return rows


def write_runs_csv(out: TextIO, configs: list[ExperimentConfig], rows: list[dict]) -> None:
    for line in metadata_lines(configs):
        out.write(line + "\n")
    out.write(",".join(RUN_CSV_FIELDS) + "\n")
    for row in rows:
        out.write(",".join(str(row[f]) for f in RUN_CSV_FIELDS) + "\n")


def aggregate_row(
    config: ExperimentConfig,
    graph: Graph,
    stats: EnsembleStats,
    fit: FitResult | None = None,
) -> dict:
    return {
        "config_id": config.resolved_id(),
        "family": config.family,
        "n": graph.n,
        "m": graph.m,
        "delta": graph.max_degree,
        "k": config.k if config.k is not None else graph.max_degree + 1,
        "variant": config.variant,
        "init": config.init,
        "seeds": stats.seeds,
        "cap": config.cap,
        "master_seed": config.master_seed,
        "mean_steps": repr(stats.mean_steps),
        "median_steps": repr(stats.median_steps),
        "std_steps": repr(stats.std_steps),
        "ci95_low": repr(stats.ci95_low),
        "ci95_high": repr(stats.ci95_high),
        "termination_fraction": repr(stats.termination_fraction),
        "min_steps": stats.min_steps,
        "max_steps": stats.max_steps,
        "fit_model": fit.model if fit else "",
        "fit_coefficient": repr(fit.coefficient) if fit else "",
        "fit_r2": repr(fit.r_squared) if fit else "",
    }


def write_aggregate_csv(out: TextIO, configs: list[ExperimentConfig], rows: list[dict]) -> None:
    for line in metadata_lines(configs):
        out.write(line + "\n")
    out.write(",".join(AGGREGATE_CSV_FIELDS) + "\n")
    for row in rows:
        out.write(",".join(str(row[f]) for f in AGGREGATE_CSV_FIELDS) + "\n")


def write_jsonl(out: TextIO, meta: dict, lines: Iterable[dict]) -> int:
    """Write a metadata line then one JSON object per line; returns line count."""
    out.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
    count = 0
    for line in lines:
        out.write(json.dumps(line, sort_keys=True) + "\n")
        count += 1
    return count


def trace_lines(records: list[TraceRecord]) -> Iterator[dict]:
    for r in records:
        yield {
            "t": r.t,
            "vertices": list(r.vertices),
            "colors": list(r.colors),
            "mono_edges": r.mono_edge_count,
            "iso_edges": r.iso_edge_count,
            "iso_proper_edges": r.e_ip,
            "phi_num": r.phi_num,
        }
