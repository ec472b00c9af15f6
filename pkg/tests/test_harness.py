import io
import json
import math
from fractions import Fraction

import pytest

from colorsim import (
    AuditSweepSpec,
    ExperimentConfig,
    compare_variants,
    coupon_reference,
    drift_audit_sweep,
    parallel_survival,
    run_ensemble,
    scaling_fit,
    theorem_step_budget,
)
from colorsim.harness import (
    audit_instance,
    build_graph,
    replay_audit,
    run_rows,
    run_traced,
    trace_lines,
    write_aggregate_csv,
    write_jsonl,
    write_runs_csv,
    aggregate_row,
)
from colorsim.audit import state_digest


class TestCouponReference:
    def test_exact_values(self):
        assert coupon_reference(1) == 1
        assert coupon_reference(4) == Fraction(25, 3)
        assert float(coupon_reference(16)) == pytest.approx(54.0917, abs=0.001)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            coupon_reference(0)


class TestScalingFit:
    def test_recovers_exact_law(self):
        pts = [(n, 8, 2.5 * n * math.log(8)) for n in (64, 128, 256, 512)]
        fit = scaling_fit(pts, "n_log_delta")
        assert fit.coefficient == pytest.approx(2.5)
        assert fit.r_squared == pytest.approx(1.0)
        assert all(abs(r) < 1e-9 for r in fit.residuals)

    def test_duplicated_single_scale_equals_ratio(self):
        pts = [(100, 4, 700.0)] * 3
        fit = scaling_fit(pts, "n_delta")
        assert fit.coefficient == pytest.approx(700.0 / 400.0)

    def test_degenerate_regressor_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            scaling_fit([(10, 1, 5.0), (20, 1, 9.0), (30, 1, 14.0)], "n_log_delta")

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            scaling_fit([(10, 2, 5.0)], "n_log_n")

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            scaling_fit([(10, 2, 5.0)] * 3, "cubic")


class TestRunEnsemble:
    def test_edgeless_mean_zero(self):
        cfg = ExperimentConfig(family="erdos_renyi", n=6, p=0.0, k=2, seeds=10, master_seed=1)
        stats, records = run_ensemble(cfg)
        assert stats.mean_steps == 0 and stats.termination_fraction == 1.0

    def test_deterministic_across_calls(self):
        cfg = ExperimentConfig(family="complete", n=8, k=8, seeds=25, master_seed=3)
        a = run_ensemble(cfg)
        b = run_ensemble(cfg)
        assert a == b

    def test_worker_count_does_not_change_results(self):
        base = ExperimentConfig(family="complete", n=8, k=8, seeds=16, master_seed=5, workers=1)
        wide = ExperimentConfig(family="complete", n=8, k=8, seeds=16, master_seed=5, workers=3)
        assert run_ensemble(base)[1] == run_ensemble(wide)[1]

    def test_termination_fraction_on_small_complete(self):
        cfg = ExperimentConfig(family="complete", n=8, k=8, seeds=50, master_seed=2, cap=10**6)
        stats, _ = run_ensemble(cfg)
        assert stats.termination_fraction == 1.0
        assert stats.ci95_low <= stats.mean_steps <= stats.ci95_high

    def test_wall_ns_zero_without_timing(self):
        cfg = ExperimentConfig(family="complete", n=6, k=6, seeds=5, master_seed=0)
        _, records = run_ensemble(cfg)
        assert all(r.wall_ns == 0 for r in records)
        _, timed = run_ensemble(cfg, timing=True)
        assert any(r.wall_ns > 0 for r in timed)

    def test_validates_config(self):
        with pytest.raises(ValueError):
            ExperimentConfig(family="complete", n=4, seeds=0)
        with pytest.raises(ValueError):
            ExperimentConfig(family="complete", n=4, cap=0)

    def test_mean_below_theorem_budget(self):
        cfg = ExperimentConfig(family="disjoint_cliques", count=8, size=8, seeds=50, master_seed=4)
        g = build_graph(cfg)
        stats, _ = run_ensemble(cfg)
        assert stats.mean_steps <= theorem_step_budget(g.n, g.max_degree)


class TestParallelSurvival:
    def test_k2_terminates_quickly(self):
        cfg = ExperimentConfig(family="complete", n=2, k=2, variant="parallel",
                               seeds=50, master_seed=6, cap=10**6)
        stats, records = parallel_survival(cfg, 0.1)
        assert stats.terminations == 50
        assert stats.median_rounds <= 16

    def test_requires_parallel_variant(self):
        cfg = ExperimentConfig(family="complete", n=4, seeds=2)
        with pytest.raises(ValueError):
            parallel_survival(cfg, 0.1)

    def test_record_shape(self):
        cfg = ExperimentConfig(family="complete", n=6, k=6, variant="parallel",
                               seeds=10, master_seed=7, cap=10**5)
        stats, records = parallel_survival(cfg, 0.5)
        assert len(records) == 10
        for r in records:
            assert r.terminated or r.rounds == cfg.cap
            assert r.min_conflicted >= 0


class TestCompareVariants:
    def test_self_comparison_ratio_one(self):
        cfg = ExperimentConfig(family="complete", n=8, k=8, seeds=40, master_seed=9)
        rows = compare_variants([cfg, cfg])
        assert rows[0]["mean_ratio_vs_first"] == 1.0
        assert rows[1]["mean_ratio_vs_first"] == 1.0

    def test_rejects_mixed_families(self):
        a = ExperimentConfig(family="complete", n=8, seeds=2)
        b = ExperimentConfig(family="cycle", n=8, seeds=2)
        with pytest.raises(ValueError):
            compare_variants([a, b])

    def test_adversarial_contrast_rows(self):
        configs = [
            ExperimentConfig(family="disjoint_cliques", count=4, size=8, variant=v,
                             init="all_ones", seeds=30, master_seed=10)
            for v in ("uniform", "persistent")
        ]
        rows = compare_variants(configs)
        assert [r["variant"] for r in rows] == ["uniform", "persistent"]
        assert all(r["termination_fraction"] == 1.0 for r in rows)


class TestAuditSweep:
    def test_small_sweep_no_violations(self):
        spec = AuditSweepSpec(instances=40, master_seed=17, max_n=30)
        lines = list(drift_audit_sweep(spec))
        assert lines
        assert all(line["satisfied"] for line in lines if not line.get("skipped"))

    def test_proper_colorings_marked_skipped(self):
        # plenty of tiny cycles come out properly colored at random
        spec = AuditSweepSpec(instances=120, master_seed=2, families=("cycle",), max_n=8)
        lines = list(drift_audit_sweep(spec))
        markers = [l for l in lines if l.get("skipped")]
        assert markers and all(m["reason"] == "proper coloring" for m in markers)

    def test_rationals_rendered_exactly(self):
        spec = AuditSweepSpec(instances=10, master_seed=3)
        for line in drift_audit_sweep(spec):
            if line.get("skipped"):
                continue
            for key in ("lhs", "rhs", "margin"):
                num, den = line[key].split("/")
                int(num), int(den)

    def test_replay_by_digest(self):
        spec = AuditSweepSpec(instances=15, master_seed=4)
        lines = list(drift_audit_sweep(spec))
        target = next(l for l in lines if not l.get("skipped"))
        digest = target["state_digest"]
        replayed = replay_audit(spec, digest)
        assert [l for l in lines if l["state_digest"] == digest] == replayed

    def test_instances_deterministic(self):
        spec = AuditSweepSpec(instances=6, master_seed=5)
        a = [state_digest(audit_instance(spec, i)[0]) for i in range(6)]
        b = [state_digest(audit_instance(spec, i)[0]) for i in range(6)]
        assert a == b

    def test_fault_hook_flips_margins(self):
        spec = AuditSweepSpec(instances=20, master_seed=6, negate_margins=True)
        lines = [l for l in drift_audit_sweep(spec) if not l.get("skipped")]
        assert any(not l["satisfied"] for l in lines)


class TestWriters:
    def _ensemble(self):
        cfg = ExperimentConfig(family="complete", n=6, k=6, seeds=8, master_seed=12)
        graph = build_graph(cfg)
        stats, records = run_ensemble(cfg)
        return cfg, graph, stats, records

    def test_runs_csv_layout(self):
        cfg, graph, stats, records = self._ensemble()
        buf = io.StringIO()
        write_runs_csv(buf, [cfg], run_rows(cfg, graph, records))
        text = buf.getvalue()
        lines = text.splitlines()
        assert lines[0].startswith("# colorsim ")
        header_idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
        assert lines[header_idx].split(",")[0] == "config_id"
        assert len(lines) == header_idx + 1 + len(records)
        # metadata excludes worker width but carries the master seed
        meta = next(l for l in lines if l.startswith("# config: "))
        payload = json.loads(meta.split("# config: ", 1)[1])
        assert payload[0]["master_seed"] == 12
        assert "workers" not in payload[0]

    def test_runs_csv_deterministic_bytes(self):
        cfg, graph, stats, records = self._ensemble()
        bufs = []
        for _ in range(2):
            buf = io.StringIO()
            write_runs_csv(buf, [cfg], run_rows(cfg, graph, records))
            bufs.append(buf.getvalue())
        assert bufs[0] == bufs[1]

    def test_aggregate_csv(self):
        cfg, graph, stats, records = self._ensemble()
        buf = io.StringIO()
        write_aggregate_csv(buf, [cfg], [aggregate_row(cfg, graph, stats)])
        body = [l for l in buf.getvalue().splitlines() if not l.startswith("#")]
        assert body[0].split(",")[0] == "config_id"
        assert len(body) == 2

    def test_jsonl_meta_first(self):
        cfg = ExperimentConfig(family="complete", n=5, k=5, seeds=1, master_seed=1)
        result, trace = run_traced(cfg, 0)
        buf = io.StringIO()
        count = write_jsonl(buf, {"kind": "trace"}, trace_lines(trace))
        lines = buf.getvalue().splitlines()
        assert json.loads(lines[0])["meta"] == {"kind": "trace"}
        assert count == len(trace)
        last = json.loads(lines[-1])
        assert result.terminated and last["phi_num"] == 0
