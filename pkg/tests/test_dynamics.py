from fractions import Fraction

import pytest

from colorsim import (
    ProperColoringError,
    complete,
    cycle,
    disjoint_cliques,
    erdos_renyi,
    from_edge_list,
    init_fixed,
    init_random,
    make_rng,
    run,
    selection_distribution,
    step_component_view,
    step_parallel,
    step_persistent,
    step_uniform,
)


def conflicted_pair():
    return init_fixed(complete(2), 2, [1, 1])


class TestStepUniform:
    def test_fix_probability_one_half(self):
        rng = make_rng(42, 0)
        trials = 100_000
        fixed = 0
        for _ in range(trials):
            s = conflicted_pair()
            step_uniform(s, rng)
            fixed += s.is_proper()
        assert fixed / trials == pytest.approx(0.5, rel=0.01)

    def test_selection_uniform_over_pair(self):
        s = init_fixed(from_edge_list("0 1\n1 2"), 3, [2, 1, 1])
        dist = selection_distribution(s, "uniform")
        assert dist == {1: Fraction(1, 2), 2: Fraction(1, 2)}

    def test_rejects_proper_coloring(self):
        s = init_fixed(complete(2), 2, [1, 2])
        with pytest.raises(ProperColoringError):
            step_uniform(s, make_rng(0, 0))

    def test_two_draws_vertex_then_color(self):
        s = init_fixed(complete(3), 3, [1, 1, 1])
        out = step_uniform(s, make_rng(5, 0))
        # replaying the same stream manually must reproduce the outcome
        rng = make_rng(5, 0)
        v = int(rng.integers(3))  # the dense conflicted array holds (0, 1, 2)
        c = int(rng.integers(1, 4))
        assert out.vertices == (v,) and out.colors == (c,)


class TestStepComponentView:
    def test_selection_matches_uniform_exactly(self):
        # equal laws on every state: (|V(C)|/total) * (1/|V(C)|) = 1/total
        fixtures = [
            init_fixed(from_edge_list("0 1\n1 2"), 3, [1, 1, 2]),
            init_fixed(disjoint_cliques(2, 3), 3, [1, 1, 1, 2, 2, 2]),
            init_fixed(cycle(5), 3, [1, 1, 2, 2, 3]),
        ]
        g = erdos_renyi(18, 0.25, 3)
        rng = make_rng(3, 0)
        for _ in range(20):
            s = init_random(g, g.max_degree + 1, rng)
            if not s.is_proper():
                fixtures.append(s)
        for s in fixtures:
            assert selection_distribution(s, "component_view") == selection_distribution(s, "uniform")

    def test_single_component_reduces_to_uniform(self):
        s = init_fixed(complete(4), 4, [1, 1, 1, 1])
        dist = selection_distribution(s, "component_view")
        assert set(dist.values()) == {Fraction(1, 4)}

    def test_component_sizes_two_and_three(self):
        # (3/5)*(1/3) = (2/5)*(1/2) = 1/5 for every conflicted vertex
        g = from_edge_list("0 1\n0 2\n1 2\n3 4")
        s = init_fixed(g, 3, [1, 1, 1, 2, 2])
        view = s.monochromatic_components()
        assert sorted(c.size for c in view.components) == [2, 3]
        dist = selection_distribution(s, "component_view")
        assert dist == {v: Fraction(1, 5) for v in range(5)}

    def test_step_applies_a_recolor(self):
        s = init_fixed(disjoint_cliques(2, 3), 3, [1, 1, 1, 2, 2, 2])
        out = step_component_view(s, make_rng(1, 0))
        assert len(out.vertices) == 1 and s.color_of(out.vertices[0]) == out.colors[0]


class TestStepPersistent:
    def test_expected_draws_geometric(self):
        rng = make_rng(77, 0)
        trials = 100_000
        draws = 0
        for _ in range(trials):
            s = conflicted_pair()
            out = step_persistent(s, rng)
            draws += out.draws
            assert s.is_proper()
        assert draws / trials == pytest.approx(2.0, rel=0.02)

    def test_full_palette_always_terminates(self):
        g = erdos_renyi(20, 0.4, 6)
        k = g.max_degree + 1
        rng = make_rng(6, 0)
        for _ in range(50):
            s = init_random(g, k, rng)
            while not s.is_proper():
                out = step_persistent(s, rng)
                assert not out.stalled

    def test_stall_when_neighborhood_covers_palette(self):
        # triangle with colors (1, 2, 1) at k=2: either conflicted vertex sees
        # both colors, so no draw can ever be accepted
        s = init_fixed(complete(3), 2, [1, 2, 1])
        out = step_persistent(s, make_rng(0, 0), draw_cap=100)
        assert out.stalled and out.draws == 100 and out.colors == ()
        assert s.colors == (1, 2, 1)

    def test_budget_exhaustion_is_not_a_stall(self):
        s = init_fixed(complete(3), 2, [1, 2, 1])
        out = step_persistent(s, make_rng(0, 0), draw_cap=100, draw_budget=10)
        assert not out.stalled and out.draws == 10


class TestStepParallel:
    def test_k2_exact_enumeration(self):
        # the four equally likely draw pairs: (1,1),(1,2),(2,1),(2,2)
        proper = 0
        for a in (1, 2):
            for b in (1, 2):
                s = conflicted_pair()
                s.apply_batch((0, 1), (a, b))
                proper += s.is_proper()
        assert proper == 2

    def test_whole_component_recolored(self):
        s = init_fixed(disjoint_cliques(2, 3), 3, [1, 1, 1, 2, 3, 2])
        out = step_parallel(s, make_rng(2, 0))
        assert out.vertices == (0, 1, 2, 3, 5)

    def test_frozen_membership(self):
        # vertices proper before the round stay untouched even if the round
        # creates new conflicts around them
        g = cycle(6)
        rng = make_rng(9, 0)
        for _ in range(30):
            s = init_random(g, 3, rng)
            if s.is_proper():
                continue
            before = s.colors
            frozen = s.conflicted_vertices()
            step_parallel(s, rng)
            for v in range(g.n):
                if v not in frozen:
                    assert s.color_of(v) == before[v]

    def test_matches_oracle_after_rounds(self):
        s = init_fixed(complete(20), 20, [1] * 20)
        rng = make_rng(4, 0)
        for _ in range(50):
            if s.is_proper():
                break
            step_parallel(s, rng)
            assert s.snapshot() == s.recompute_all()


class TestRun:
    def test_edgeless_graph(self):
        g = erdos_renyi(5, 0.0, 0)
        s = init_random(g, 3, make_rng(0, 0))
        result, _ = run(s, "uniform", 1000, make_rng(0, 1))
        assert result.steps == 0 and result.terminated

    def test_proper_initial_coloring(self):
        s = init_fixed(cycle(4), 3, [1, 2, 1, 2])
        result, _ = run(s, "uniform", 1000, make_rng(0, 0))
        assert result.steps == 0 and result.terminated and result.final_phi == 0

    def test_complete_8_always_terminates(self):
        g = complete(8)
        for i in range(1000):
            rng = make_rng(1, i)
            s = init_random(g, 8, rng)
            result, _ = run(s, "uniform", 10**6, rng, seed=i)
            assert result.terminated and result.final_phi == 0

    def test_absorption(self):
        g = complete(6)
        rng = make_rng(3, 0)
        s = init_random(g, 6, rng)
        run(s, "uniform", 10**6, rng)
        again, _ = run(s, "uniform", 10**6, rng)
        assert again.steps == 0 and again.terminated

    def test_reproducible_traces(self):
        g = erdos_renyi(15, 0.3, 12)
        k = g.max_degree + 1

        def one():
            rng = make_rng(12, 5)
            s = init_random(g, k, rng)
            return run(s, "component_view", 10**5, rng, trace=True, seed=5)

        r1, t1 = one()
        r2, t2 = one()
        assert r1 == r2 and t1 == t2

    def test_trace_consistency(self):
        g = erdos_renyi(12, 0.35, 7)
        k = g.max_degree + 1
        rng = make_rng(7, 0)
        s = init_random(g, k, rng)
        result, trace = run(s, "uniform", 10**5, rng, trace=True)
        assert trace[0].t == 0
        replay = init_fixed(g, k, list(init_random(g, k, make_rng(7, 0)).colors))
        for rec in trace[1:]:
            for v, c in zip(rec.vertices, rec.colors):
                replay.recolor(v, c)
            snap = replay.snapshot()
            assert (snap.mono_edge_count, snap.iso_edge_count, snap.e_ip, snap.phi_num) == (
                rec.mono_edge_count,
                rec.iso_edge_count,
                rec.e_ip,
                rec.phi_num,
            )

    def test_cap_exhaustion(self):
        s = init_fixed(complete(30), 30, [1] * 30)
        result, _ = run(s, "parallel", 50, make_rng(0, 0))
        assert not result.terminated and result.steps == 50 and not result.stalled

    def test_persistent_counts_all_draws_and_respects_cap(self):
        g = disjoint_cliques(4, 6)
        rng = make_rng(8, 0)
        s = init_fixed(g, 6, [1] * g.n)
        result, _ = run(s, "persistent", 40, rng)
        if not result.terminated:
            assert result.steps == 40

    def test_persistent_stall_reported(self):
        s = init_fixed(complete(3), 2, [1, 2, 1])
        result, _ = run(s, "persistent", 10**4, make_rng(0, 0), persistent_draw_cap=50)
        assert result.stalled and not result.terminated and result.steps == 50

    def test_rejects_unknown_variant(self):
        s = conflicted_pair()
        with pytest.raises(ValueError):
            run(s, "other", 10, make_rng(0, 0))
