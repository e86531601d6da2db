"""Tests for the coordinate-descent probability assignment."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from usparse.backbone import BackboneGraph, build_backbone
from usparse.gdb import (
    Rule,
    SparsifierState,
    apply_step,
    binomial_prefix_sum,
    cut_all_step,
    cut_rule_coefficients,
    cut_step,
    degree_normalizer,
    degree_objective,
    degree_objective_between,
    degree_step,
    descend,
    gdb_run,
    sampled_cut_objective,
    sweep,
)
from usparse.graph import DiscrepancyMode, UncertainGraph, derive_rng, generate_synthetic


def full_backbone(g):
    return BackboneGraph(g.n, tuple((u, v) for u, v, _ in g.edges), source="spanning")


class TestRule:
    def test_parse_round_trip(self):
        for text in ("degree-abs", "degree-rel", "cut-k:3", "cut-all"):
            assert str(Rule.parse(text)) == text

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            Rule.parse("cut-k:zero")
        with pytest.raises(ValueError):
            Rule.parse("banana")

    def test_mode(self):
        assert Rule.parse("degree-rel").mode is DiscrepancyMode.RELATIVE
        assert Rule.parse("cut-k:2").mode is DiscrepancyMode.ABSOLUTE


class TestNormalizer:
    def test_absolute_is_one(self):
        g = UncertainGraph(3, [(0, 1, 0.5)])
        assert degree_normalizer(g, 0, DiscrepancyMode.ABSOLUTE) == 1.0

    def test_relative_is_expected_degree(self):
        g = UncertainGraph(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 0.5)])
        assert degree_normalizer(g, 0, DiscrepancyMode.RELATIVE) == pytest.approx(2.0)

    def test_relative_isolated_falls_back_to_one(self):
        g = UncertainGraph(3, [(0, 1, 0.5)])
        assert degree_normalizer(g, 2, DiscrepancyMode.RELATIVE) == 1.0


class TestDegreeStep:
    def test_worked_single_edge_update(self):
        # 0.2 + (0.6 + 0)/2 = 0.5
        assert 0.2 + degree_step(0.6, 0.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_zero_discrepancies_fixed_point(self):
        assert degree_step(0.0, 0.0) == 0.0

    def test_antisymmetric_discrepancies_cancel(self):
        assert degree_step(0.4, -0.4, 1.0, 1.0) == 0.0

    @given(
        st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 10), st.floats(0.01, 10)
    )
    def test_step_is_weighted_average(self, du, dv, nu, nv):
        stp = degree_step(du, dv, nu, nv)
        lo, hi = min(du, dv), max(du, dv)
        assert lo - 1e-9 <= stp <= hi + 1e-9


class TestBinomialPrefixSum:
    def test_examples(self):
        assert binomial_prefix_sum(5, 2) == 16  # 1 + 5 + 10
        assert binomial_prefix_sum(7, -1) == 0
        assert binomial_prefix_sum(4, 9) == 16  # saturates at 2^4
        assert binomial_prefix_sum(6, 0) == 1

    @given(st.integers(0, 20), st.integers(-3, 25))
    def test_against_pascal_triangle(self, n, k):
        # independent oracle: build Pascal's triangle row by row
        row = [1]
        for _ in range(n):
            row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
        expected = 0 if k < 0 else sum(row[: min(k, n) + 1])
        assert binomial_prefix_sum(n, k) == expected


class TestCutStep:
    def test_k1_reduces_to_degree_rule_exactly(self):
        rng = derive_rng(0)
        for _ in range(200):
            du, dv, gap = rng.normal(size=3)
            n = int(rng.integers(4, 50))
            assert cut_step(du, dv, gap, n, 1) == degree_step(du, dv, 1.0, 1.0)

    def test_k2_closed_form(self):
        # (n-2)(du+dv) + 4*gap, all over 2n-2
        rng = derive_rng(1)
        for _ in range(200):
            du, dv, gap = rng.normal(size=3)
            n = int(rng.integers(4, 60))
            expected = ((n - 2) * (du + dv) + 4 * gap) / (2 * n - 2)
            assert cut_step(du, dv, gap, n, 2) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_matches_exact_rational_oracle(self, k):
        def oracle(du, dv, gap, n, k):
            def bsum(n_, k_):
                if k_ < 0:
                    return 0
                return sum(math.comb(n_, i) for i in range(min(k_, n_) + 1))

            num = Fraction(bsum(n - 3, k - 1)) * Fraction(du + dv) + Fraction(
                4 * bsum(n - 4, k - 2)
            ) * Fraction(gap)
            return num / Fraction(2 * bsum(n - 2, k - 1))

        rng = derive_rng(k)
        for _ in range(100):
            du, dv, gap = (float(x) for x in rng.normal(size=3))
            n = int(rng.integers(5, 40))
            got = cut_step(du, dv, gap, n, k)
            assert got == pytest.approx(float(oracle(du, dv, gap, n, k)), abs=1e-12)

    def test_small_n_rejected_for_k2(self):
        with pytest.raises(ValueError, match="at least 4"):
            cut_step(0.1, 0.1, 0.0, 3, 2)

    def test_coefficients_huge_n_do_not_overflow(self):
        c_deg, c_gap = cut_rule_coefficients(5000, 2500)
        assert 0.0 < c_deg < 1.0 and 0.0 < c_gap < 2.1


class TestApplyStep:
    def test_entropy_gate_with_full_h(self):
        assert apply_step(0.2, 0.3, 1.0) == pytest.approx(0.5)

    def test_entropy_gate_damps(self):
        # H(0.5) > H(0.2) so only h of the step is taken
        assert apply_step(0.2, 0.3, 0.1) == pytest.approx(0.2 + 0.1 * 0.3)

    def test_clamp_at_one_skips_gate(self):
        for h in (0.0, 0.3, 1.0):
            assert apply_step(0.9, 0.3, h) == 1.0

    def test_clamp_at_zero(self):
        assert apply_step(0.1, -0.5, 1.0) == 0.0

    def test_zero_step_fixed_point(self):
        assert apply_step(0.5, 0.0, 0.3) == 0.5

    def test_h_zero_blocks_entropy_increase(self):
        assert apply_step(0.2, 0.3, 0.0) == 0.2

    def test_entropy_decreasing_step_taken_fully(self):
        # moving toward 1 from 0.6 lowers entropy: full step regardless of h
        assert apply_step(0.6, 0.3, 0.0) == pytest.approx(0.9)

    @given(st.floats(0, 1), st.floats(-3, 3), st.floats(0, 1))
    def test_result_always_in_unit_interval(self, p, step, h):
        assert 0.0 <= apply_step(p, step, h) <= 1.0


class TestStateBookkeeping:
    def make_state(self, seed=3):
        g = generate_synthetic(20, 0.4, seed=seed)
        backbone = build_backbone(g, 0.5, seed=seed)
        return g, SparsifierState(g, backbone.edges)

    def test_initial_discrepancy_is_removed_mass(self):
        g, state = self.make_state()
        scratch = state._scratch_disc()
        assert np.allclose(np.asarray(state.vertex_disc), scratch, atol=1e-12)
        assert state.global_mass_gap == pytest.approx(
            sum(p for i, (_, _, p) in enumerate(g.edges) if not state.in_backbone[i])
        )

    def test_incremental_matches_scratch_after_many_updates(self):
        g, state = self.make_state(seed=5)
        rng = derive_rng(9)
        indices = state.backbone_indices()
        for _ in range(500):
            idx = indices[int(rng.integers(0, len(indices)))]
            state.set_prob(idx, float(rng.random()))
        assert np.max(np.abs(state._scratch_disc() - np.asarray(state.vertex_disc))) < 1e-9
        assert state.mass_in == pytest.approx(sum(state.probs), abs=1e-9)

    def test_disjoint_mass_gap_brute_force(self):
        g = UncertainGraph(
            6,
            [(0, 1, 0.5), (0, 2, 0.4), (1, 2, 0.3), (2, 3, 0.8), (3, 4, 0.6), (4, 5, 0.9)],
        )
        state = SparsifierState(g, [(0, 1), (2, 3), (4, 5)])
        state.set_prob(state.edge_index[(0, 1)], 0.2)
        for idx, (u, v, _) in enumerate(g.edges):
            expected = sum(
                state.orig[j] - state.probs[j]
                for j, (a, b, _) in enumerate(g.edges)
                if len({a, b} & {u, v}) == 0
            )
            assert state.disjoint_mass_gap(idx) == pytest.approx(expected, abs=1e-12)

    def test_disjoint_gap_two_disjoint_edges(self):
        g = UncertainGraph(4, [(0, 1, 0.7), (2, 3, 0.4)])
        state = SparsifierState(g, [(0, 1)])  # (2,3) removed at p=0.4
        assert state.disjoint_mass_gap(0) == pytest.approx(0.4)
        assert state.global_mass_gap == pytest.approx(0.4)

    def test_exclude_include_round_trip(self):
        g, state = self.make_state(seed=7)
        idx = state.backbone_indices()[0]
        before_gap = state.global_mass_gap
        prior = state.exclude(idx)
        assert not state.in_backbone[idx]
        assert state.global_mass_gap == pytest.approx(before_gap + prior)
        state.include(idx, prior)
        assert state.global_mass_gap == pytest.approx(before_gap)
        assert np.max(np.abs(state._scratch_disc() - np.asarray(state.vertex_disc))) < 1e-9


class TestCutAllStep:
    def test_zero_gap_zero_step(self):
        g = UncertainGraph(4, [(0, 1, 0.5), (2, 3, 0.5)])
        state = SparsifierState(g, [(0, 1), (2, 3)])
        assert cut_all_step(state, 0) == pytest.approx(0.0)

    def test_single_other_edge_short_by_03(self):
        g = UncertainGraph(4, [(0, 1, 0.5), (2, 3, 0.8)])
        state = SparsifierState(g, [(0, 1), (2, 3)])
        state.set_prob(1, 0.5)  # edge (2,3) now 0.3 below its original mass
        assert cut_all_step(state, 0) == pytest.approx(0.3, abs=1e-12)

    def test_assorted_gaps_match_direct_sum(self):
        g = UncertainGraph(5, [(0, 1, 0.9), (1, 2, 0.7), (2, 3, 0.6), (3, 4, 0.5)])
        state = SparsifierState(g, [(u, v) for u, v, _ in g.edges])
        rng = derive_rng(2)
        for idx in range(4):
            state.set_prob(idx, float(rng.random()))
        for idx in range(4):
            direct = sum(
                state.orig[j] - state.probs[j]
                for j in state.backbone_indices()
                if j != idx
            )
            assert cut_all_step(state, idx) == pytest.approx(direct, abs=1e-12)

    def test_unclamped_update_moves_by_pre_update_gap(self):
        g = UncertainGraph(6, [(0, 1, 0.4), (2, 3, 0.5), (4, 5, 0.6)])
        state = SparsifierState(g, [(u, v) for u, v, _ in g.edges])
        state.set_prob(1, 0.45)
        state.set_prob(2, 0.55)
        gap_excl = sum(
            state.orig[j] - state.probs[j] for j in state.backbone_indices() if j != 0
        )
        before = state.probs[0]
        sweep(state, Rule("cut-all"), h=1.0)  # first visited edge is index 0
        # the first update moved edge 0 by exactly the pre-update gap (unclamped,
        # and entropy at 0.5 would decrease when moving toward 0.5 from 0.4 + 0.1)
        assert state.probs[0] == pytest.approx(before + gap_excl, abs=1e-12)


class TestObjective:
    def test_zero_discrepancy(self):
        g = generate_synthetic(10, 0.5, seed=0)
        state = SparsifierState(g, [(u, v) for u, v, _ in g.edges])
        assert degree_objective(state) == pytest.approx(0.0, abs=1e-18)

    def test_sum_of_squares(self):
        g = UncertainGraph(2, [(0, 1, 0.5)])
        g2 = UncertainGraph(2, [(0, 1, 0.35)], allow_zero=True)
        # both vertices have delta 0.15: objective = 2 * 0.15^2 = 0.045
        assert degree_objective_between(g, g2) == pytest.approx(0.045, abs=1e-12)

    def test_sampled_cut_objective_within_mc_bound_of_exhaustive(self):
        from itertools import combinations

        from usparse.graph import expected_cut_size

        g = generate_synthetic(5, 0.9, seed=4)
        backbone = build_backbone(g, 0.7, seed=1)
        g2, _ = gdb_run(g, backbone, h=1.0)
        k = 2
        values = []
        for size in range(1, k + 1):
            values.append(
                [
                    (expected_cut_size(g, s) - expected_cut_size(g2, s)) ** 2
                    for s in combinations(range(5), size)
                ]
            )
        exact = sum(sum(v) for v in values)
        estimates = [sampled_cut_objective(g, g2, k, 400, seed=s) for s in range(8)]
        # stratified estimator: bound via per-stratum CLT, summed generously
        bound = sum(
            math.comb(5, i + 1) * 5 * np.std(v) / math.sqrt(400) for i, v in enumerate(values)
        )
        assert abs(np.mean(estimates) - exact) <= bound + 1e-9


class TestGdbRun:
    def test_full_backbone_is_fixed_point(self):
        g = generate_synthetic(15, 0.4, seed=2)
        out, info = gdb_run(g, full_backbone(g), h=1.0)
        assert out.edges == tuple((u, v, p) for u, v, p in g.edges)
        assert info["objective_final"] == pytest.approx(0.0, abs=1e-18)
        assert info["sweeps"] == 1

    def test_worked_four_vertex_single_edge_update(self):
        # backbone edge (0,3) at 0.2 with discrepancies 0.6 and 0 moves to 0.5
        g = UncertainGraph(
            4,
            [(0, 1, 0.3), (0, 2, 0.3), (0, 3, 0.2), (1, 3, 0.5), (2, 3, 0.5)],
        )
        backbone = BackboneGraph(4, ((0, 3), (1, 3), (2, 3)), source="spanning")
        state = SparsifierState(g, backbone.edges)
        idx = state.edge_index[(0, 3)]
        assert state.vertex_disc[0] == pytest.approx(0.6)
        assert state.vertex_disc[3] == pytest.approx(0.0)
        sweep(state, Rule("degree-abs"), h=1.0)
        assert state.probs[idx] == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("h", [0.0, 0.05, 1.0])
    def test_objective_monotone_per_sweep(self, h):
        g = generate_synthetic(40, 0.3, seed=8)
        backbone = build_backbone(g, 0.4, seed=8)
        _, info = gdb_run(g, backbone, h=h)
        hist = info["objective_history"]
        assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))

    def test_final_not_above_initial(self):
        g = generate_synthetic(50, 0.3, seed=12)
        backbone = build_backbone(g, 0.3, seed=12)
        _, info = gdb_run(g, backbone, h=0.05)
        assert info["objective_final"] <= info["objective_initial"] + 1e-9

    def test_output_edge_set_equals_backbone(self):
        g = generate_synthetic(30, 0.4, seed=3)
        backbone = build_backbone(g, 0.35, seed=3)
        out, _ = gdb_run(g, backbone, h=0.05)
        assert tuple((u, v) for u, v, _ in out.edges) == backbone.edges

    def test_probabilities_in_unit_interval(self):
        g = generate_synthetic(30, 0.4, seed=4)
        backbone = build_backbone(g, 0.3, seed=4)
        out, _ = gdb_run(g, backbone, h=1.0)
        assert all(0.0 <= p <= 1.0 for _, _, p in out.edges)

    def test_h_zero_keeps_entropy_raising_probabilities(self):
        g = generate_synthetic(25, 0.4, seed=6)
        backbone = build_backbone(g, 0.3, seed=6)
        out, _ = gdb_run(g, backbone, h=0.0)
        original = {(u, v): p for u, v, p in g.edges}
        from usparse.graph import edge_entropy

        for u, v, p in out.edges:
            if p != original[(u, v)]:
                # any change taken at h=0 cannot have raised entropy
                assert edge_entropy(p) <= edge_entropy(original[(u, v)]) + 1e-12

    def test_cut1_matches_degree_abs_run(self):
        g = generate_synthetic(20, 0.5, seed=10)
        backbone = build_backbone(g, 0.4, seed=10)
        out_deg, _ = gdb_run(g, backbone, h=0.05)
        out_cut, _ = gdb_run(g, backbone, h=0.05, rule=Rule("cut-k", 1))
        assert out_deg.edges == out_cut.edges

    def test_relative_mode_terminates_and_improves(self):
        g = generate_synthetic(30, 0.4, seed=13)
        backbone = build_backbone(g, 0.4, seed=13)
        _, info = gdb_run(g, backbone, h=0.05, rule=Rule("degree-rel"))
        assert info["objective_final"] <= info["objective_initial"] + 1e-9

    def test_cut_all_from_cold_start_is_fixed_point(self):
        # retained-edge gaps start at zero, so the cut-all rule makes no change
        g = generate_synthetic(15, 0.5, seed=14)
        backbone = build_backbone(g, 0.5, seed=14)
        out, _ = gdb_run(g, backbone, h=1.0, rule=Rule("cut-all"))
        original = {(u, v): p for u, v, p in g.edges}
        assert all(p == original[(u, v)] for u, v, p in out.edges)

    def test_cut2_run_respects_contracts(self):
        g = generate_synthetic(25, 0.5, seed=15)
        backbone = build_backbone(g, 0.4, seed=15)
        out, info = gdb_run(g, backbone, h=0.05, rule=Rule("cut-k", 2))
        assert tuple((u, v) for u, v, _ in out.edges) == backbone.edges
        assert all(0.0 <= p <= 1.0 for _, _, p in out.edges)
        assert info["sweeps"] >= 1

    def test_invalid_backbone_rejected(self):
        g = generate_synthetic(10, 0.5, seed=1)
        bad = BackboneGraph(g.n, ((0, 9),) if (0, 9) not in {(u, v) for u, v, _ in g.edges} else ((1, 9),), source="random")
        with pytest.raises(ValueError, match="does not exist"):
            gdb_run(g, bad)

    def test_h_out_of_range(self):
        g = generate_synthetic(10, 0.5, seed=1)
        with pytest.raises(ValueError, match="h must"):
            gdb_run(g, full_backbone(g), h=1.5)
