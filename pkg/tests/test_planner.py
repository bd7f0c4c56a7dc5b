import pytest

from conftest import make_model, make_module, make_phase
from layerswap.analytic import Position, lower_bound
from layerswap.dfbsim import Placement, simulated_total
from layerswap.planner import (
    InfeasibleBudgetError,
    fixed_costs_mb,
    interleaved_indices,
    load_placement,
    plan_for_budget,
    rank_candidates,
    save_plan,
    sweep,
)


class TestInterleavedIndices:
    def test_four_of_thirtysix(self):
        assert interleaved_indices(4, 36) == frozenset({0, 8, 17, 26})

    def test_single_layer_goes_first(self):
        assert interleaved_indices(1, 36) == frozenset({0})

    def test_maximal_excludes_only_last(self):
        assert interleaved_indices(35, 36) == frozenset(range(35))

    def test_zero_is_empty(self):
        assert interleaved_indices(0, 36) == frozenset()

    def test_last_layer_never_included(self):
        with pytest.raises(ValueError, match="exceeds layers-1"):
            interleaved_indices(36, 36)
        with pytest.raises(ValueError, match="exceeds layers-1"):
            interleaved_indices(40, 36)

    def test_requires_two_layers(self):
        with pytest.raises(ValueError, match="layers >= 2"):
            interleaved_indices(0, 1)

    def test_structure_properties(self):
        for layers in (2, 5, 27, 32, 36):
            for k in range(0, layers):
                indices = interleaved_indices(k, layers)
                assert len(indices) == k
                assert layers - 1 not in indices
                if k >= 1:
                    assert 0 in indices
                    ordered = sorted(indices)
                    min_gap = (layers - 1) // k
                    for a, b in zip(ordered, ordered[1:]):
                        assert b - a >= max(min_gap, 1)


class TestRankCandidates:
    def test_fixture_ranking(self, rtx5070ti):
        ranked = rank_candidates(rtx5070ti)
        head = [(c.module, c.position) for c in ranked[:5]]
        assert head == [
            ("vlm", Position.FIRST),
            ("vlm", Position.MIDDLE),
            ("vlm", Position.LAST),
            ("expert", Position.FIRST),
            ("expert", Position.MIDDLE),
        ]
        densities = [c.benefit_ms_per_mb for c in ranked]
        assert densities == sorted(densities, reverse=True)
        capacities = {(c.module, c.position): c.capacity for c in ranked}
        assert capacities[("vlm", Position.FIRST)] == 1
        assert capacities[("vlm", Position.MIDDLE)] == 34
        assert capacities[("vlm", Position.LAST)] == 1

    def test_vlm_classes_lead_on_both_fixtures(self, rtx5070ti, rtx3080ti):
        for p in (rtx5070ti, rtx3080ti):
            ranked = rank_candidates(p)
            assert all(c.module == "vlm" for c in ranked[:3])

    def test_single_exe_intensive_module(self):
        p = make_model(make_module(8, 10.0, [make_phase(1, 1.0, 5.0)]))
        ranked = rank_candidates(p)
        nonzero = [c for c in ranked if c.benefit_ms_per_mb > 0]
        assert [(c.module, c.position) for c in nonzero] == [("m", Position.FIRST)]


def greedy_layer_picks(p, n):
    """First n per-layer selections implied by the ranked classes."""
    picks = []
    for cand in rank_candidates(p):
        for _ in range(cand.capacity):
            picks.append((cand.module, cand.position))
            if len(picks) == n:
                return picks
    return picks


class TestPlanForBudget:
    def test_fixture_budget_16000(self, rtx5070ti):
        plan = plan_for_budget(rtx5070ti, 16000.0, include_simulated=True)
        assert plan.resident_count_per_module == {"vit": 0, "vlm": 28, "expert": 2}
        assert plan.placement.for_module("vlm") == interleaved_indices(28, 36)
        assert plan.placement.for_module("expert") == frozenset({0, 17})
        assert plan.vram.fits
        expected_saving = 22 * 10.9 + 27 * (21 * 10.9) + 2 * (10 * 3.6)
        assert plan.predicted_saving_ms == pytest.approx(expected_saving, abs=1e-9)
        full = simulated_total(rtx5070ti, Placement.empty())
        assert plan.simulated_total_ms == pytest.approx(full - plan.predicted_saving_ms, abs=1e-6)

    def test_infeasible_budget(self, rtx5070ti):
        with pytest.raises(InfeasibleBudgetError, match="below fixed costs"):
            plan_for_budget(rtx5070ti, 100.0)

    def test_budget_exactly_fixed_costs_is_feasible(self, rtx5070ti):
        plan = plan_for_budget(rtx5070ti, fixed_costs_mb(rtx5070ti))
        assert plan.predicted_saving_ms == 0.0
        assert plan.placement.resident == {}

    def test_unlimited_budget_reproduces_preloading(self, rtx5070ti):
        plan = plan_for_budget(rtx5070ti, 1e9, include_simulated=True)
        for m in rtx5070ti.modules:
            assert plan.placement.for_module(m.name) == frozenset(range(m.layers))
        assert plan.simulated_total_ms == pytest.approx(lower_bound(rtx5070ti).total_ms, abs=1e-9)
        assert not plan.vram.fits  # beyond the physical 16 GB

    def test_saving_monotone_in_budget(self, rtx5070ti):
        budgets = [6000, 8000, 10000, 12000, 14000, 16000, 20000]
        savings = [plan_for_budget(rtx5070ti, b).predicted_saving_ms for b in budgets]
        assert savings == sorted(savings)

    def test_predicted_saving_matches_simulation(self, rtx5070ti):
        for budget in (8000, 10000, 12000, 16000):
            plan = plan_for_budget(rtx5070ti, budget, include_simulated=True)
            full = simulated_total(rtx5070ti, Placement.empty())
            assert full - plan.simulated_total_ms == pytest.approx(
                plan.predicted_saving_ms, abs=1e-6
            )

    def test_vlm_exclusivity_emerges(self, rtx5070ti, rtx3080ti):
        for p in (rtx5070ti, rtx3080ti):
            picks = greedy_layer_picks(p, 35)
            assert len(picks) == 35
            assert all(module == "vlm" for module, _ in picks)

    def test_openvla_shape_generalizes(self):
        from conftest import FIXTURES
        from layerswap.profile import load_profile

        p = load_profile(FIXTURES / "rtx3080ti_openvla.json")
        plan = plan_for_budget(p, 12000.0)
        assert plan.resident_count_per_module == {"vision": 3, "llm": 21}
        assert plan.placement.for_module("llm") == interleaved_indices(21, 32)
        assert 31 not in plan.placement.for_module("llm")
        assert plan.vram.fits


class TestSweep:
    def test_vlm_sweep_deltas(self, rtx5070ti):
        points = sweep(rtx5070ti, "vlm", range(0, 29))
        totals = [pt.simulated_total_ms for pt in points]
        assert all(a > b for a, b in zip(totals, totals[1:]))
        assert totals[0] == pytest.approx(10398.8, abs=1e-6)
        assert totals[0] - totals[1] == pytest.approx(239.8, abs=1e-6)
        for a, b in zip(totals[1:], totals[2:]):
            assert a - b == pytest.approx(228.9, abs=1e-6)

    def test_vram_column(self, rtx5070ti):
        fixed = fixed_costs_mb(rtx5070ti)
        for pt in sweep(rtx5070ti, "vlm", [0, 5, 28]):
            assert pt.vram_total_mb == pytest.approx(fixed + pt.k * 368.0, abs=1e-9)

    def test_single_point_sweep(self, rtx5070ti):
        points = sweep(rtx5070ti, "vlm", [0])
        assert len(points) == 1
        assert points[0].simulated_total_ms == pytest.approx(10398.8, abs=1e-6)

    def test_expert_sweep_delta(self, rtx5070ti):
        points = sweep(rtx5070ti, "expert", range(0, 4))
        for a, b in zip(points, points[1:]):
            assert a.simulated_total_ms - b.simulated_total_ms == pytest.approx(36.0, abs=1e-9)

    def test_exe_intensive_sweep_only_first_layer_matters(self, rtx5070ti):
        points = sweep(rtx5070ti, "vit", range(0, 3))
        t0, t1, t2 = (pt.simulated_total_ms for pt in points)
        assert t0 - t1 == pytest.approx(0.9, abs=1e-9)
        assert t1 == pytest.approx(t2, abs=1e-9)

    def test_k_out_of_range(self, rtx5070ti):
        with pytest.raises(ValueError, match="exceeds layers-1"):
            sweep(rtx5070ti, "vlm", [36])


class TestPlanFile:
    def test_round_trip(self, rtx5070ti, tmp_path):
        plan = plan_for_budget(rtx5070ti, 16000.0)
        path = tmp_path / "plan.json"
        save_plan(plan, path)
        assert load_placement(path) == plan.placement

    def test_rejects_malformed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{}")
        with pytest.raises(ValueError, match="placement"):
            load_placement(path)
        path.write_text('{"placement": {"m": [1, "x"]}}')
        with pytest.raises(ValueError, match="list of integers"):
            load_placement(path)
