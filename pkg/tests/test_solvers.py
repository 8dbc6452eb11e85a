from fractions import Fraction

import pytest
from conftest import make_triangle, tiny_instance
from oracles import brute_force, plan_cost

from nba.cost import total_cost
from nba.errors import PreconditionError, ResourceLimitError
from nba.feasibility import check_feasible, is_directed_tree
from nba.model import AllocationPlan, BillingConfig, Instance, Network, SlotDemand, Source
from nba.solvers import HEURISTIC, INFEASIBLE, PROVEN_OPTIMAL, ExactLimits, improve_local, solve_exact, solve_greedy
from nba.solvers.trees import covering_arborescences

CHAINS = ({(1, 2), (2, 3)}, {(1, 3), (3, 2)})


def complete_instance(n, p, sources_per_slot, prices=None, cap=None, q=Fraction(95, 100)) -> Instance:
    edges = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    net = Network(n, prices or [1] * n, [cap] * n, [cap] * n, edges)
    demands = tuple(SlotDemand(t, edges, tuple(srcs)) for t, srcs in enumerate(sources_per_slot, 1))
    return Instance(net, BillingConfig(p, q), demands)


class TestExact:
    def test_triangle(self, triangle):
        report = solve_exact(triangle)
        assert report.status == PROVEN_OPTIMAL and report.cost == 3
        assert set(report.plan.edges(1, 1)) in CHAINS

    def test_source_without_destinations(self):
        inst = complete_instance(3, 1, [[Source(1, 1, set()), Source(2, 1, {3})]])
        report = solve_exact(inst)
        assert report.plan.edges(1, 1) == frozenset()
        assert report.cost == 2

    def test_unreachable_destination(self):
        net = Network(3, [1] * 3, [None] * 3, [None] * 3, [(1, 2), (3, 2)])
        inst = Instance(net, BillingConfig(1), (SlotDemand(1, [(1, 2), (3, 2)], (Source(1, 1, {3}),)),))
        report = solve_exact(inst)
        assert report.status == INFEASIBLE and report.cost is None
        assert report.stats["blocked_pair"] == [1, 1]

    def test_capacity_infeasible(self):
        assert solve_exact(make_triangle(w=20)).status == INFEASIBLE

    def test_resource_limit(self):
        inst = complete_instance(5, 1, [[Source(1, 1, {2, 3, 4, 5})]])
        with pytest.raises(ResourceLimitError) as err:
            solve_exact(inst, ExactLimits(max_trees_per_pair=10))
        assert err.value.counts

    def test_exploits_free_slot(self):
        # the heavy slot is the free one, so only the light slots are charged
        slots = [[Source(1, 1, {2, 3})] for _ in range(19)] + [[Source(1, 5, {2, 3})]]
        inst = complete_instance(3, 20, slots, prices=[10, 1, 1])
        report = solve_exact(inst)
        assert report.status == PROVEN_OPTIMAL
        assert report.cost == plan_cost(inst, dict(report.plan.items()))
        assert report.cost == 10 * 1 + 1 * 1 + 1 * 1

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_brute_force(self, seed):
        inst = tiny_instance(seed)
        report = solve_exact(inst)
        assert report.cost == brute_force(inst)[0]
        if report.feasible:
            assert check_feasible(inst, report.plan) == []
            assert all(is_directed_tree(inst, report.plan, t, src.s) for t, src in inst.pairs())

    @pytest.mark.parametrize("seed", range(6))
    def test_parallel_same_cost(self, seed):
        inst = tiny_instance(seed, density="1")
        assert solve_exact(inst, workers=2).cost == solve_exact(inst).cost

    def test_without_incumbent(self):
        inst = tiny_instance(11)
        assert solve_exact(inst, ExactLimits(use_heuristic_incumbent=False)).cost == solve_exact(inst).cost

    def test_report_json(self, triangle):
        doc = solve_exact(triangle).to_json()
        assert doc["schema"] == "nba-report/1" and doc["status"] == PROVEN_OPTIMAL and doc["cost"] == 3
        assert "wall_time_s" not in doc["statistics"]
        assert "wall_time_s" in solve_exact(triangle).to_json(include_timing=True)["statistics"]


class TestArborescences:
    def test_triangle_trees(self, triangle):
        trees = covering_arborescences(triangle, 1, triangle.slot(1).source(1))
        assert {frozenset(t) for t in trees} == {
            frozenset({(1, 2), (1, 3)}),
            frozenset({(1, 2), (2, 3)}),
            frozenset({(1, 3), (3, 2)}),
        }

    def test_relay_outside_destinations(self, triangle):
        src = Source(1, 1, {3})
        trees = {frozenset(t) for t in covering_arborescences(triangle, 1, src)}
        assert trees == {frozenset({(1, 3)}), frozenset({(1, 2), (2, 3)})}


class TestGreedy:
    def test_triangle(self, triangle):
        report = solve_greedy(triangle)
        assert report.status == HEURISTIC and report.cost == 3

    @pytest.mark.parametrize("seed", range(30))
    def test_feasible_and_bounded(self, seed):
        inst = tiny_instance(seed)
        greedy = solve_greedy(inst, seed=seed)
        if greedy.feasible:
            assert check_feasible(inst, greedy.plan) == []
            assert greedy.cost == total_cost(inst, greedy.plan)
            assert greedy.cost >= solve_exact(inst).cost

    def test_deterministic(self):
        inst = tiny_instance(8, density="1")
        assert solve_greedy(inst, seed=3).plan == solve_greedy(inst, seed=3).plan

    def test_infeasible(self):
        assert solve_greedy(make_triangle(w=20)).status == INFEASIBLE


class TestLocal:
    def test_star_to_chain(self, triangle, star_plan):
        report = improve_local(triangle, star_plan)
        assert report.cost == 3
        assert set(report.plan.edges(1, 1)) in CHAINS
        assert report.stats["moves"]["reattach"] == 1

    def test_optimal_unchanged(self, triangle, chain_plan):
        report = improve_local(triangle, chain_plan)
        assert report.plan == chain_plan and report.cost == 3
        assert sum(report.stats["moves"].values()) == 0

    def test_infeasible_input(self, triangle):
        with pytest.raises(PreconditionError):
            improve_local(triangle, AllocationPlan({(1, 1): [(1, 2)]}))

    def test_redundant_edges_deleted(self, triangle):
        report = improve_local(triangle, AllocationPlan({(1, 1): [(1, 2), (1, 3), (2, 3)]}))
        assert report.cost == 3 and report.stats["moves"]["delete"] >= 1

    def test_budget_zero_only_prunes(self, triangle, star_plan):
        assert improve_local(triangle, star_plan, budget=0).cost == 4

    @pytest.mark.parametrize("seed", range(100))
    def test_trace_monotone(self, seed):
        inst = tiny_instance(seed, density="3/4", capacities=(4, 12))
        greedy = solve_greedy(inst, seed=seed)
        assert greedy.feasible
        report = improve_local(inst, greedy.plan)
        trace = [Fraction(c) for c in report.stats["cost_trace"]]
        assert all(b <= a for a, b in zip(trace, trace[1:]))
        assert trace[0] == greedy.cost and trace[-1] == report.cost
        assert check_feasible(inst, report.plan) == []
