import itertools
import random
from fractions import Fraction

import pytest
from oracles import cdn_brute_force, cloudwan_brute_force, rtcn_brute_force

from nba.errors import InputError, PlanShapeError, ResourceLimitError
from nba.feasibility import check_feasible, is_directed_tree
from nba.generate import GenSpec, generate
from nba.model import BillingConfig
from nba.scenarios import (
    CdnInstance,
    CdnSlot,
    CloudWanInstance,
    CloudWanSlot,
    LvdnInstance,
    LvdnSlot,
    Producer,
    RtcnInstance,
    RtcnSlot,
    cdn_cost,
    cdn_estimate_upstream,
    cdn_from_json,
    cdn_lower_generic,
    cdn_solve,
    cdn_to_json,
    check_totally_unimodular,
    cloudwan_constraint_matrix,
    cloudwan_cost,
    cloudwan_from_json,
    cloudwan_solve,
    cloudwan_to_json,
    edge_server_loads,
    flows_feasible,
    integer_determinant,
    is_totally_unimodular,
    lvdn_from_json,
    lvdn_lower,
    lvdn_to_json,
    rtcn_expand,
    rtcn_from_json,
    rtcn_to_json,
    slot_lp_relaxation,
)
from nba.solvers import INFEASIBLE, PROVEN_OPTIMAL, solve_exact

F = Fraction


def two_leaf_cdn(miss=(F(0), F(1, 5), F(2, 5)), caps=(100, 100, 100), prices=(1, 1, 1), p=1, edges=None):
    """Root 1 over edge servers 2 and 3; customer 4 wants 10, customer 5 wants 5."""
    edges = frozenset(edges or {(2, 4), (3, 4), (2, 5), (3, 5)})
    slots = tuple(CdnSlot(t, ((4, F(10)), (5, F(5))), edges, tuple(miss)) for t in range(1, p + 1))
    return CdnInstance(3, (0, 1, 1), prices, caps, BillingConfig(p), slots)


class TestCdnUpstream:
    def test_one_layer_formula(self):
        cdn = two_leaf_cdn()
        assert cdn_estimate_upstream(cdn, {(2, 4), (3, 5)}, 1) == {1: 4}

    def test_everything_cached(self):
        cdn = two_leaf_cdn(miss=(0, 0, 0))
        assert cdn_estimate_upstream(cdn, {(2, 4), (3, 5)}, 1) == {1: 0}

    def test_nothing_cached(self):
        cdn = two_leaf_cdn(miss=(1, 1, 1))
        assert cdn_estimate_upstream(cdn, {(2, 4), (2, 5)}, 1) == {1: 15}

    def test_deeper_tree_recursion(self):
        # 1 -> 2 -> {3, 4}; customer 5 on server 3, customer 6 on server 4
        slot = CdnSlot(1, ((5, F(10)), (6, F(20))), frozenset({(3, 5), (4, 6)}), (F(1), F(1, 2), F(1, 2), F(1, 4)))
        cdn = CdnInstance(4, (0, 1, 2, 2), (1, 1, 1, 1), (100,) * 4, BillingConfig(1), (slot,))
        assert cdn_estimate_upstream(cdn, {(3, 5), (4, 6)}, 1) == {2: 10, 1: 5}

    def test_monotone_in_miss_probability(self):
        low = cdn_estimate_upstream(two_leaf_cdn(), {(2, 4), (3, 5)}, 1)[1]
        high = cdn_estimate_upstream(two_leaf_cdn(miss=(0, F(1, 2), F(2, 5))), {(2, 4), (3, 5)}, 1)[1]
        assert high >= low

    def test_customer_assigned_twice(self):
        with pytest.raises(PlanShapeError):
            edge_server_loads(two_leaf_cdn(), 1, {(2, 4), (3, 4), (2, 5)})

    def test_customer_unassigned(self):
        with pytest.raises(PlanShapeError):
            edge_server_loads(two_leaf_cdn(), 1, {(2, 4)})


class TestCdnSolve:
    def test_forced_assignment(self):
        cdn = two_leaf_cdn(edges={(2, 4), (2, 5)}, prices=(3, 2, 1))
        rep = cdn_solve(cdn)
        assert rep.status == PROVEN_OPTIMAL
        assert rep.cost == 2 * 15 + 3 * F(1, 5) * 15
        assert rep.cost == cdn_cost(cdn, {1: {(2, 4), (2, 5)}})

    def test_balanced_split(self):
        slot = CdnSlot(1, ((4, F(6)), (5, F(6))), frozenset({(2, 4), (3, 4), (2, 5), (3, 5)}), (F(0),) * 3)
        cdn = CdnInstance(3, (0, 1, 1), (1, 1, 1), (100,) * 3, BillingConfig(1), (slot,))
        rep = cdn_solve(cdn)
        assert rep.cost == 12
        assert set(rep.assignment[1]) in ({(2, 4), (3, 5)}, {(3, 4), (2, 5)}, {(2, 4), (2, 5)}, {(3, 4), (3, 5)})

    def test_tight_capacity_exact_equals_greedy(self):
        cdn = two_leaf_cdn(caps=(100, 10, 5))
        exact, greedy = cdn_solve(cdn, "exact"), cdn_solve(cdn, "greedy")
        assert exact.assignment == greedy.assignment == {1: {(2, 4): 1, (3, 5): 1}}

    def test_no_eligible_server(self):
        cdn = two_leaf_cdn(edges={(2, 4)})
        assert cdn_solve(cdn).status == INFEASIBLE

    def test_unknown_strategy(self):
        with pytest.raises(InputError):
            cdn_solve(two_leaf_cdn(), "local")

    def test_resource_limit(self):
        cdn = generate(GenSpec(seed=1, scenario="cdn", n=6, p=1, dests=(12, 12), density="1"))
        with pytest.raises(ResourceLimitError):
            cdn_solve(cdn, max_assignments=10)

    @pytest.mark.parametrize("seed", range(30))
    def test_exact_matches_enumeration(self, seed):
        cdn = generate(GenSpec(seed=seed, scenario="cdn", n=3 + seed % 3, p=1 + seed % 2, dests=(1, 3), density="2/3"))
        exact = cdn_solve(cdn)
        greedy = cdn_solve(cdn, "greedy")
        assert exact.cost == cdn_brute_force(cdn)
        assert greedy.cost is None or greedy.cost >= exact.cost

    def test_json_round_trip(self):
        cdn = generate(GenSpec(seed=4, scenario="cdn", n=4, p=2))
        doc = cdn_to_json(cdn)
        assert doc["schema"] == "nba-cdn/1"
        assert cdn_from_json(doc) == cdn

    def test_cycle_rejected(self):
        with pytest.raises(InputError):
            CdnInstance(3, (0, 3, 2), (1, 1, 1), (1, 1, 1), BillingConfig(1), ())

    def test_lowering_respects_coverage_and_replication(self):
        cdn = two_leaf_cdn()
        inst, plan = cdn_lower_generic(cdn, {1: {(2, 4), (3, 5)}})
        assert check_feasible(inst, plan) == []


def lvdn_single(cap=10, w=3, p=1):
    slots = tuple(LvdnSlot(t, (Producer(2, F(w), frozenset({3})),), frozenset({(2, 1), (1, 3)})) for t in range(1, p + 1))
    return LvdnInstance(1, (F(5),), (F(cap),), BillingConfig(p), slots)


class TestLvdn:
    def test_forced_path(self):
        inst = lvdn_lower(lvdn_single())
        rep = solve_exact(inst)
        assert rep.cost == 5 * 3
        assert rep.plan.edges(1, 2) == {(2, 1), (1, 3)}

    def test_single_ingest_server(self):
        # producer 3 may reach both servers but must upload to exactly one
        edges = frozenset({(3, 1), (3, 2), (1, 4), (2, 4), (1, 2), (2, 1)})
        slot = LvdnSlot(1, (Producer(3, F(1), frozenset({4})),), edges)
        inst = lvdn_lower(LvdnInstance(2, (1, 1), (5, 5), BillingConfig(1), (slot,)))
        rep = solve_exact(inst)
        assert sum(1 for i, j in rep.plan.edges(1, 3) if i == 3) == 1
        assert rep.cost == 1

    def test_two_producers_over_capacity(self):
        slot = LvdnSlot(
            1,
            (Producer(2, F(3), frozenset({4})), Producer(3, F(3), frozenset({4}))),
            frozenset({(2, 1), (3, 1), (1, 4)}),
        )
        inst = lvdn_lower(LvdnInstance(1, (1,), (5,), BillingConfig(1), (slot,)))
        assert solve_exact(inst).status == INFEASIBLE

    def test_viewer_cannot_be_server(self):
        slot = LvdnSlot(1, (Producer(2, F(1), frozenset({1})),), frozenset({(2, 1)}))
        with pytest.raises(InputError):
            LvdnInstance(1, (1,), (5,), BillingConfig(1), (slot,))

    def test_egress_only_billing(self):
        inst = lvdn_lower(lvdn_single())
        assert not inst.rules.bill_ingress
        assert inst.rules.billed_nodes == frozenset({1})

    @pytest.mark.parametrize("seed", range(20))
    def test_optimal_plans_are_trees(self, seed):
        lvdn = generate(GenSpec(seed=seed, scenario="lvdn", n=2, p=1 + seed % 2, sources=(1, 2), dests=(1, 2), density="1/2"))
        inst = lvdn_lower(lvdn)
        rep = solve_exact(inst)
        assert rep.status == PROVEN_OPTIMAL
        assert all(is_directed_tree(inst, rep.plan, t, src.s) for t, src in inst.pairs())

    def test_json_round_trip(self):
        lvdn = generate(GenSpec(seed=2, scenario="lvdn", n=3, p=2))
        assert lvdn_from_json(lvdn_to_json(lvdn)) == lvdn


def rtcn_slot(groups, ids=(3, 4, 5, 6)):
    return RtcnSlot(1, tuple((c, F(1)) for c in ids), tuple(frozenset(g) for g in groups), frozenset())


class TestRtcn:
    def test_group_of_three(self):
        rtcn = RtcnInstance(2, (1, 1), (9, 9), BillingConfig(1), (rtcn_slot([{3, 4, 5}], (3, 4, 5)),))
        producers = rtcn_expand(rtcn).slots[0].producers
        assert {(p.s, p.viewers) for p in producers} == {
            (3, frozenset({4, 5})),
            (4, frozenset({3, 5})),
            (5, frozenset({3, 4})),
        }

    def test_singleton_group_rejected(self):
        with pytest.raises(InputError):
            RtcnInstance(2, (1, 1), (9, 9), BillingConfig(1), (rtcn_slot([{3}], (3,)),))

    def test_overlapping_groups(self):
        rtcn = RtcnInstance(2, (1, 1), (9, 9), BillingConfig(1), (rtcn_slot([{3, 4}, {4, 5}], (3, 4, 5)),))
        producers = rtcn_expand(rtcn).slots[0].producers
        assert sorted((p.s, tuple(sorted(p.viewers))) for p in producers if p.s == 4) == [(4, (3,)), (4, (5,))]
        with pytest.raises(InputError):
            lvdn_lower(rtcn_expand(rtcn))

    @pytest.mark.parametrize("seed", range(10))
    def test_lowering_matches_direct_program(self, seed):
        rtcn = generate(GenSpec(seed=seed, scenario="rtcn", n=2, p=1, sources=(2, 3), dests=(2, 3), density="1/2"))
        assert solve_exact(lvdn_lower(rtcn_expand(rtcn))).cost == rtcn_brute_force(rtcn)

    def test_json_round_trip(self):
        rtcn = generate(GenSpec(seed=2, scenario="rtcn", n=2, p=2, sources=(2, 4), dests=(2, 2)))
        assert rtcn_from_json(rtcn_to_json(rtcn)) == rtcn


def cwan(demands, caps=(10, 10), prices=(1, 1), q=Fraction(95, 100), edges=None):
    m = len(caps)
    clients = len(demands[0])
    edges = frozenset(edges or {(i, m + 1 + j) for i in range(1, m + 1) for j in range(clients)})
    slots = tuple(CloudWanSlot(t, tuple(d), edges) for t, d in enumerate(demands, 1))
    return CloudWanInstance(m, m + clients, prices, caps, BillingConfig(len(demands), q), slots)


class TestCloudWan:
    def test_split_of_twelve(self):
        rep = cloudwan_solve(cwan([[12]], prices=(3, 3)))
        assert rep.cost == 36
        for t, flows in rep.assignment.items():
            assert flows_feasible(cwan([[12]]), t, flows)

    def test_every_split_costs_twelve(self):
        cw = cwan([[12]])
        assert {cloudwan_cost(cw, {1: {1: a, 2: 12 - a}}) for a in range(2, 11)} == {12}

    def test_zero_demand(self):
        rep = cloudwan_solve(cwan([[0, 0]]))
        assert rep.cost == 0

    def test_spike_absorbed_by_free_slot(self):
        demands = [[2]] * 19 + [[12]]
        free = cloudwan_solve(cwan(demands))
        charged = cloudwan_solve(cwan(demands, q=1))
        assert free.cost == 2 and charged.cost >= 12
        assert free.cost < charged.cost

    def test_over_capacity(self):
        rep = cloudwan_solve(cwan([[5], [25]]))
        assert rep.status == INFEASIBLE and rep.stats["infeasible_slot"] == 2

    def test_hall_violation(self):
        # two clients may only use PoP 1, which holds 10
        rep = cloudwan_solve(cwan([[6, 6]], edges={(1, 3), (1, 4)}))
        assert rep.status == INFEASIBLE

    @pytest.mark.parametrize("seed", range(20))
    def test_exact_matches_enumeration(self, seed):
        cw = generate(GenSpec(seed=seed, scenario="cwan", n=2 + seed % 2, p=1 + seed % 2, sources=(1, 2), weights=(1, 4), capacities=(2, 6)))
        exact = cloudwan_solve(cw)
        assert exact.cost == cloudwan_brute_force(cw)
        greedy = cloudwan_solve(cw, "greedy")
        assert greedy.cost is None or greedy.cost >= exact.cost
        for t, flows in exact.assignment.items():
            assert flows_feasible(cw, t, flows)

    def test_integer_capacities_required(self):
        with pytest.raises(InputError):
            cwan([[1]], caps=(F(1, 2), 3))

    def test_json_round_trip(self):
        cw = generate(GenSpec(seed=3, scenario="cwan", n=3, p=2))
        assert cloudwan_from_json(cloudwan_to_json(cw)) == cw


class TestUnimodular:
    def test_matrix_layout(self):
        m = cloudwan_constraint_matrix(cwan([[1, 1]]), 1)
        assert m.rows == ("demand:3", "demand:4", "cap:1", "cap:2")
        assert m.cols == ((1, 3), (1, 4), (2, 3), (2, 4))
        assert m.entries == ((1, 0, 1, 0), (0, 1, 0, 1), (1, 1, 0, 0), (0, 0, 1, 1))

    def test_two_by_two(self):
        cw = cwan([[1]], caps=(5,), prices=(1,), edges={(1, 2)})
        assert check_totally_unimodular(cw, 1, 2).ok

    def test_three_by_three(self):
        result = check_totally_unimodular(cwan([[1, 1, 1]], caps=(5, 5, 5), prices=(1, 1, 1)), 1, 6)
        assert result.ok and result.witness is None and result.checked > 0

    def test_injected_two(self):
        result = is_totally_unimodular([[1, 0], [2, 1]], 2)
        assert not result.ok and result.witness["determinant"] == 2

    def test_odd_cycle_is_not_unimodular(self):
        result = is_totally_unimodular([[1, 1, 0], [0, 1, 1], [1, 0, 1]], 3)
        assert not result.ok
        assert abs(result.witness["determinant"]) == 2

    def test_witness_labels(self):
        result = check_totally_unimodular(cwan([[1]], caps=(5,), prices=(1,), edges={(1, 2)}), 1, 2)
        assert result.to_json() == {"totally_unimodular": True, "witness": None, "submatrices_checked": result.checked}

    @pytest.mark.parametrize(
        "matrix,det",
        [([[2]], 2), ([[1, 2], [3, 4]], -2), ([[0, 1], [1, 0]], -1), ([[2, 0, 0], [0, 3, 0], [0, 0, 4]], 24), ([[1, 2], [2, 4]], 0)],
    )
    def test_determinant(self, matrix, det):
        assert integer_determinant(matrix) == det

    def test_random_determinants_match_permutation_expansion(self):
        rng = random.Random(5)
        for _ in range(50):
            n = rng.randint(1, 4)
            a = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)]
            expected = 0
            for perm in itertools.permutations(range(n)):
                sign = 1
                for i in range(n):
                    for j in range(i + 1, n):
                        if perm[i] > perm[j]:
                            sign = -sign
                term = sign
                for i in range(n):
                    term *= a[i][perm[i]]
                expected += term
            assert integer_determinant(a) == expected

    def test_resource_limit(self):
        cw = cwan([[1, 1, 1]], caps=(5, 5, 5), prices=(1, 1, 1))
        with pytest.raises(ResourceLimitError):
            check_totally_unimodular(cw, 1, 6, max_checks=10)

    def test_bad_slot(self):
        with pytest.raises(InputError):
            cloudwan_constraint_matrix(cwan([[1]]), 2)

    @pytest.mark.parametrize("seed", range(10))
    def test_lp_relaxation_integral(self, seed):
        cw = generate(GenSpec(seed=seed, scenario="cwan", n=3, p=1, sources=(2, 4), weights=(1, 7), density="2/3"))
        flows = slot_lp_relaxation(cw, 1)
        assert all(v.denominator == 1 for v in flows.values())
        assert flows_feasible(cw, 1, {e: int(v) for e, v in flows.items()})
