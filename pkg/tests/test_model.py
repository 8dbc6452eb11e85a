from fractions import Fraction

import pytest
from conftest import TRIANGLE_EDGES, make_triangle

from nba.cost import bandwidth_series, charged_value, q_percentile, total_cost
from nba.errors import InputError, PlanShapeError
from nba.io import dumps, instance_from_json, instance_to_json, plan_from_json, plan_to_json
from nba.model import AllocationPlan, BillingConfig, BillingRules, Instance, Network, SlotDemand, Source


def two_node(w=3, cap=10, p=1) -> Instance:
    net = Network(2, [1, 1], [cap, cap], [cap, cap], [(1, 2)])
    demands = tuple(SlotDemand(t, [(1, 2)], (Source(1, w, {2}),)) for t in range(1, p + 1))
    return Instance(net, BillingConfig(p), demands)


class TestBillingConfig:
    def test_720_samples_discard_36(self):
        assert BillingConfig(720, Fraction(95, 100)).k == 36

    @pytest.mark.parametrize("p,k", [(1, 0), (19, 0), (20, 1), (21, 1), (39, 1), (40, 2), (100, 5)])
    def test_discard_count(self, p, k):
        assert BillingConfig(p).k == k

    def test_at_least_one_sample_charged(self):
        for p in range(1, 200):
            for q in (Fraction(1, 100), Fraction(1, 2), Fraction(1)):
                assert BillingConfig(p, q).k < p

    @pytest.mark.parametrize("p", [0, -1, 1.5, True])
    def test_rejects_bad_sample_count(self, p):
        with pytest.raises(InputError):
            BillingConfig(p)

    @pytest.mark.parametrize("q", [0, Fraction(-1, 2), Fraction(3, 2)])
    def test_rejects_bad_percentile(self, q):
        with pytest.raises(InputError):
            BillingConfig(4, q)

    def test_accepts_string_percentile(self):
        assert BillingConfig(20, "19/20").q == Fraction(19, 20)


class TestPercentile:
    def test_single_sample(self):
        assert q_percentile([7], BillingConfig(1)) == 7

    def test_one_to_twenty(self):
        assert q_percentile(list(range(1, 21)), BillingConfig(20)) == 19

    def test_constant(self):
        assert q_percentile([5] * 40, BillingConfig(40)) == 5

    def test_all_zero(self):
        assert q_percentile([0] * 30, BillingConfig(30)) == 0

    def test_ties_discard_duplicates_first(self):
        assert q_percentile([9, 9, 1] + [0] * 37, BillingConfig(40)) == 1
        assert q_percentile([9, 9, 9] + [0] * 37, BillingConfig(40)) == 9

    def test_length_mismatch_names_both_counts(self):
        with pytest.raises(InputError, match="3 samples, expected p=4"):
            q_percentile([1, 2, 3], BillingConfig(4))

    def test_fractions_exact(self):
        assert q_percentile([Fraction(1, 3), Fraction(1, 2)], BillingConfig(2)) == Fraction(1, 2)

    def test_charged_value_mixed_denominators(self):
        values = [Fraction(2, 3), Fraction(3, 4), Fraction(5, 7)]
        assert charged_value(values, 1) == Fraction(5, 7)
        assert charged_value(values, 3) == 0


class TestSeriesAndCost:
    def test_single_edge_series(self):
        inst = two_node(w=3)
        series = bandwidth_series(inst, AllocationPlan({(1, 1): [(1, 2)]}))
        assert series.egress[1] == (3,) and series.ingress[2] == (3,)
        assert series.egress[2] == (0,) and series.ingress[1] == (0,)

    def test_empty_plan_series_and_cost(self, triangle):
        series = bandwidth_series(triangle, AllocationPlan())
        assert all(v == (0,) for v in series.egress.values())
        assert total_cost(triangle, AllocationPlan()) == 0

    def test_two_sources_sum(self):
        net = Network(3, [1, 1, 1], [None] * 3, [None] * 3, [(1, 2)])
        srcs = (Source(1, 2, {2}), Source(3, 5, {2}))
        inst = Instance(net, BillingConfig(1), (SlotDemand(1, [(1, 2)], srcs),))
        plan = AllocationPlan({(1, 1): [(1, 2)], (1, 3): [(1, 2)]})
        assert bandwidth_series(inst, plan).egress[1] == (7,)

    def test_max_of_egress_and_ingress_scaled_by_price(self):
        # node 2 receives 3 then relays 5 units' worth to node 3 at price 2
        net = Network(3, [1, 2, 1], [None] * 3, [None] * 3, [(1, 2), (2, 3)])
        srcs = (Source(1, 3, {2}), Source(2, 5, {3}))
        inst = Instance(net, BillingConfig(1), (SlotDemand(1, [(1, 2), (2, 3)], srcs),))
        plan = AllocationPlan({(1, 1): [(1, 2)], (1, 2): [(2, 3)]})
        assert total_cost(inst, plan) == 3 + 2 * 5 + 5

    def test_triangle_chain_and_star(self, triangle, chain_plan, star_plan):
        assert total_cost(triangle, chain_plan) == 3
        assert total_cost(triangle, star_plan) == 4

    def test_free_slot_absorbs_peak(self):
        inst = two_node(w=3, p=20)
        plan = AllocationPlan({(t, 1): [(1, 2)] for t in range(1, 20)})
        assert total_cost(inst, plan) == 6

    def test_egress_only_rules(self):
        inst = make_triangle()
        inst = Instance(inst.network, inst.billing, inst.demands, BillingRules(bill_ingress=False, billed_nodes={2}))
        assert total_cost(inst, AllocationPlan({(1, 1): [(1, 2), (2, 3)]})) == 1

    def test_foreign_edge_rejected(self):
        inst = two_node()
        with pytest.raises(PlanShapeError):
            total_cost(inst, AllocationPlan({(1, 1): [(2, 1)]}))

    def test_foreign_source_rejected(self, triangle):
        with pytest.raises(PlanShapeError):
            bandwidth_series(triangle, AllocationPlan({(1, 2): [(2, 3)]}))


class TestValidation:
    def test_self_loop(self):
        with pytest.raises(InputError):
            Network(2, [1, 1], [1, 1], [1, 1], [(1, 1)])

    @pytest.mark.parametrize("prices", [[0, 1], [-1, 1], [1]])
    def test_bad_prices(self, prices):
        with pytest.raises(InputError):
            Network(2, prices, [1, 1], [1, 1], [(1, 2)])

    def test_source_in_own_destinations(self):
        with pytest.raises(InputError):
            Source(1, 1, {1, 2})

    def test_nonpositive_weight(self):
        with pytest.raises(InputError):
            Source(1, 0, {2})

    def test_slot_gap(self):
        net = Network(2, [1, 1], [1, 1], [1, 1], [(1, 2)])
        with pytest.raises(InputError):
            Instance(net, BillingConfig(2), (SlotDemand(1, [], ()), SlotDemand(3, [], ())))

    def test_slot_edge_outside_network(self):
        net = Network(2, [1, 1], [1, 1], [1, 1], [(1, 2)])
        with pytest.raises(InputError):
            Instance(net, BillingConfig(1), (SlotDemand(1, [(2, 1)], ()),))

    def test_duplicate_source(self):
        with pytest.raises(InputError):
            SlotDemand(1, [], (Source(1, 1, {2}), Source(1, 2, {2})))


class TestJson:
    def test_instance_round_trip(self):
        inst = make_triangle(p=3, w=Fraction(7, 3))
        doc = instance_to_json(inst)
        assert doc["schema"] == "nba-instance/1"
        again = instance_from_json(doc)
        assert again == inst
        assert dumps(instance_to_json(again)) == dumps(doc)

    def test_plan_round_trip(self, chain_plan):
        doc = plan_to_json(chain_plan)
        assert doc["schema"] == "nba-plan/1"
        assert plan_from_json(doc) == chain_plan

    def test_wrong_schema(self):
        doc = instance_to_json(make_triangle())
        doc["schema"] = "nba-instance/9"
        with pytest.raises(InputError):
            instance_from_json(doc)

    def test_missing_field_named(self):
        doc = instance_to_json(make_triangle())
        del doc["network"]["prices"]
        with pytest.raises(InputError) as err:
            instance_from_json(doc)
        assert "prices" in str(err.value) or "prices" in (err.value.field or "")

    def test_edges_sorted_in_output(self):
        doc = instance_to_json(make_triangle())
        assert doc["network"]["edges"] == sorted(list(e) for e in TRIANGLE_EDGES)
