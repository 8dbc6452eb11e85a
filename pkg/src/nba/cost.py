"""Percentile billing: bandwidth series and the total cost objective."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from nba.errors import InputError
from nba.model import AllocationPlan, BillingConfig, Instance, to_rational, validate_plan

ZERO = Fraction(0)


def charged_value(values: Sequence[Fraction], k: int) -> Fraction:
    """(k+1)-th largest entry of ``values``; the billing kernel without checks."""
    if k >= len(values):
        return ZERO
    # compare integer numerators over a common denominator; Fraction ordering is slow
    scale = math.lcm(*{v.denominator for v in values})
    keys = [v.numerator * (scale // v.denominator) for v in values]
    top = max(keys) if k == 0 else heapq.nlargest(k + 1, keys)[-1]
    return Fraction(top, scale)


def q_percentile(series: Sequence, billing: BillingConfig) -> Fraction:
    """Charged bandwidth of one series under percentile billing.

    The ``billing.k`` largest samples are discarded and the maximum of the
    rest is returned. No interpolation between ranks.

    >>> q_percentile([1, 2, 3], BillingConfig(p=3))
    Fraction(3, 1)
    """
    if len(series) != billing.p:
        raise InputError(f"series has {len(series)} samples, expected p={billing.p}", "series")
    values = [v if type(v) in (int, Fraction) else to_rational(v, "series") for v in series]
    return Fraction(charged_value(values, billing.k))


@dataclass(frozen=True)
class BandwidthSeries:
    """Per-node egress and ingress series, each of length ``p``."""

    egress: dict[int, tuple[Fraction, ...]]
    ingress: dict[int, tuple[Fraction, ...]]

    def percentiles(self, billing: BillingConfig) -> dict[int, tuple[Fraction, Fraction]]:
        return {
            i: (charged_value(self.egress[i], billing.k), charged_value(self.ingress[i], billing.k))
            for i in self.egress
        }


def load_tables(instance: Instance, plan: AllocationPlan) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
    """Mutable ``[node][slot]`` egress/ingress tables (index 0 unused)."""
    n, p = instance.network.n, instance.p
    out = [[ZERO] * p for _ in range(n + 1)]
    inn = [[ZERO] * p for _ in range(n + 1)]
    for (t, s), edges in plan.items():
        w = instance.slot(t).source(s).w
        for i, j in edges:
            out[i][t - 1] += w
            inn[j][t - 1] += w
    return out, inn


def bandwidth_series(instance: Instance, plan: AllocationPlan) -> BandwidthSeries:
    validate_plan(instance, plan)
    out, inn = load_tables(instance, plan)
    nodes = instance.network.nodes
    return BandwidthSeries(
        egress={i: tuple(out[i]) for i in nodes},
        ingress={i: tuple(inn[i]) for i in nodes},
    )


def cost_of_tables(instance: Instance, out, inn) -> Fraction:
    """Objective value for precomputed load tables, honouring scenario rules."""
    k = instance.billing.k
    rules = instance.rules
    total = ZERO
    for i in instance.network.nodes:
        if not rules.billed(i):
            continue
        charge = charged_value(out[i], k)
        if rules.bill_ingress:
            charge = max(charge, charged_value(inn[i], k))
        if charge:
            total += instance.network.price(i) * charge
    return total


def total_cost(instance: Instance, plan: AllocationPlan) -> Fraction:
    """Sum over billed nodes of price times the charged percentile.

    Generic instances charge ``max(egress, ingress)`` percentiles; scenario
    lowerings may bill egress only. Feasibility is not required.
    """
    validate_plan(instance, plan)
    out, inn = load_tables(instance, plan)
    return cost_of_tables(instance, out, inn)
