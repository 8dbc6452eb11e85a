"""Mutable load bookkeeping shared by the heuristics and the exact search."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from nba.cost import ZERO, charged_value, cost_of_tables, load_tables
from nba.model import AllocationPlan, Edge, Instance


class LoadState:
    """Per-node, per-slot egress/ingress loads with exact marginal costs."""

    def __init__(self, instance: Instance, plan: AllocationPlan | None = None):
        self.instance = instance
        self.k = instance.billing.k
        if plan is None:
            n, p = instance.network.n, instance.p
            self.out = [[ZERO] * p for _ in range(n + 1)]
            self.inn = [[ZERO] * p for _ in range(n + 1)]
        else:
            self.out, self.inn = load_tables(instance, plan)

    def node_cost(self, i: int) -> Fraction:
        rules = self.instance.rules
        if not rules.billed(i):
            return ZERO
        charge = charged_value(self.out[i], self.k)
        if rules.bill_ingress:
            charge = max(charge, charged_value(self.inn[i], self.k))
        return self.instance.network.price(i) * charge

    def total(self) -> Fraction:
        return cost_of_tables(self.instance, self.out, self.inn)

    def apply(self, t: int, w: Fraction, edges: Iterable[Edge], sign: int = 1) -> None:
        dw = w if sign > 0 else -w
        for i, j in edges:
            self.out[i][t - 1] += dw
            self.inn[j][t - 1] += dw

    def delta(self, t: int, w: Fraction, edges: Iterable[Edge], sign: int = 1) -> Fraction:
        """Exact change of total cost if ``edges`` were added (or removed)."""
        edges = list(edges)
        touched = sorted({v for e in edges for v in e})
        before = sum((self.node_cost(v) for v in touched), ZERO)
        self.apply(t, w, edges, sign)
        after = sum((self.node_cost(v) for v in touched), ZERO)
        self.apply(t, w, edges, -sign)
        return after - before

    def fits(self, t: int, w: Fraction, edges: Iterable[Edge]) -> bool:
        """Whether adding ``edges`` keeps every capacity in slot ``t``."""
        extra_out: dict[int, Fraction] = {}
        extra_in: dict[int, Fraction] = {}
        for i, j in edges:
            extra_out[i] = extra_out.get(i, ZERO) + w
            extra_in[j] = extra_in.get(j, ZERO) + w
        net = self.instance.network
        for i, x in extra_out.items():
            cap = net.egress_cap(i)
            if cap is not None and self.out[i][t - 1] + x > cap:
                return False
        for j, x in extra_in.items():
            cap = net.ingress_cap(j)
            if cap is not None and self.inn[j][t - 1] + x > cap:
                return False
        return True
