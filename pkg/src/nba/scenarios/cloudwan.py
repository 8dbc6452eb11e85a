"""Cloud WAN: PoPs serve integer client demands over a bipartite graph.

Slots decouple except through billing, and whether a slot is servable
depends only on the vector of PoP loads. The exact solver therefore
enumerates feasible load vectors per slot and searches their product;
flows are recovered from the chosen vectors with a max-flow.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import networkx as nx

from nba.cost import ZERO, charged_value
from nba.errors import InputError, ResourceLimitError
from nba.model import BillingConfig, Edge, rational_to_json, to_rational
from nba.scenarios.common import (
    ScenarioReport,
    billing_from_json,
    billing_to_json,
    check_schema,
    edge_list,
    int_list,
    require,
)
from nba.solvers.report import HEURISTIC, INFEASIBLE, PROVEN_OPTIMAL
from nba.solvers.vector_search import min_percentile_choice

CWAN_SCHEMA = "nba-cwan/1"
CWAN_REPORT_SCHEMA = "nba-cwan-report/1"


@dataclass(frozen=True)
class CloudWanSlot:
    t: int
    demand: tuple[int, ...]  # per client, index j - m - 1
    edges: frozenset[Edge]


@dataclass(frozen=True)
class CloudWanInstance:
    """PoPs ``1..m`` and clients ``m+1..n``; capacities and demands are integers."""

    m: int
    n: int
    prices: tuple[Fraction, ...]
    caps: tuple[int, ...]
    billing: BillingConfig
    slots: tuple[CloudWanSlot, ...]

    def __post_init__(self):
        m, n = self.m, self.n
        if not (isinstance(m, int) and isinstance(n, int)) or m < 1 or n <= m:
            raise InputError(f"need at least one PoP and one client, got m={m}, n={n}", "/m")
        if len(self.prices) != m:
            raise InputError(f"expected {m} prices", "/prices")
        prices = tuple(to_rational(u, f"/prices/{i}") for i, u in enumerate(self.prices))
        if any(u <= 0 for u in prices):
            raise InputError("prices must be positive", "/prices")
        object.__setattr__(self, "prices", prices)
        if len(self.caps) != m or any(isinstance(c, bool) or not isinstance(c, int) or c <= 0 for c in self.caps):
            raise InputError(f"expected {m} positive integer capacities", "/caps")
        object.__setattr__(self, "caps", tuple(self.caps))
        if len(self.slots) != self.billing.p:
            raise InputError(f"expected {self.billing.p} slots, got {len(self.slots)}", "/slots")
        for idx, slot in enumerate(self.slots):
            where = f"/slots/{idx}"
            if slot.t != idx + 1:
                raise InputError(f"slots must be numbered 1..p, found t={slot.t}", f"{where}/t")
            if len(slot.demand) != n - m or any(isinstance(d, bool) or not isinstance(d, int) or d < 0 for d in slot.demand):
                raise InputError(f"expected {n - m} nonnegative integer demands", f"{where}/demand")
            for i, j in slot.edges:
                if not (1 <= i <= m and m < j <= n):
                    raise InputError(f"edge ({i},{j}) must go from a PoP to a client", f"{where}/edges")

    @property
    def pops(self) -> range:
        return range(1, self.m + 1)

    @property
    def clients(self) -> range:
        return range(self.m + 1, self.n + 1)

    def slot(self, t: int) -> CloudWanSlot:
        return self.slots[t - 1]

    def demand(self, t: int, j: int) -> int:
        return self.slot(t).demand[j - self.m - 1]


def cloudwan_cost(cw: CloudWanInstance, loads: Mapping[int, Mapping[int, int]]) -> Fraction:
    """Percentile cost of per-slot PoP loads ``loads[t][i]``."""
    k = cw.billing.k
    total = ZERO
    for i in cw.pops:
        series = [loads.get(t, {}).get(i, 0) for t in range(1, cw.billing.p + 1)]
        total += cw.prices[i - 1] * charged_value(series, k)
    return total


def flows_feasible(cw: CloudWanInstance, t: int, flows: Mapping[Edge, int]) -> bool:
    slot = cw.slot(t)
    if any(e not in slot.edges or f < 0 or int(f) != f for e, f in flows.items()):
        return False
    recv = {j: 0 for j in cw.clients}
    sent = {i: 0 for i in cw.pops}
    for (i, j), f in flows.items():
        sent[i] += f
        recv[j] += f
    return all(recv[j] == cw.demand(t, j) for j in cw.clients) and all(
        sent[i] <= cw.caps[i - 1] for i in cw.pops
    )


def _hall_rows(cw: CloudWanInstance, t: int):
    """(demand of client subset, PoP neighbourhood) for every nonempty subset with demand."""
    slot = cw.slot(t)
    clients = [j for j in cw.clients if cw.demand(t, j) > 0]
    nbr = {j: frozenset(i for i, jj in slot.edges if jj == j) for j in clients}
    rows = []
    for mask in range(1, 1 << len(clients)):
        members = [clients[b] for b in range(len(clients)) if mask >> b & 1]
        need = sum(cw.demand(t, j) for j in members)
        rows.append((need, frozenset().union(*(nbr[j] for j in members))))
    return rows


def _flows_for_loads(cw: CloudWanInstance, t: int, loads: Mapping[int, int]) -> dict[Edge, int] | None:
    g = nx.DiGraph()
    total = 0
    for i in cw.pops:
        g.add_edge("src", ("pop", i), capacity=int(loads.get(i, 0)))
    for j in cw.clients:
        d = cw.demand(t, j)
        total += d
        g.add_edge(("cli", j), "sink", capacity=d)
    for i, j in sorted(cw.slot(t).edges):
        g.add_edge(("pop", i), ("cli", j), capacity=total)
    value, flow = nx.maximum_flow(g, "src", "sink")
    if value != total:
        return None
    out = {}
    for i, j in sorted(cw.slot(t).edges):
        f = int(flow[("pop", i)][("cli", j)])
        if f:
            out[(i, j)] = f
    return out


def _load_vectors(cw: CloudWanInstance, t: int, limit: int) -> list[dict[int, int]]:
    total = sum(cw.slot(t).demand)
    active = sorted({i for i, _ in cw.slot(t).edges})
    rows = _hall_rows(cw, t)
    found: list[dict[int, int]] = []
    suffix = [0] * (len(active) + 1)
    for idx in range(len(active) - 1, -1, -1):
        suffix[idx] = suffix[idx + 1] + cw.caps[active[idx] - 1]

    def rec(idx, left, current):
        if idx == len(active):
            if left == 0 and all(sum(current.get(i, 0) for i in nb) >= need for need, nb in rows):
                found.append(dict(current))
                if len(found) > limit:
                    raise ResourceLimitError(f"slot {t} has more than {limit} load vectors", {"slot": t, "vectors": len(found)})
            return
        i = active[idx]
        lo = max(0, left - suffix[idx + 1])
        for x in range(lo, min(cw.caps[i - 1], left) + 1):
            current[i] = x
            rec(idx + 1, left - x, current)
        current.pop(i, None)

    rec(0, total, {})
    return found


def _greedy_slot(cw: CloudWanInstance, t: int, series: dict[int, list[int]]) -> dict[Edge, int] | None:
    k = cw.billing.k
    slot = cw.slot(t)
    load = {i: 0 for i in cw.pops}
    flows: dict[Edge, int] = {}
    order = sorted(cw.clients, key=lambda j: (-cw.demand(t, j), j))
    for j in order:
        pops = sorted(i for i, jj in slot.edges if jj == j)
        for _ in range(cw.demand(t, j)):
            best = None
            for i in pops:
                if load[i] >= cw.caps[i - 1]:
                    continue
                col = list(series[i])
                col[t - 1] = load[i]
                before = charged_value(col, k)
                col[t - 1] += 1
                delta = cw.prices[i - 1] * (charged_value(col, k) - before)
                if best is None or (delta, i) < best:
                    best = (delta, i)
            if best is None:
                # unit filling painted itself into a corner; fall back to any feasible routing
                return _flows_for_loads(cw, t, {i: cw.caps[i - 1] for i in cw.pops})
            i = best[1]
            load[i] += 1
            flows[(i, j)] = flows.get((i, j), 0) + 1
    return flows


def _slot_loads(cw: CloudWanInstance, flows: Mapping[Edge, int]) -> dict[int, int]:
    load = {i: 0 for i in cw.pops}
    for (i, _), f in flows.items():
        load[i] += f
    return load


def cloudwan_solve(cw: CloudWanInstance, strategy: str = "exact", *, max_vectors: int = 100_000,
                   max_nodes: int = 2_000_000) -> ScenarioReport:
    """Minimum-cost integer flows meeting every client demand.

    ``greedy`` fills demand one unit at a time into the eligible PoP with the
    smallest marginal percentile cost (ties by PoP id); ``exact`` searches
    all feasible per-slot load vectors with the greedy cost as incumbent.
    """
    started = time.perf_counter()
    if strategy not in ("exact", "greedy"):
        raise InputError(f"unknown Cloud-WAN strategy {strategy!r}", "strategy")
    p = cw.billing.p
    for t in range(1, p + 1):
        if _flows_for_loads(cw, t, {i: cw.caps[i - 1] for i in cw.pops}) is None:
            stats = {"infeasible_slot": t}
            return ScenarioReport(CWAN_REPORT_SCHEMA, INFEASIBLE, None, {}, stats, time.perf_counter() - started)
    series = {i: [0] * p for i in cw.pops}
    greedy: dict[int, dict[Edge, int]] = {}
    for t in range(1, p + 1):
        flows = _greedy_slot(cw, t, series)
        greedy[t] = flows
        for i, x in _slot_loads(cw, flows).items():
            series[i][t - 1] = x
    greedy_cost = cloudwan_cost(cw, {t: _slot_loads(cw, f) for t, f in greedy.items()})
    stats: dict = {"greedy_cost": rational_to_json(greedy_cost)}
    plan, status = greedy, HEURISTIC
    if strategy == "exact":
        options = [_load_vectors(cw, t, max_vectors) for t in range(1, p + 1)]
        prices = {i: cw.prices[i - 1] for i in cw.pops}
        opts = [[{i: Fraction(x) for i, x in o.items()} for o in slot] for slot in options]
        cost, choice, visited = min_percentile_choice(opts, prices, cw.billing.k, max_nodes, incumbent=greedy_cost)
        stats["load_vectors"] = [len(o) for o in options]
        stats["search_nodes"] = visited
        if choice is not None:
            plan = {t + 1: _flows_for_loads(cw, t + 1, options[t][c]) for t, c in enumerate(choice)}
        status = PROVEN_OPTIMAL
    cost = cloudwan_cost(cw, {t: _slot_loads(cw, f) for t, f in plan.items()})
    assert all(flows_feasible(cw, t, f) for t, f in plan.items())
    return ScenarioReport(CWAN_REPORT_SCHEMA, status, cost, plan, stats, time.perf_counter() - started)


def cloudwan_to_json(cw: CloudWanInstance) -> dict:
    return {
        "schema": CWAN_SCHEMA,
        "m": cw.m,
        "n": cw.n,
        "prices": [rational_to_json(u) for u in cw.prices],
        "caps": list(cw.caps),
        "billing": billing_to_json(cw.billing),
        "slots": [
            {"t": s.t, "demand": list(s.demand), "edges": [list(e) for e in sorted(s.edges)]}
            for s in cw.slots
        ],
    }


def cloudwan_from_json(doc: dict) -> CloudWanInstance:
    check_schema(doc, CWAN_SCHEMA)
    slots = []
    for idx, s in enumerate(require(doc, "slots", "")):
        where = f"/slots/{idx}"
        slots.append(
            CloudWanSlot(
                require(s, "t", where),
                tuple(int_list(require(s, "demand", where), f"{where}/demand")),
                frozenset(edge_list(require(s, "edges", where), f"{where}/edges")),
            )
        )
    return CloudWanInstance(
        m=require(doc, "m", ""),
        n=require(doc, "n", ""),
        prices=tuple(require(doc, "prices", "")),
        caps=tuple(int_list(require(doc, "caps", ""), "/caps")),
        billing=billing_from_json(require(doc, "billing", "")),
        slots=tuple(slots),
    )
