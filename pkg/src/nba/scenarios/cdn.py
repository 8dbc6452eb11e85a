"""Content delivery network: customers assigned to edge servers of a server tree.

Only the customer-to-edge-server assignment is a decision. Egress of the
central servers and of the source server is estimated bottom-up from the
edge-server loads and per-server cache miss probabilities: a server's
estimated egress is the sum over its children of the child's miss
probability times the child's egress.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from nba.cost import ZERO, charged_value
from nba.errors import InputError, PlanShapeError, ResourceLimitError
from nba.model import (
    AllocationPlan,
    BillingConfig,
    BillingRules,
    Edge,
    Instance,
    Network,
    SlotDemand,
    Source,
    rational_to_json,
    to_rational,
)
from nba.scenarios.common import (
    ScenarioReport,
    billing_from_json,
    billing_to_json,
    check_schema,
    edge_list,
    int_list,
    positive_list,
    require,
)
from nba.solvers.report import HEURISTIC, INFEASIBLE, PROVEN_OPTIMAL
from nba.solvers.vector_search import min_percentile_choice

CDN_SCHEMA = "nba-cdn/1"
CDN_REPORT_SCHEMA = "nba-cdn-report/1"


@dataclass(frozen=True)
class CdnSlot:
    t: int
    demand: tuple[tuple[int, Fraction], ...]  # (customer id, w) sorted by id
    edges: frozenset[Edge]  # eligible (edge server, customer) connections
    miss: tuple[Fraction, ...]  # per server, index i-1

    @property
    def customers(self) -> tuple[int, ...]:
        return tuple(c for c, _ in self.demand)

    def weight(self, customer: int) -> Fraction:
        return dict(self.demand)[customer]


@dataclass(frozen=True)
class CdnInstance:
    """Servers ``1..n`` arranged as a rooted tree; ``parents[i-1]`` is 0 for the root."""

    n: int
    parents: tuple[int, ...]
    prices: tuple[Fraction, ...]
    caps: tuple[Fraction, ...]
    billing: BillingConfig
    slots: tuple[CdnSlot, ...]

    def __post_init__(self):
        n = self.n
        if n < 2:
            raise InputError("a CDN needs a source server and at least one edge server", "/servers/n")
        if len(self.parents) != n:
            raise InputError(f"expected {n} parent entries", "/servers/parents")
        roots = [i for i in range(1, n + 1) if self.parents[i - 1] == 0]
        if len(roots) != 1:
            raise InputError(f"server graph must have exactly one root, found {roots}", "/servers/parents")
        for i in range(1, n + 1):
            par = self.parents[i - 1]
            if par != 0 and not 1 <= par <= n:
                raise InputError(f"parent {par} of server {i} outside 1..{n}", f"/servers/parents/{i - 1}")
            seen = set()
            x = i
            while x != 0:
                if x in seen:
                    raise InputError(f"parent pointers of server {i} form a cycle", "/servers/parents")
                seen.add(x)
                x = self.parents[x - 1]
        object.__setattr__(self, "prices", positive_list(self.prices, n, "/servers/prices"))
        object.__setattr__(self, "caps", positive_list(self.caps, n, "/servers/caps"))
        if len(self.slots) != self.billing.p:
            raise InputError(f"expected {self.billing.p} slots, got {len(self.slots)}", "/slots")
        leaves = set(self.edge_servers)
        for idx, slot in enumerate(self.slots):
            where = f"/slots/{idx}"
            if slot.t != idx + 1:
                raise InputError(f"slots must be numbered 1..p, found t={slot.t}", f"{where}/t")
            ids = slot.customers
            if list(ids) != list(range(n + 1, n + 1 + len(ids))):
                raise InputError(f"customers must be numbered {n + 1}..{n + len(ids)}", f"{where}/customers")
            for c, w in slot.demand:
                if w <= 0:
                    raise InputError(f"demand of customer {c} must be positive", f"{where}/customers")
            for i, j in slot.edges:
                if i not in leaves or j not in ids:
                    raise InputError(f"edge ({i},{j}) must join an edge server to a customer", f"{where}/edges")
            if len(slot.miss) != n or any(not 0 <= r <= 1 for r in slot.miss):
                raise InputError("miss probabilities must be n values in [0, 1]", f"{where}/miss")

    @property
    def root(self) -> int:
        return self.parents.index(0) + 1

    def children(self, k: int) -> list[int]:
        return [i for i in range(1, self.n + 1) if self.parents[i - 1] == k]

    @property
    def edge_servers(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.n + 1) if not self.children(i))

    @property
    def upstream_servers(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.n + 1) if self.children(i))

    def slot(self, t: int) -> CdnSlot:
        return self.slots[t - 1]


def edge_server_loads(cdn: CdnInstance, t: int, edges: Iterable[Edge]) -> dict[int, Fraction]:
    """Per-edge-server egress; every customer must be assigned exactly once."""
    slot = cdn.slot(t)
    edges = frozenset(edges)
    foreign = sorted(edges - slot.edges)
    if foreign:
        raise PlanShapeError(f"edges {foreign} are not eligible in slot {t}", f"slots/t={t}")
    count = {c: 0 for c in slot.customers}
    loads = {i: ZERO for i in cdn.edge_servers}
    weights = dict(slot.demand)
    for i, j in edges:
        count[j] += 1
        loads[i] += weights[j]
    bad = sorted(c for c, k in count.items() if k != 1)
    if bad:
        raise PlanShapeError(f"customers {bad} are not assigned to exactly one edge server in slot {t}", f"slots/t={t}")
    return loads


def _upstream(cdn: CdnInstance, t: int, leaf_loads: Mapping[int, Fraction]) -> dict[int, Fraction]:
    miss = cdn.slot(t).miss
    est: dict[int, Fraction] = {}

    def egress(v: int) -> Fraction:
        if v in leaf_loads:
            return leaf_loads[v]
        if v not in est:
            est[v] = sum((miss[c - 1] * egress(c) for c in cdn.children(v)), ZERO)
        return est[v]

    for k in cdn.upstream_servers:
        egress(k)
    return est


def cdn_estimate_upstream(cdn: CdnInstance, edges: Iterable[Edge], t: int) -> dict[int, Fraction]:
    """Estimated egress ``b_k`` of every source/central server in slot ``t``."""
    return _upstream(cdn, t, edge_server_loads(cdn, t, edges))


def slot_loads(cdn: CdnInstance, t: int, edges: Iterable[Edge]) -> dict[int, Fraction]:
    leaf = edge_server_loads(cdn, t, edges)
    return {**leaf, **_upstream(cdn, t, leaf)}


def _over_capacity(cdn: CdnInstance, loads: Mapping[int, Fraction]) -> list[int]:
    return sorted(v for v, x in loads.items() if x > cdn.caps[v - 1])


def cdn_cost(cdn: CdnInstance, plan: Mapping[int, Iterable[Edge]]) -> Fraction:
    """Egress-only percentile cost of all servers for a full assignment."""
    series = {v: [ZERO] * cdn.billing.p for v in range(1, cdn.n + 1)}
    for t in range(1, cdn.billing.p + 1):
        for v, x in slot_loads(cdn, t, plan.get(t, ())).items():
            series[v][t - 1] = x
    k = cdn.billing.k
    return sum((cdn.prices[v - 1] * charged_value(s, k) for v, s in series.items()), ZERO)


def cdn_capacity_violations(cdn: CdnInstance, plan: Mapping[int, Iterable[Edge]]) -> list[tuple[int, int]]:
    """(slot, server) pairs whose measured or estimated egress exceeds capacity."""
    return [
        (t, v)
        for t in range(1, cdn.billing.p + 1)
        for v in _over_capacity(cdn, slot_loads(cdn, t, plan.get(t, ())))
    ]


def _slot_options(cdn: CdnInstance, t: int, limit: int):
    slot = cdn.slot(t)
    eligible = [sorted(i for i, j in slot.edges if j == c) for c in slot.customers]
    if any(not e for e in eligible):
        return None
    total = 1
    for e in eligible:
        total *= len(e)
    if total > limit:
        raise ResourceLimitError(f"slot {t} has {total} assignments, limit {limit}", {"slot": t, "assignments": total})
    options, plans, seen = [], [], set()
    for pick in itertools.product(*eligible):
        edges = frozenset(zip(pick, slot.customers))
        loads = slot_loads(cdn, t, edges)
        if _over_capacity(cdn, loads):
            continue
        key = tuple(sorted(loads.items()))
        if key in seen:
            continue
        seen.add(key)
        options.append(loads)
        plans.append(edges)
    return options, plans


def _solve_exact(cdn: CdnInstance, limit: int, max_nodes: int):
    per_slot = []
    for t in range(1, cdn.billing.p + 1):
        res = _slot_options(cdn, t, limit)
        if res is None or not res[0]:
            return None, {"blocked_slot": t}
        per_slot.append(res)
    prices = {v: cdn.prices[v - 1] for v in range(1, cdn.n + 1)}
    cost, choice, visited = min_percentile_choice([o for o, _ in per_slot], prices, cdn.billing.k, max_nodes)
    stats = {"options": [len(o) for o, _ in per_slot], "search_nodes": visited}
    if choice is None:
        return None, stats
    return {t + 1: per_slot[t][1][idx] for t, idx in enumerate(choice)}, stats


def _solve_greedy(cdn: CdnInstance):
    p, k = cdn.billing.p, cdn.billing.k
    series = {v: [ZERO] * p for v in range(1, cdn.n + 1)}
    plan: dict[int, frozenset[Edge]] = {}
    for t in range(1, p + 1):
        slot = cdn.slot(t)
        weights = dict(slot.demand)
        leaf = {i: ZERO for i in cdn.edge_servers}
        chosen: list[Edge] = []
        for c in sorted(slot.customers, key=lambda c: (-weights[c], c)):
            best = None
            for i in sorted(i for i, j in slot.edges if j == c):
                trial = dict(leaf)
                trial[i] += weights[c]
                loads = {**trial, **_upstream(cdn, t, trial)}
                if _over_capacity(cdn, loads):
                    continue
                delta = ZERO
                for v, x in loads.items():
                    if x != series[v][t - 1]:
                        col = list(series[v])
                        col[t - 1] = x
                        delta += cdn.prices[v - 1] * (charged_value(col, k) - charged_value(series[v], k))
                if best is None or (delta, i) < best[:2]:
                    best = (delta, i, loads, trial)
            if best is None:
                return None, {"blocked": [t, c]}
            _, i, loads, leaf = best
            chosen.append((i, c))
            for v, x in loads.items():
                series[v][t - 1] = x
        plan[t] = frozenset(chosen)
    return plan, {}


def cdn_solve(cdn: CdnInstance, strategy: str = "exact", *, max_assignments: int = 200_000,
              max_nodes: int = 2_000_000) -> ScenarioReport:
    """Assign every customer to one eligible edge server at minimum cost.

    ``exact`` enumerates per-slot assignments and searches the slot product;
    ``greedy`` assigns customers by descending demand to the edge server
    with the smallest marginal percentile cost (ties by server id).
    """
    started = time.perf_counter()
    if strategy == "exact":
        plan, stats = _solve_exact(cdn, max_assignments, max_nodes)
        status = PROVEN_OPTIMAL
    elif strategy == "greedy":
        plan, stats = _solve_greedy(cdn)
        status = HEURISTIC
    else:
        raise InputError(f"unknown CDN strategy {strategy!r}", "strategy")
    if plan is None:
        return ScenarioReport(CDN_REPORT_SCHEMA, INFEASIBLE, None, {}, stats, time.perf_counter() - started)
    assignment = {t: {e: 1 for e in edges} for t, edges in plan.items()}
    return ScenarioReport(CDN_REPORT_SCHEMA, status, cdn_cost(cdn, plan), assignment, stats, time.perf_counter() - started)


def cdn_lower_generic(cdn: CdnInstance, plan: Mapping[int, Iterable[Edge]]) -> tuple[Instance, AllocationPlan]:
    """Embed a CDN assignment into the generic model as one multicast per slot.

    The root is the source, customers with an assignment are destinations,
    and the plan is the union of the tree paths from the root to every used
    edge server plus the assignment edges. Unit weight, no capacities: the
    embedding is structural, for checking which generic constraint families
    the CDN structure satisfies by construction.
    """
    top = max([cdn.n] + [c for s in cdn.slots for c in s.customers])
    tree_edges = {(cdn.parents[i - 1], i) for i in range(1, cdn.n + 1) if cdn.parents[i - 1]}
    demands, chosen, base = [], {}, set(tree_edges)
    for slot in cdn.slots:
        assigned = sorted(frozenset(plan.get(slot.t, ())))
        edges = frozenset(tree_edges | slot.edges)
        base |= edges
        dests = frozenset(c for _, c in assigned)
        used: set[Edge] = set(assigned)
        for i, _ in assigned:
            x = i
            while cdn.parents[x - 1]:
                used.add((cdn.parents[x - 1], x))
                x = cdn.parents[x - 1]
        demands.append(SlotDemand(slot.t, edges, (Source(cdn.root, Fraction(1), dests),)))
        chosen[(slot.t, cdn.root)] = used
    network = Network(top, [Fraction(1)] * top, [None] * top, [None] * top, frozenset(base))
    rules = BillingRules(billed_nodes=frozenset(range(1, cdn.n + 1)), bill_ingress=False)
    return Instance(network, cdn.billing, tuple(demands), rules), AllocationPlan(chosen)


def cdn_to_json(cdn: CdnInstance) -> dict:
    return {
        "schema": CDN_SCHEMA,
        "servers": {
            "n": cdn.n,
            "parents": list(cdn.parents),
            "prices": [rational_to_json(u) for u in cdn.prices],
            "caps": [rational_to_json(c) for c in cdn.caps],
        },
        "billing": billing_to_json(cdn.billing),
        "slots": [
            {
                "t": s.t,
                "customers": [{"id": c, "w": rational_to_json(w)} for c, w in s.demand],
                "edges": [list(e) for e in sorted(s.edges)],
                "miss": [rational_to_json(r) for r in s.miss],
            }
            for s in cdn.slots
        ],
    }


def cdn_from_json(doc: dict) -> CdnInstance:
    check_schema(doc, CDN_SCHEMA)
    servers = require(doc, "servers", "")
    n = require(servers, "n", "/servers")
    slots = []
    for idx, s in enumerate(require(doc, "slots", "")):
        where = f"/slots/{idx}"
        demand = tuple(
            sorted(
                (require(c, "id", f"{where}/customers/{k}"), to_rational(require(c, "w", f"{where}/customers/{k}"), f"{where}/customers/{k}/w"))
                for k, c in enumerate(require(s, "customers", where))
            )
        )
        slots.append(
            CdnSlot(
                t=require(s, "t", where),
                demand=demand,
                edges=frozenset(edge_list(require(s, "edges", where), f"{where}/edges")),
                miss=tuple(to_rational(r, f"{where}/miss/{k}") for k, r in enumerate(require(s, "miss", where))),
            )
        )
    return CdnInstance(
        n=n,
        parents=tuple(int_list(require(servers, "parents", "/servers"), "/servers/parents")),
        prices=require(servers, "prices", "/servers"),
        caps=require(servers, "caps", "/servers"),
        billing=billing_from_json(require(doc, "billing", "")),
        slots=tuple(slots),
    )
