"""Constraint checking, edge-deletion pruning and tree-shape validation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from nba.cost import ZERO, load_tables
from nba.errors import PlanShapeError, PreconditionError
from nba.model import AllocationPlan, Edge, Instance, Source, rational_to_json

SOURCE_UNCOVERED = "SourceUncovered"
DESTINATION_UNCOVERED = "DestinationUncovered"
DESTINATION_UNREACHABLE = "DestinationUnreachable"
EGRESS_CAP_EXCEEDED = "EgressCapExceeded"
INGRESS_CAP_EXCEEDED = "IngressCapExceeded"
REPLICATION_FLOW_VIOLATED = "ReplicationFlowViolated"
FOREIGN_EDGE = "ForeignEdge"

VIOLATION_KINDS = (
    SOURCE_UNCOVERED,
    DESTINATION_UNCOVERED,
    DESTINATION_UNREACHABLE,
    EGRESS_CAP_EXCEEDED,
    INGRESS_CAP_EXCEEDED,
    REPLICATION_FLOW_VIOLATED,
    FOREIGN_EDGE,
)


@dataclass(frozen=True)
class Violation:
    kind: str
    t: int
    s: int | None = None
    node: int | None = None
    edge: Edge | None = None
    measured: Fraction | None = None
    bound: Fraction | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "t": self.t}
        if self.s is not None:
            out["s"] = self.s
        if self.node is not None:
            out["node"] = self.node
        if self.edge is not None:
            out["edge"] = list(self.edge)
        if self.measured is not None:
            out["measured"] = rational_to_json(self.measured)
        if self.bound is not None:
            out["bound"] = rational_to_json(self.bound)
        return out


def violations_to_json(violations: Iterable[Violation]) -> dict:
    return {"schema": "nba-violations/1", "violations": [v.to_json() for v in violations]}


def reachable_from(root: int, edges: Iterable[Edge]) -> set[int]:
    adj: dict[int, list[int]] = {}
    for i, j in edges:
        adj.setdefault(i, []).append(j)
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def _degrees(edges: Iterable[Edge]) -> tuple[dict[int, int], dict[int, int]]:
    outdeg: dict[int, int] = {}
    indeg: dict[int, int] = {}
    for i, j in edges:
        outdeg[i] = outdeg.get(i, 0) + 1
        indeg[j] = indeg.get(j, 0) + 1
    return outdeg, indeg


def pair_violations(
    instance: Instance,
    t: int,
    src: Source,
    edges: frozenset[Edge],
    *,
    require_delivery: bool = True,
    exact_destinations: bool = False,
) -> list[Violation]:
    """Per-(slot, source) constraint checks: coverage, replication, delivery.

    Capacity rows couple sources and are checked in :func:`check_feasible`.
    A source with no destinations has nothing to send and is not required
    to emit an edge.
    """
    s, dests = src.s, src.dests
    rules = instance.rules
    outdeg, indeg = _degrees(edges)
    found: list[Violation] = []
    if dests:
        if rules.ingest_nodes is not None:
            ingest = sum(1 for i, j in edges if i == s and j in rules.ingest_nodes)
            if ingest != 1:
                found.append(Violation(SOURCE_UNCOVERED, t, s, node=s, measured=Fraction(ingest), bound=Fraction(1)))
        elif outdeg.get(s, 0) < 1:
            found.append(Violation(SOURCE_UNCOVERED, t, s, node=s, measured=ZERO, bound=Fraction(1)))
    for j in sorted(dests):
        d = indeg.get(j, 0)
        if d < 1 or (exact_destinations and d != 1):
            found.append(Violation(DESTINATION_UNCOVERED, t, s, node=j, measured=Fraction(d), bound=Fraction(1)))
    nodes = sorted(set(outdeg) | set(indeg))
    for j in nodes:
        if j in dests or not rules.relay(j):
            continue
        if indeg.get(j, 0) > outdeg.get(j, 0):
            found.append(
                Violation(
                    REPLICATION_FLOW_VIOLATED, t, s, node=j,
                    measured=Fraction(indeg.get(j, 0)), bound=Fraction(outdeg.get(j, 0)),
                )
            )
    if require_delivery and dests:
        reach = reachable_from(s, edges)
        for j in sorted(dests):
            if indeg.get(j, 0) >= 1 and j not in reach:
                found.append(Violation(DESTINATION_UNREACHABLE, t, s, node=j))
    return found


def check_feasible(
    instance: Instance,
    plan: AllocationPlan,
    *,
    require_delivery: bool = True,
    exact_destinations: bool = False,
) -> list[Violation]:
    """Every constraint violation of ``plan``; an empty list means feasible.

    ``require_delivery`` additionally demands that each destination be
    reachable from its source through the chosen edges. Without it, the
    bare degree constraints accept detached cycles that "cover" a
    destination without any data ever leaving the source.
    """
    found: list[Violation] = []
    for (t, s) in plan.keys():
        if not 1 <= t <= instance.p or s not in instance.slot(t).source_ids:
            raise PlanShapeError(f"plan entry (t={t}, s={s}) is not a slot source of the instance", f"slots/t={t}/s={s}")
    clean = {}
    for (t, s), es in plan.items():
        allowed = instance.slot(t).edges
        for e in sorted(es - allowed):
            found.append(Violation(FOREIGN_EDGE, t, s, edge=e))
        clean[(t, s)] = es & allowed
    clean_plan = AllocationPlan(clean)
    out, inn = load_tables(instance, clean_plan)
    net = instance.network
    for d in instance.demands:
        t = d.t
        for src in d.sources:
            found.extend(
                pair_violations(
                    instance, t, src, clean_plan.edges(t, src.s),
                    require_delivery=require_delivery, exact_destinations=exact_destinations,
                )
            )
        for i in net.nodes:
            cap = net.egress_cap(i)
            if cap is not None and out[i][t - 1] > cap:
                found.append(Violation(EGRESS_CAP_EXCEEDED, t, node=i, measured=out[i][t - 1], bound=cap))
            cap = net.ingress_cap(i)
            if cap is not None and inn[i][t - 1] > cap:
                found.append(Violation(INGRESS_CAP_EXCEEDED, t, node=i, measured=inn[i][t - 1], bound=cap))
    found.sort(key=lambda v: (v.t, VIOLATION_KINDS.index(v.kind), v.s or 0, v.node or 0, v.edge or (0, 0)))
    return found


def _prune_pair(edges: set[Edge], s: int, dests: frozenset[int], egress: list[list[Fraction]], t: int, w: Fraction):
    def drop(e: Edge):
        edges.discard(e)
        egress[e[0]][t - 1] -= w

    for e in sorted(e for e in edges if e[1] == s):
        drop(e)
    reach = reachable_from(s, edges)
    for e in sorted(e for e in edges if e[0] not in reach):
        drop(e)
    while True:
        _, indeg = _degrees(edges)
        best = None
        for e in sorted(edges):
            i, j = e
            if indeg.get(j, 0) < 2:
                continue
            if j not in reachable_from(s, edges - {e}):
                continue
            key = (-egress[i][t - 1], i, j)
            if best is None or key < best[0]:
                best = (key, e)
        if best is None:
            break
        drop(best[1])
    # dangling relays: non-destination leaves only waste bandwidth
    while True:
        outdeg, _ = _degrees(edges)
        dangling = sorted(e for e in edges if e[1] not in dests and outdeg.get(e[1], 0) == 0)
        if not dangling:
            break
        for e in dangling:
            drop(e)


def prune_plan(instance: Instance, plan: AllocationPlan) -> AllocationPlan:
    """Delete redundant edges until every per-source subgraph is a tree.

    Per (slot, source): edges into the source and edges leaving nodes the
    source cannot reach are removed; then, while some node has two or more
    in-edges, one in-edge whose removal keeps that node reachable is deleted,
    preferring the tail with the largest current egress in that slot (ties
    by smallest tail, then head). Finally non-destination leaves are trimmed.
    Cost never increases and the result stays feasible.
    """
    violations = check_feasible(instance, plan)
    if violations:
        raise PreconditionError("prune_plan requires a feasible plan", details=violations)
    egress, _ = load_tables(instance, plan)
    pruned = {}
    for t, src in instance.pairs():
        edges = set(plan.edges(t, src.s))
        if not edges:
            continue
        _prune_pair(edges, src.s, src.dests, egress, t, src.w)
        pruned[(t, src.s)] = edges
    return AllocationPlan(pruned)


@dataclass(frozen=True)
class TreeCheck:
    ok: bool
    reason: str
    witness: tuple = ()

    def __bool__(self):
        return self.ok


def _find_directed_cycle(edges: Iterable[Edge]) -> list[int] | None:
    adj: dict[int, list[int]] = {}
    for i, j in sorted(edges):
        adj.setdefault(i, []).append(j)
    color: dict[int, int] = {}
    for start in sorted(adj):
        if color.get(start):
            continue
        stack = [(start, iter(adj.get(start, ())))]
        path = [start]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
                continue
            state = color.get(nxt, 0)
            if state == 1:
                return path[path.index(nxt):]
            if state == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(adj.get(nxt, ()))))
    return None


def has_undirected_cycle(edges: Iterable[Edge]) -> bool:
    """True if the underlying undirected multigraph contains a cycle."""
    parent: dict[int, int] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        a, b = find(i), find(j)
        if a == b:
            return True
        parent[a] = b
    return False


def is_directed_tree(instance: Instance, plan: AllocationPlan, t: int, s: int) -> TreeCheck:
    """Check that the (slot, source) subgraph is an out-arborescence rooted at s.

    Conditions are tested in order: source in-degree, directed cycles,
    reachability from the source, in-degree exactly one elsewhere. The
    first failure is reported. An empty subgraph is the trivial tree.
    """
    if not 1 <= t <= instance.p or s not in instance.slot(t).source_ids:
        return TreeCheck(False, f"(t={t}, s={s}) is not a slot source of the instance")
    edges = plan.edges(t, s)
    if not edges:
        return TreeCheck(True, "empty subgraph")
    _, indeg = _degrees(edges)
    into_source = sorted(e for e in edges if e[1] == s)
    if into_source:
        return TreeCheck(False, f"source {s} has in-degree {len(into_source)}", tuple(into_source))
    cycle = _find_directed_cycle(edges)
    if cycle:
        return TreeCheck(False, f"cycle through nodes {sorted(cycle)}", tuple(cycle))
    nodes = {i for e in edges for i in e}
    unreachable = sorted(nodes - reachable_from(s, edges))
    if unreachable:
        return TreeCheck(False, f"node {unreachable[0]} unreachable from source {s}", tuple(unreachable))
    multi = sorted(j for j, d in indeg.items() if d != 1)
    if multi:
        return TreeCheck(False, f"node {multi[0]} has in-degree {indeg[multi[0]]}", tuple(multi))
    return TreeCheck(True, "out-arborescence")
