"""Hill climbing over feasible pruned plans."""

from __future__ import annotations

import time

from nba.cost import total_cost
from nba.errors import PreconditionError
from nba.feasibility import check_feasible, pair_violations, prune_plan
from nba.model import AllocationPlan, Edge, Instance
from nba.solvers.greedy import build_tree
from nba.solvers.report import HEURISTIC, SolveReport
from nba.solvers.state import LoadState


def _subtree(edges: frozenset[Edge], root: int) -> set[int]:
    children: dict[int, list[int]] = {}
    for i, j in edges:
        children.setdefault(i, []).append(j)
    seen = {root}
    stack = [root]
    while stack:
        for c in children.get(stack.pop(), ()):
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return seen


def _trim(edges: set[Edge], dests) -> None:
    while True:
        tails = {i for i, _ in edges}
        dangling = [e for e in edges if e[1] not in dests and e[1] not in tails]
        if not dangling:
            return
        edges.difference_update(dangling)


def _reattach_moves(instance: Instance, t: int, s: int, dests, edges: frozenset[Edge]):
    """Candidate trees obtained by hanging one subtree under a new parent."""
    slot_edges = instance.slot(t).edges
    parent = {j: i for i, j in edges}
    members = {s} | set(parent)
    for v in sorted(parent):
        below = _subtree(edges, v)
        for q in sorted(members - below):
            if q == parent[v] or (q, v) not in slot_edges:
                continue
            new = set(edges)
            new.discard((parent[v], v))
            new.add((q, v))
            _trim(new, dests)
            yield frozenset(new)


def _move_ok(instance, state, t, src, old, new) -> bool:
    if pair_violations(instance, t, src, new):
        return False
    state.apply(t, src.w, old, -1)
    ok = state.fits(t, src.w, new)
    state.apply(t, src.w, old, +1)
    return ok


def _swap_delta(state, t, w, old, new):
    state.apply(t, w, old, -1)
    gain = state.delta(t, w, new)
    state.apply(t, w, old, +1)
    loss = state.delta(t, w, old, -1)
    return gain + loss


def improve_local(instance: Instance, plan: AllocationPlan, budget: int = 10_000) -> SolveReport:
    """Improve a feasible plan by strictly cost-decreasing moves.

    Moves, tried in order until none applies or ``budget`` moves are spent:
    redundant in-edge deletion (via pruning), reattaching a subtree under a
    different parent, and rerouting the trees that load a charged node in
    its peak slot so that node stays out of that slot. Cost never increases.
    """
    started = time.perf_counter()
    if check_feasible(instance, plan):
        raise PreconditionError("improve_local requires a feasible plan", details=check_feasible(instance, plan))
    trace = [total_cost(instance, plan)]
    current = prune_plan(instance, plan)
    moves = {"delete": plan.edge_count() - current.edge_count(), "reattach": 0, "reroute": 0}
    trace.append(total_cost(instance, current))
    state = LoadState(instance, current)
    trees = {(t, src.s): current.edges(t, src.s) for t, src in instance.pairs()}
    used = 0
    while used < budget:
        step = _first_improvement(instance, state, trees)
        if step is None:
            break
        kind, (t, src), new = step
        old = trees[(t, src.s)]
        state.apply(t, src.w, old, -1)
        state.apply(t, src.w, new, +1)
        trees[(t, src.s)] = new
        moves[kind] += 1
        used += 1
        trace.append(state.total())
    result = AllocationPlan(trees)
    cost = total_cost(instance, result)
    assert cost == trace[-1] and not check_feasible(instance, result)
    stats = {"moves": moves, "cost_trace": [str(c) for c in trace]}
    return SolveReport(result, cost, HEURISTIC, stats, time.perf_counter() - started)


def _first_improvement(instance, state: LoadState, trees):
    for t, src in instance.pairs():
        old = trees[(t, src.s)]
        if not old:
            continue
        for new in _reattach_moves(instance, t, src.s, src.dests, old):
            if _move_ok(instance, state, t, src, old, new) and _swap_delta(state, t, src.w, old, new) < 0:
                return "reattach", (t, src), new
    # peak rerouting: keep the costliest nodes out of their charged slots
    k = state.k
    nodes = sorted(instance.network.nodes, key=lambda i: (-state.node_cost(i), i))
    for i in nodes:
        if not state.node_cost(i):
            break
        loads = [max(a, b) if instance.rules.bill_ingress else a for a, b in zip(state.out[i], state.inn[i])]
        charge = sorted(loads, reverse=True)[k] if k < len(loads) else 0
        for col, load in enumerate(loads):
            if load != charge:
                continue
            t = col + 1
            for src in instance.slot(t).sources:
                old = trees[(t, src.s)]
                if i == src.s or not any(i in e for e in old):
                    continue
                state.apply(t, src.w, old, -1)
                new = build_tree(instance, state, t, src, forbidden=frozenset({i}))
                if new is not None:
                    state.apply(t, src.w, new, -1)
                state.apply(t, src.w, old, +1)
                if new is None or new == old or pair_violations(instance, t, src, new):
                    continue
                if _move_ok(instance, state, t, src, old, new) and _swap_delta(state, t, src.w, old, new) < 0:
                    return "reroute", (t, src), new
    return None
