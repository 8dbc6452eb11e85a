"""Percentile-aware greedy construction of per-source trees."""

from __future__ import annotations

import heapq
import time
from fractions import Fraction

from nba.cost import total_cost
from nba.feasibility import check_feasible
from nba.model import AllocationPlan, Edge, Instance, Source
from nba.prng import SplitMix64
from nba.solvers.report import HEURISTIC, INFEASIBLE, SolveReport
from nba.solvers.state import LoadState


def _cheapest_paths(instance, state, t, src, tree_nodes, tree_edges, forbidden):
    """Dijkstra from the current tree; edge weight = exact marginal cost of that edge alone."""
    s, w = src.s, src.w
    ingest = instance.rules.ingest_nodes
    ingest_used = ingest is not None and any(i == s and j in ingest for i, j in tree_edges)
    adj: dict[int, list[int]] = {}
    for i, j in sorted(instance.slot(t).edges):
        adj.setdefault(i, []).append(j)
    best: dict[int, tuple] = {}
    heap = [(Fraction(0), (), v) for v in sorted(tree_nodes)]
    heapq.heapify(heap)
    settled = set()
    while heap:
        cost, path, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if u not in tree_nodes:
            best[u] = (cost, path)
        if u in forbidden and u not in tree_nodes:
            continue
        for v in adj.get(u, ()):
            if v in tree_nodes or v in settled or v == s:
                continue
            if v in forbidden and v not in src.dests:
                continue
            e = (u, v)
            if ingest is not None and u == s and v in ingest and ingest_used:
                continue
            if not state.fits(t, w, [e]):
                continue
            heapq.heappush(heap, (cost + state.delta(t, w, [e]), path + (e,), v))
    return best


def build_tree(
    instance: Instance,
    state: LoadState,
    t: int,
    src: Source,
    forbidden: frozenset[int] = frozenset(),
) -> frozenset[Edge] | None:
    """Grow a covering tree for one pair by repeated cheapest-path attachment.

    ``state`` is updated in place with the committed edges. Returns ``None``
    (leaving ``state`` untouched) when some destination cannot be attached.
    Nodes in ``forbidden`` may only appear as destinations.
    """
    tree_nodes = {src.s}
    tree_edges: list[Edge] = []
    remaining = set(src.dests)
    while remaining:
        paths = _cheapest_paths(instance, state, t, src, tree_nodes, tree_edges, forbidden)
        options = [(paths[d][0], paths[d][1], d) for d in sorted(remaining) if d in paths]
        if not options:
            state.apply(t, src.w, tree_edges, -1)
            return None
        _, path, _ = min(options)
        if not state.fits(t, src.w, path):
            # two edges of the path share a capacity-limited node
            state.apply(t, src.w, tree_edges, -1)
            return None
        state.apply(t, src.w, path)
        tree_edges.extend(path)
        for i, j in path:
            tree_nodes.add(j)
            remaining.discard(j)
    return frozenset(tree_edges)


def source_order(instance: Instance, t: int, seed: int) -> list[Source]:
    """Sources by descending weight; equal weights in a seed-determined order."""
    rng = SplitMix64(seed).split(f"slot-{t}")
    sources = list(instance.slot(t).sources)
    rank = {src.s: rng.next_u64() for src in sources}
    if seed == 0:
        rank = {src.s: src.s for src in sources}
    return sorted(sources, key=lambda src: (-src.w, rank[src.s], src.s))


def solve_greedy(instance: Instance, seed: int = 0) -> SolveReport:
    """Slot-by-slot greedy: each source's tree is grown by cheapest marginal cost.

    Marginal costs are exact percentile-billing deltas given everything
    allocated so far, so slots that fall into a node's free top samples
    look cheap. Seed 0 breaks weight ties by source id.
    """
    started = time.perf_counter()
    state = LoadState(instance)
    chosen: dict[tuple[int, int], frozenset[Edge]] = {}
    attached = 0
    for d in instance.demands:
        for src in source_order(instance, d.t, seed):
            if not src.dests:
                continue
            tree = build_tree(instance, state, d.t, src)
            if tree is None:
                stats = {"trees_built": attached, "blocked_pair": [d.t, src.s]}
                return SolveReport(AllocationPlan(), None, INFEASIBLE, stats, time.perf_counter() - started)
            chosen[(d.t, src.s)] = tree
            attached += 1
    plan = AllocationPlan(chosen)
    if check_feasible(instance, plan):
        return SolveReport(AllocationPlan(), None, INFEASIBLE, {"trees_built": attached}, time.perf_counter() - started)
    return SolveReport(plan, total_cost(instance, plan), HEURISTIC, {"trees_built": attached}, time.perf_counter() - started)
