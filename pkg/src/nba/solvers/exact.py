"""Exact desk-scale solver: branch and bound over per-pair arborescences.

Optimal plans can be taken to be out-arborescences per (slot, source), so
the search space is the product of each pair's covering trees. Loads are
monotone in the chosen edges and the percentile charge is monotone in the
loads, which makes the cost of "assigned trees plus the unavoidable minimum
load of every unassigned pair" an admissible lower bound.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from nba.cost import ZERO, charged_value, total_cost
from nba.errors import ResourceLimitError
from nba.feasibility import check_feasible
from nba.model import AllocationPlan, Instance
from nba.solvers.report import INFEASIBLE, PROVEN_OPTIMAL, SolveReport
from nba.solvers.trees import covering_arborescences


@dataclass(frozen=True)
class ExactLimits:
    max_trees_per_pair: int = 20_000
    max_search_nodes: int = 2_000_000
    max_pairs: int = 64
    use_heuristic_incumbent: bool = True


@dataclass
class _Pair:
    t: int
    s: int
    w: Fraction
    trees: list  # frozensets of edges
    out_counts: list  # per tree: {node: count}
    in_counts: list
    min_out: dict
    min_in: dict


class _Search:
    def __init__(self, instance: Instance, pairs: list[_Pair], max_nodes: int):
        self.instance = instance
        self.pairs = pairs
        self.max_nodes = max_nodes
        self.k = instance.billing.k
        net = instance.network
        self.rules = instance.rules
        self.nodes = list(net.nodes)
        n, p = net.n, instance.p
        self.out = [[ZERO] * p for _ in range(n + 1)]
        self.inn = [[ZERO] * p for _ in range(n + 1)]
        for pr in pairs:
            for v, c in pr.min_out.items():
                self.out[v][pr.t - 1] += pr.w * c
            for v, c in pr.min_in.items():
                self.inn[v][pr.t - 1] += pr.w * c
        self.node_cost = [ZERO] * (n + 1)
        for v in self.nodes:
            self.node_cost[v] = self._cost(v)
        self.bound = sum(self.node_cost, ZERO)
        # loads every tree choice shares must fit on their own
        self.base_ok = all(self._capacity_ok(self.nodes, col) for col in range(p))
        self.visited = 0
        self.best_cost: Fraction | None = None
        self.best_choice: tuple | None = None

    def _cost(self, v: int) -> Fraction:
        if not self.rules.billed(v):
            return ZERO
        charge = charged_value(self.out[v], self.k)
        if self.rules.bill_ingress:
            charge = max(charge, charged_value(self.inn[v], self.k))
        return self.instance.network.price(v) * charge

    def _shift(self, pr: _Pair, idx: int, sign: int):
        """Move pair ``pr`` between its minimum load and tree ``idx``; return touched nodes."""
        col = pr.t - 1
        dw = pr.w if sign > 0 else -pr.w
        touched = set()
        for v, c in pr.out_counts[idx].items():
            extra = c - pr.min_out.get(v, 0)
            if extra:
                self.out[v][col] += dw * extra
                touched.add(v)
        for v, c in pr.in_counts[idx].items():
            extra = c - pr.min_in.get(v, 0)
            if extra:
                self.inn[v][col] += dw * extra
                touched.add(v)
        return touched

    def _capacity_ok(self, touched, col: int) -> bool:
        net = self.instance.network
        for v in touched:
            cap = net.egress_cap(v)
            if cap is not None and self.out[v][col] > cap:
                return False
            cap = net.ingress_cap(v)
            if cap is not None and self.inn[v][col] > cap:
                return False
        return True

    def _try(self, pr: _Pair, idx: int):
        """Apply tree ``idx``; return (bound, saved costs) or None when capacity fails."""
        touched = self._shift(pr, idx, +1)
        if not self._capacity_ok(touched, pr.t - 1):
            self._shift(pr, idx, -1)
            return None
        saved = {v: self.node_cost[v] for v in touched}
        for v in touched:
            self.node_cost[v] = self._cost(v)
        bound = self.bound + sum(self.node_cost[v] - saved[v] for v in touched)
        return bound, saved

    def _undo(self, pr: _Pair, idx: int, saved: dict):
        self._shift(pr, idx, -1)
        for v, c in saved.items():
            self.node_cost[v] = c

    def run(self, incumbent: Fraction | None, first_level: list[int] | None = None):
        self.best_cost = incumbent
        self.best_choice = None
        if self.base_ok:
            self._dfs(0, [], first_level)
        return self.best_cost, self.best_choice, self.visited

    def _dfs(self, depth: int, choice: list, restrict: list[int] | None = None):
        if depth == len(self.pairs):
            if self.best_cost is None or self.bound < self.best_cost:
                self.best_cost = self.bound
                self.best_choice = tuple(choice)
            return
        pr = self.pairs[depth]
        indices = restrict if restrict is not None else range(len(pr.trees))
        scored = []
        for idx in indices:
            self.visited += 1
            if self.visited > self.max_nodes:
                raise ResourceLimitError(
                    f"exact search exceeded {self.max_nodes} nodes",
                    {"search_nodes": self.visited, "pairs": len(self.pairs)},
                )
            res = self._try(pr, idx)
            if res is None:
                continue
            bound, saved = res
            self._undo(pr, idx, saved)
            if self.best_cost is None or bound < self.best_cost:
                scored.append((bound, idx))
        scored.sort()
        for bound, idx in scored:
            if self.best_cost is not None and bound >= self.best_cost:
                break
            _, saved = self._try(pr, idx)
            prev = self.bound
            self.bound = bound
            choice.append(idx)
            self._dfs(depth + 1, choice)
            choice.pop()
            self.bound = prev
            self._undo(pr, idx, saved)


def _counts(tree):
    out: dict[int, int] = {}
    inn: dict[int, int] = {}
    for i, j in tree:
        out[i] = out.get(i, 0) + 1
        inn[j] = inn.get(j, 0) + 1
    return out, inn


def _build_pairs(instance: Instance, limits: ExactLimits):
    pairs: list[_Pair] = []
    total_trees = 0
    net = instance.network
    for t, src in instance.pairs():
        if not src.dests:
            continue
        trees = covering_arborescences(instance, t, src, limits.max_trees_per_pair)
        total_trees += len(trees)
        keep = []
        for tree in trees:
            out, inn = _counts(tree)
            if any(net.egress_cap(v) is not None and src.w * c > net.egress_cap(v) for v, c in out.items()):
                continue
            if any(net.ingress_cap(v) is not None and src.w * c > net.ingress_cap(v) for v, c in inn.items()):
                continue
            keep.append((tree, out, inn))
        if not keep:
            return None, total_trees, (t, src.s)
        keep.sort(key=lambda x: (len(x[0]), sorted(x[0])))
        outs = [x[1] for x in keep]
        ins = [x[2] for x in keep]
        min_out = {v: min(o.get(v, 0) for o in outs) for v in set().union(*outs)}
        min_in = {v: min(o.get(v, 0) for o in ins) for v in set().union(*ins)}
        pairs.append(
            _Pair(t, src.s, src.w, [x[0] for x in keep], outs, ins,
                  {v: c for v, c in min_out.items() if c}, {v: c for v, c in min_in.items() if c})
        )
    if len(pairs) > limits.max_pairs:
        raise ResourceLimitError(f"{len(pairs)} (slot, source) pairs exceed the limit {limits.max_pairs}",
                                 {"pairs": len(pairs)})
    pairs.sort(key=lambda pr: (len(pr.trees), pr.t, pr.s))
    return pairs, total_trees, None


def _worker(args):
    instance, pairs, max_nodes, incumbent, first = args
    return _Search(instance, pairs, max_nodes).run(incumbent, first)


def solve_exact(instance: Instance, limits: ExactLimits = ExactLimits(), workers: int = 1) -> SolveReport:
    """Proven-optimal plan, or an ``Infeasible`` report.

    Raises :class:`ResourceLimitError` when the tree enumeration or the
    search exceeds ``limits``. With ``workers > 1`` the first branching
    level is split across processes; the optimum value is unaffected.
    """
    started = time.perf_counter()
    pairs, total_trees, blocked = _build_pairs(instance, limits)
    if pairs is None:
        return SolveReport(
            AllocationPlan(), None, INFEASIBLE,
            {"trees_enumerated": total_trees, "search_nodes": 0, "blocked_pair": list(blocked)},
            time.perf_counter() - started,
        )
    incumbent_plan, incumbent_cost = None, None
    if limits.use_heuristic_incumbent:
        from nba.solvers.greedy import solve_greedy
        from nba.solvers.local import improve_local

        greedy = solve_greedy(instance)
        if greedy.feasible:
            local = improve_local(instance, greedy.plan)
            incumbent_plan, incumbent_cost = local.plan, local.cost
    if workers > 1 and pairs:
        first = list(range(len(pairs[0].trees)))
        chunks = [first[k::workers] for k in range(workers) if first[k::workers]]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_worker, [(instance, pairs, limits.max_search_nodes, incumbent_cost, c) for c in chunks]))
        visited = sum(r[2] for r in results)
        improving = [r for r in results if r[1] is not None]
        best_cost, best_choice = incumbent_cost, None
        if improving:
            best_cost, best_choice, _ = min(improving, key=lambda r: (r[0], r[1]))
    else:
        best_cost, best_choice, visited = _Search(instance, pairs, limits.max_search_nodes).run(incumbent_cost)
    stats = {"trees_enumerated": total_trees, "search_nodes": visited, "pairs": len(pairs)}
    elapsed = time.perf_counter() - started
    if best_choice is None and incumbent_plan is None:
        return SolveReport(AllocationPlan(), None, INFEASIBLE, stats, elapsed)
    if best_choice is None:
        plan = incumbent_plan
    else:
        plan = AllocationPlan({(pr.t, pr.s): pr.trees[idx] for pr, idx in zip(pairs, best_choice)})
    cost = total_cost(instance, plan)
    assert cost == best_cost, (cost, best_cost)
    assert not check_feasible(instance, plan)
    return SolveReport(plan, cost, PROVEN_OPTIMAL, stats, elapsed)
