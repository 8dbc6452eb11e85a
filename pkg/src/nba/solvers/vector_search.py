"""Exact search choosing one per-slot load vector for each slot.

Used by scenario solvers whose slots decouple except through the billing
percentile: each slot offers a list of candidate load vectors (node to
load) and the objective is ``sum_i price_i * charged(series_i)``.

The search fixes a charge level per node. A level vector is reachable
when every slot has an option within the levels, except for at most
``k`` slots per node where that node may exceed its level. Reachability
only gets easier as levels rise, so levels are tried in ascending order
per node with the remaining nodes left unbounded, and a branch stops as
soon as its price bound meets the best cost found.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from nba.cost import ZERO, charged_value
from nba.errors import ResourceLimitError


def _pareto(rows: list[tuple]) -> list[int]:
    """Indices of rows not dominated by an earlier-or-smaller row, first occurrence kept."""
    keep: list[int] = []
    for i, row in enumerate(rows):
        if any(all(a <= b for a, b in zip(rows[j], row)) for j in keep):
            continue
        keep = [j for j in keep if not all(a <= b for a, b in zip(row, rows[j]))]
        keep.append(i)
    return sorted(keep)


def min_percentile_choice(
    options: Sequence[Sequence[Mapping[int, Fraction]]],
    prices: Mapping[int, Fraction],
    k: int,
    max_nodes: int = 2_000_000,
    incumbent: Fraction | None = None,
) -> tuple[Fraction | None, tuple[int, ...] | None, int]:
    """Return ``(cost, option index per slot, nodes visited)``.

    ``cost`` is ``None`` when no slot combination beats ``incumbent``
    (or when some slot has no options). The search order is fixed, so
    results are deterministic.
    """
    p = len(options)
    if any(not opts for opts in options):
        return None, None, 0
    nodes = sorted(prices)
    rows = [[tuple(o.get(v, ZERO) for v in nodes) for o in opts] for opts in options]
    kept = [_pareto(r) for r in rows]
    levels = [sorted({ZERO} | {rows[t][i][a] for t in range(p) for i in kept[t]}) for a in range(len(nodes))]
    floor = [charged_value([min(rows[t][i][a] for i in kept[t]) for t in range(p)], k) for a in range(len(nodes))]
    order = sorted(range(len(nodes)), key=lambda a: (-prices[nodes[a]], a))
    state = {"best": incumbent, "choice": None, "visited": 0}

    def tick():
        state["visited"] += 1
        if state["visited"] > max_nodes:
            raise ResourceLimitError(f"slot search exceeded {max_nodes} nodes", {"search_nodes": state["visited"]})

    def reachable(cap):
        """Option index per slot within ``cap`` outside at most k free slots per node, or None."""
        tick()
        choice: dict[int, int] = {}
        hard = []
        for t in range(p):
            sets: dict[frozenset, int] = {}
            for i in kept[t]:
                over = frozenset(a for a in range(len(nodes)) if cap[a] is not None and rows[t][i][a] > cap[a])
                if not over:
                    choice[t] = i
                    break
                sets.setdefault(over, i)
            else:
                minimal = [(s, i) for s, i in sets.items() if not any(o < s for o in sets)]
                hard.append((t, sorted(minimal, key=lambda x: (len(x[0]), x[1]))))
                if len(hard) > k * len(nodes):
                    return None
        hard.sort(key=lambda h: (len(h[1]), h[0]))
        budget = [k] * len(nodes)

        def assign(d):
            if d == len(hard):
                return True
            tick()
            t, sets = hard[d]
            for over, i in sets:
                if all(budget[a] > 0 for a in over):
                    for a in over:
                        budget[a] -= 1
                    choice[t] = i
                    if assign(d + 1):
                        return True
                    for a in over:
                        budget[a] += 1
            return False

        return choice if assign(0) else None

    def actual(choice):
        return sum(
            (prices[v] * charged_value([rows[t][choice[t]][a] for t in range(p)], k) for a, v in enumerate(nodes)),
            ZERO,
        )

    cap: list[Fraction | None] = [None] * len(nodes)

    def search(d, spent):
        a = order[d]
        rest = sum((prices[nodes[b]] * floor[b] for b in order[d + 1:]), ZERO)
        price = prices[nodes[a]]
        for level in levels[a]:
            if level < floor[a]:
                continue
            if state["best"] is not None and spent + price * level + rest >= state["best"]:
                break
            cap[a] = level
            choice = reachable(cap)
            if choice is None:
                continue
            if d + 1 == len(order):
                cost = actual(choice)
                if state["best"] is None or cost < state["best"]:
                    state["best"], state["choice"] = cost, choice
                break
            search(d + 1, spent + price * level)
        cap[a] = None

    if nodes:
        search(0, ZERO)
    elif incumbent is None or incumbent > 0:
        state["best"], state["choice"] = ZERO, {t: 0 for t in range(p)}
    if state["choice"] is None:
        return None, None, state["visited"]
    return state["best"], tuple(state["choice"][t] for t in range(p)), state["visited"]
