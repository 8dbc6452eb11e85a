"""Enumeration of covering out-arborescences for one (slot, source) pair."""

from __future__ import annotations

import itertools

from nba.errors import ResourceLimitError
from nba.feasibility import pair_violations
from nba.model import Edge, Instance, Source


def covering_arborescences(instance: Instance, t: int, src: Source, limit: int = 100_000) -> list[frozenset[Edge]]:
    """All out-arborescences rooted at the source that span its destinations.

    Every leaf is a destination, so each tree is minimal: removing any edge
    disconnects a destination. A tree is identified by its node set plus a
    parent choice for every non-root node; node sets are enumerated as the
    terminals plus a subset of relays, which yields every tree exactly once.
    """
    s, dests = src.s, src.dests
    if not dests:
        return [frozenset()]
    slot_edges = instance.slot(t).edges
    in_nbrs: dict[int, list[int]] = {}
    for i, j in sorted(slot_edges):
        if j != s:
            in_nbrs.setdefault(j, []).append(i)
    nodes = {v for e in slot_edges for v in e}
    if not dests <= nodes:
        return []
    relays = sorted(nodes - dests - {s})
    terminals = sorted(dests)
    found: list[frozenset[Edge]] = []
    for size in range(len(relays) + 1):
        for chosen in itertools.combinations(relays, size):
            members = {s, *terminals, *chosen}
            children = sorted(members - {s})
            options = [[p for p in in_nbrs.get(v, ()) if p in members] for v in children]
            if any(not o for o in options):
                continue
            for parents in itertools.product(*options):
                parent = dict(zip(children, parents))
                if not _rooted(parent, s):
                    continue
                used = set(parents)
                if any(r not in used for r in chosen):
                    continue
                tree = frozenset((parent[v], v) for v in children)
                if pair_violations(instance, t, src, tree):
                    continue
                found.append(tree)
                if len(found) > limit:
                    raise ResourceLimitError(
                        f"more than {limit} candidate trees for slot {t} source {s}",
                        {"slot": t, "source": s, "trees": len(found)},
                    )
    return found


def _rooted(parent: dict[int, int], root: int) -> bool:
    """Following parent pointers from every node reaches ``root`` (no cycles)."""
    good = {root}
    for v in parent:
        path = []
        x = v
        while x not in good:
            if x in path:
                return False
            path.append(x)
            x = parent[x]
        good.update(path)
    return True
