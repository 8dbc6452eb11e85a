"""Seeded synthetic instances for the generic model and every scenario.

All randomness comes from :class:`~nba.prng.SplitMix64` streams split off
the seed by label: ``"network"`` for topology, prices and capacities,
``"slot-<t>"`` for the demands of slot ``t`` and ``"pattern"`` for the
choice of spike slots. Changing one slot's knobs therefore never shifts
the random numbers of another.

Demand patterns scale every weight of a slot by ``peak_multiplier``:
``diurnal`` in the first ``peak_slots`` slots of each ``period``-slot day,
``bursty`` in ``spike_count`` slots drawn from the pattern stream.
"""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Any

from nba.errors import InputError
from nba.model import BillingConfig, Instance, Network, SlotDemand, Source, to_rational
from nba.prng import SplitMix64
from nba.scenarios.cdn import CdnInstance, CdnSlot
from nba.scenarios.cloudwan import CloudWanInstance, CloudWanSlot
from nba.scenarios.lvdn import LvdnInstance, LvdnSlot, Producer, RtcnInstance, RtcnSlot

SCENARIOS = ("generic", "cdn", "lvdn", "rtcn", "cwan")
PATTERNS = ("uniform", "diurnal", "bursty")


@dataclass(frozen=True)
class GenSpec:
    """Generator knobs. Ranges are inclusive ``(lo, hi)`` integer pairs.

    ``n`` is the node count (generic), server count (cdn, lvdn, rtcn) or PoP
    count (cwan). ``sources`` sizes the per-slot source set, producer set,
    participant set or client set; ``dests`` sizes destination sets, viewer
    sets, CDN customer sets or RTCN group sizes. ``capacities=None`` leaves
    nodes uncapped (generic only).
    """

    seed: int = 0
    scenario: str = "generic"
    n: int = 4
    p: int = 2
    q: str = "19/20"
    density: str = "1/2"
    slot_density: str = "1"
    sources: tuple[int, int] = (1, 2)
    dests: tuple[int, int] = (1, 2)
    weights: tuple[int, int] = (1, 5)
    prices: tuple[int, int] = (1, 3)
    capacities: tuple[int, int] | None = (5, 20)
    pattern: str = "uniform"
    period: int = 24
    peak_slots: int = 0
    peak_multiplier: int = 3
    spike_count: int = 0
    repeat_structure: bool = False
    feasible: bool = True

    def __post_init__(self):
        for name in ("sources", "dests", "weights", "prices", "capacities"):
            v = getattr(self, name)
            if v is None:
                if name != "capacities":
                    raise InputError("range must not be null", name)
                continue
            if not isinstance(v, (list, tuple)) or len(v) != 2 or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
                raise InputError(f"expected an integer pair [lo, hi], got {v!r}", name)
            object.__setattr__(self, name, (v[0], v[1]))
            if v[0] > v[1] or v[0] < 0:
                raise InputError(f"range {list(v)} must satisfy 0 <= lo <= hi", name)
        for name in ("weights", "prices", "capacities"):
            v = getattr(self, name)
            if v is not None and v[0] < 1:
                raise InputError("values must be at least 1", name)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer", "seed")
        if self.scenario not in SCENARIOS:
            raise InputError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}", "scenario")
        if self.pattern not in PATTERNS:
            raise InputError(f"unknown pattern {self.pattern!r}; expected one of {PATTERNS}", "pattern")
        if not isinstance(self.n, int) or self.n < (2 if self.scenario in ("generic", "cdn") else 1):
            raise InputError(f"n={self.n} too small for scenario {self.scenario}", "n")
        if not isinstance(self.p, int) or self.p < 1:
            raise InputError("p must be a positive integer", "p")
        BillingConfig(self.p, to_rational(self.q, "q"))
        for name in ("density", "slot_density"):
            d = to_rational(getattr(self, name), name)
            if not 0 <= d <= 1:
                raise InputError(f"{name} must lie in [0, 1]", name)
        if self.peak_multiplier < 1:
            raise InputError("peak_multiplier must be at least 1", "peak_multiplier")
        if self.pattern == "diurnal" and not (0 <= self.peak_slots <= self.period and self.period >= 1):
            raise InputError("diurnal pattern needs 0 <= peak_slots <= period", "peak_slots")
        if self.pattern == "bursty" and not 0 <= self.spike_count <= self.p:
            raise InputError(f"spike_count must lie in 0..{self.p}", "spike_count")
        if self.scenario == "generic":
            if self.sources[1] > self.n:
                raise InputError(f"cannot pick {self.sources[1]} sources from {self.n} nodes", "sources")
            if self.dests[1] > self.n - 1:
                raise InputError(f"destination sets of size {self.dests[1]} exceed n-1={self.n - 1}", "dests")
        if self.scenario == "rtcn" and self.dests[0] < 2:
            raise InputError("RTCN groups need at least two participants", "dests")
        if self.scenario in ("rtcn",) and self.sources[0] < 2:
            raise InputError("RTCN slots need at least two participants", "sources")
        if self.scenario != "generic" and self.capacities is None:
            raise InputError("scenario servers must be capacitated", "capacities")

    def to_json(self) -> dict:
        doc = asdict(self)
        for name in ("sources", "dests", "weights", "prices", "capacities"):
            if doc[name] is not None:
                doc[name] = list(doc[name])
        return doc


def genspec_from_json(doc: Any) -> GenSpec:
    if not isinstance(doc, dict):
        raise InputError("generator spec must be a JSON object", "")
    known = {f.name for f in fields(GenSpec)}
    unknown = sorted(set(doc) - known - {"schema"})
    if unknown:
        raise InputError(f"unknown knobs {unknown}", f"/{unknown[0]}")
    kwargs = {k: v for k, v in doc.items() if k in known}
    for key in ("q", "density", "slot_density"):
        if key in kwargs and not isinstance(kwargs[key], str):
            kwargs[key] = str(to_rational(kwargs[key], key))
    return GenSpec(**kwargs)


def _multipliers(spec: GenSpec, root: SplitMix64) -> list[int]:
    mult = [1] * spec.p
    if spec.pattern == "diurnal":
        for t in range(spec.p):
            if t % spec.period < spec.peak_slots:
                mult[t] = spec.peak_multiplier
    elif spec.pattern == "bursty":
        rng = root.split("pattern")
        for t in rng.sample(list(range(spec.p)), spec.spike_count):
            mult[t] = spec.peak_multiplier
    return mult


def _coin(rng: SplitMix64, prob: Fraction) -> bool:
    return rng.bernoulli(prob.numerator, prob.denominator)


def _reach_tree(root: int, edges, dests) -> list[tuple[int, int]]:
    """BFS tree edges from ``root`` restricted to paths ending in ``dests``."""
    adj: dict[int, list[int]] = {}
    for i, j in sorted(edges):
        adj.setdefault(i, []).append(j)
    parent = {root: None}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in parent:
                parent[v] = u
                queue.append(v)
    used = set()
    for d in dests:
        x = d
        while parent.get(x) is not None and (parent[x], x) not in used:
            used.add((parent[x], x))
            x = parent[x]
    return sorted(used)


def generate(spec: GenSpec):
    """Build the instance described by ``spec``; equal specs give equal instances."""
    build = {
        "generic": _generic,
        "cdn": _cdn,
        "lvdn": _lvdn,
        "rtcn": _rtcn,
        "cwan": _cwan,
    }[spec.scenario]
    root = SplitMix64(spec.seed)
    return build(spec, root, _multipliers(spec, root))


def _network_basics(spec: GenSpec, rng: SplitMix64, count: int):
    prices = [rng.randint(*spec.prices) for _ in range(count)]
    caps = [rng.randint(*spec.capacities) if spec.capacities else None for _ in range(count)]
    return prices, caps


def _generic(spec: GenSpec, root: SplitMix64, mult: list[int]) -> Instance:
    n = spec.n
    net = root.split("network")
    prices, caps = _network_basics(spec, net, n)
    density = to_rational(spec.density)
    keep = to_rational(spec.slot_density)
    base = {(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j and _coin(net, density)}
    slots = []
    template = None
    for t in range(1, spec.p + 1):
        rng = root.split(f"slot-{1 if spec.repeat_structure else t}")
        if template is None or not spec.repeat_structure:
            edges = {e for e in sorted(base) if _coin(rng, keep)}
            chosen = sorted(rng.sample(list(range(1, n + 1)), rng.randint(*spec.sources)))
            srcs = []
            for s in chosen:
                w = rng.randint(*spec.weights)
                others = [j for j in range(1, n + 1) if j != s]
                dests = frozenset(rng.sample(others, rng.randint(*spec.dests)))
                srcs.append((s, w, dests))
            template = (edges, srcs)
        edges, srcs = set(template[0]), template[1]
        slots.append([edges, [(s, w * mult[t - 1], d) for s, w, d in srcs]])
    if spec.feasible:
        out_load = [[0] * spec.p for _ in range(n + 1)]
        in_load = [[0] * spec.p for _ in range(n + 1)]
        for t, (edges, srcs) in enumerate(slots):
            for s, w, dests in srcs:
                for d in sorted(dests):
                    if (s, d) not in edges and d not in _reachable(s, edges):
                        edges.add((s, d))
                for i, j in _reach_tree(s, edges, dests):
                    out_load[i][t] += w
                    in_load[j][t] += w
            base |= edges
        if spec.capacities:
            egress = [max(caps[i - 1], max(out_load[i])) for i in range(1, n + 1)]
            ingress = [max(caps[i - 1], max(in_load[i])) for i in range(1, n + 1)]
        else:
            egress = ingress = caps
    else:
        egress = ingress = caps
    network = Network(n, prices, egress, ingress, frozenset(base))
    demands = tuple(
        SlotDemand(t + 1, frozenset(edges), tuple(Source(s, Fraction(w), d) for s, w, d in srcs))
        for t, (edges, srcs) in enumerate(slots)
    )
    return Instance(network, BillingConfig(spec.p, to_rational(spec.q)), demands)


def _reachable(root, edges):
    adj: dict[int, list[int]] = {}
    for i, j in edges:
        adj.setdefault(i, []).append(j)
    seen, stack = {root}, [root]
    while stack:
        for v in adj.get(stack.pop(), ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _cdn(spec: GenSpec, root: SplitMix64, mult: list[int]) -> CdnInstance:
    n = spec.n
    net = root.split("network")
    prices, caps = _network_basics(spec, net, n)
    parents = [0] + [net.randint(1, i - 1) for i in range(2, n + 1)]
    has_child = set(parents)
    leaves = [i for i in range(1, n + 1) if i not in has_child]
    density = to_rational(spec.density)
    slots, loads = [], []
    for t in range(1, spec.p + 1):
        rng = root.split(f"slot-{1 if spec.repeat_structure else t}")
        m = rng.randint(max(1, spec.dests[0]), max(1, spec.dests[1]))
        demand = tuple((n + c, Fraction(rng.randint(*spec.weights) * mult[t - 1])) for c in range(1, m + 1))
        edges = {(i, c) for c, _ in demand for i in leaves if _coin(rng, density)}
        miss = tuple(Fraction(rng.randint(0, 10), 10) for _ in range(n))
        if spec.feasible:
            for c, _ in demand:
                if not any(j == c for _, j in edges):
                    edges.add((rng.choice(leaves), c))
        slots.append(CdnSlot(t, demand, frozenset(edges), miss))
    if spec.feasible:
        from nba.scenarios.cdn import slot_loads

        probe = CdnInstance(n, tuple(parents), tuple(prices), tuple([10**9] * n), BillingConfig(spec.p, to_rational(spec.q)), tuple(slots))
        for slot in slots:
            pick = {c: min(i for i, j in slot.edges if j == c) for c in slot.customers}
            loads.append(slot_loads(probe, slot.t, {(i, c) for c, i in pick.items()}))
        caps = [max([caps[v - 1]] + [int(-(-ld.get(v, 0) // 1)) for ld in loads]) for v in range(1, n + 1)]
    return CdnInstance(n, tuple(parents), tuple(prices), tuple(caps), BillingConfig(spec.p, to_rational(spec.q)), tuple(slots))


def _server_edges(rng, n, density):
    return {(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j and _coin(rng, density)}


def _ensure_delivery(edges: set, n: int, s: int, viewers, rng) -> int:
    """Make every viewer reachable through one ingest server; return that server."""
    ingest = sorted(j for i, j in edges if i == s and j <= n)
    if not ingest:
        a = rng.randint(1, n)
        edges.add((s, a))
    else:
        a = ingest[0]
    server_only = {(i, j) for i, j in edges if i <= n and j <= n}
    reach = _reachable(a, server_only)
    for v in sorted(viewers):
        if not any(i in reach and j == v for i, j in edges):
            edges.add((a, v))
    return a


def _server_tree_loads(edges, n, a, viewers) -> list[tuple[int, int]]:
    allowed = {(i, j) for i, j in edges if i <= n}
    return _reach_tree(a, allowed, viewers)


def _raise_caps(caps, n, loads):
    return tuple(max([caps[i - 1]] + [ld.get(i, 0) for ld in loads]) for i in range(1, n + 1))


def _lvdn(spec: GenSpec, root: SplitMix64, mult: list[int]) -> LvdnInstance:
    n = spec.n
    net = root.split("network")
    prices, caps = _network_basics(spec, net, n)
    density = to_rational(spec.density)
    backbone = _server_edges(net, n, density)
    slots, loads = [], []
    for t in range(1, spec.p + 1):
        rng = root.split(f"slot-{1 if spec.repeat_structure else t}")
        m = rng.randint(max(1, spec.sources[0]), max(1, spec.sources[1]))
        pool = list(range(n + m + 1, n + m + 1 + max(1, spec.dests[1])))
        edges = set(backbone)
        producers = []
        for s in range(n + 1, n + m + 1):
            viewers = frozenset(rng.sample(pool, rng.randint(*spec.dests)))
            producers.append(Producer(s, Fraction(rng.randint(*spec.weights) * mult[t - 1]), viewers))
            edges |= {(s, i) for i in range(1, n + 1) if _coin(rng, density)}
        edges |= {(i, v) for i in range(1, n + 1) for v in pool if _coin(rng, density)}
        load: dict[int, int] = {}
        if spec.feasible:
            for prod in producers:
                a = _ensure_delivery(edges, n, prod.s, prod.viewers, rng)
                for i, _ in _server_tree_loads(edges, n, a, prod.viewers):
                    load[i] = load.get(i, 0) + int(prod.w)
        loads.append(load)
        slots.append(LvdnSlot(t, tuple(producers), frozenset(edges)))
    if spec.feasible:
        caps = _raise_caps(caps, n, loads)
    return LvdnInstance(n, tuple(prices), tuple(caps), BillingConfig(spec.p, to_rational(spec.q)), tuple(slots))


def _rtcn(spec: GenSpec, root: SplitMix64, mult: list[int]) -> RtcnInstance:
    n = spec.n
    net = root.split("network")
    prices, caps = _network_basics(spec, net, n)
    density = to_rational(spec.density)
    backbone = _server_edges(net, n, density)
    slots, loads = [], []
    for t in range(1, spec.p + 1):
        rng = root.split(f"slot-{1 if spec.repeat_structure else t}")
        m = rng.randint(*spec.sources)
        ids = list(range(n + 1, n + m + 1))
        parts = tuple((c, Fraction(rng.randint(*spec.weights) * mult[t - 1])) for c in ids)
        order = list(ids)
        rng.shuffle(order)
        groups: list[list[int]] = []
        while order:
            size = rng.randint(*spec.dests)
            groups.append(order[:size])
            order = order[size:]
        if len(groups) > 1 and len(groups[-1]) < 2:
            groups[-2].extend(groups.pop())
        edges = set(backbone)
        for c in ids:
            edges |= {(c, i) for i in range(1, n + 1) if _coin(rng, density)}
            edges |= {(i, c) for i in range(1, n + 1) if _coin(rng, density)}
        load: dict[int, int] = {}
        if spec.feasible:
            weight = dict(parts)
            for g in groups:
                for s in g:
                    viewers = [v for v in g if v != s]
                    a = _ensure_delivery(edges, n, s, viewers, rng)
                    for i, _ in _server_tree_loads(edges, n, a, viewers):
                        load[i] = load.get(i, 0) + int(weight[s])
        loads.append(load)
        slots.append(RtcnSlot(t, parts, tuple(frozenset(g) for g in groups), frozenset(edges)))
    if spec.feasible:
        caps = _raise_caps(caps, n, loads)
    return RtcnInstance(n, tuple(prices), tuple(caps), BillingConfig(spec.p, to_rational(spec.q)), tuple(slots))


def _cwan(spec: GenSpec, root: SplitMix64, mult: list[int]) -> CloudWanInstance:
    m = spec.n
    net = root.split("network")
    prices, caps = _network_basics(spec, net, m)
    density = to_rational(spec.density)
    clients = max(1, spec.sources[1])
    slots, loads = [], []
    for t in range(1, spec.p + 1):
        rng = root.split(f"slot-{1 if spec.repeat_structure else t}")
        active = rng.randint(max(1, spec.sources[0]), clients)
        demand = tuple(
            rng.randint(*spec.weights) * mult[t - 1] if j < active else 0 for j in range(clients)
        )
        edges = {(i, m + 1 + j) for i in range(1, m + 1) for j in range(clients) if _coin(rng, density)}
        load: dict[int, int] = {}
        if spec.feasible:
            for j, d in enumerate(demand):
                mine = sorted(i for i, jj in edges if jj == m + 1 + j)
                if not mine:
                    mine = [rng.randint(1, m)]
                    edges.add((mine[0], m + 1 + j))
                load[mine[0]] = load.get(mine[0], 0) + d
        loads.append(load)
        slots.append(CloudWanSlot(t, demand, frozenset(edges)))
    if spec.feasible:
        caps = list(_raise_caps(caps, m, loads))
    return CloudWanInstance(m, m + clients, tuple(prices), tuple(caps), BillingConfig(spec.p, to_rational(spec.q)), tuple(slots))


def instance_to_document(instance) -> dict:
    """JSON document of any generated instance, dispatched on its type."""
    from nba.io import instance_to_json
    from nba.scenarios.cdn import cdn_to_json
    from nba.scenarios.cloudwan import cloudwan_to_json
    from nba.scenarios.lvdn import lvdn_to_json, rtcn_to_json

    for cls, fn in (
        (Instance, instance_to_json),
        (CdnInstance, cdn_to_json),
        (LvdnInstance, lvdn_to_json),
        (RtcnInstance, rtcn_to_json),
        (CloudWanInstance, cloudwan_to_json),
    ):
        if isinstance(instance, cls):
            return fn(instance)
    raise TypeError(f"not an instance: {type(instance).__name__}")
