"""Live video delivery and real-time communication scenarios.

Producers upload to exactly one server, servers relay among themselves and
push to viewers. Only server egress is capacity-limited and billed. Both
scenarios lower onto the generic model through :class:`BillingRules`, so
the core solvers handle them unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from nba.errors import InputError
from nba.model import (
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
    billing_from_json,
    billing_to_json,
    check_schema,
    edge_list,
    int_list,
    positive_list,
    require,
)

LVDN_SCHEMA = "nba-lvdn/1"
RTCN_SCHEMA = "nba-rtcn/1"


@dataclass(frozen=True)
class Producer:
    s: int
    w: Fraction
    viewers: frozenset[int]


@dataclass(frozen=True)
class LvdnSlot:
    t: int
    producers: tuple[Producer, ...]
    edges: frozenset[Edge]


@dataclass(frozen=True)
class RtcnSlot:
    t: int
    participants: tuple[tuple[int, Fraction], ...]  # (id, w) sorted by id
    groups: tuple[frozenset[int], ...]
    edges: frozenset[Edge]


def _check_servers(n, prices, caps):
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError("need at least one server", "/servers/n")
    return positive_list(prices, n, "/servers/prices"), positive_list(caps, n, "/servers/caps")


def _check_edges(n: int, edges, where: str):
    for i, j in edges:
        if i < 1 or j < 1 or i == j:
            raise InputError(f"invalid edge ({i},{j})", where)
        if i > n and j > n:
            raise InputError(f"edge ({i},{j}) joins two non-server nodes", where)


def _check_ids(n: int, ids, where: str):
    uniq = sorted(set(ids))
    if uniq != list(range(n + 1, n + 1 + len(uniq))):
        raise InputError(f"ids must be numbered {n + 1}..{n + len(uniq)}, got {uniq}", where)


@dataclass(frozen=True)
class LvdnInstance:
    """Servers ``1..n``; producers numbered from ``n + 1`` in every slot.

    A viewer may be any non-server node other than its own producer, so
    participants that also produce can watch each other.
    """

    n: int
    prices: tuple[Fraction, ...]
    caps: tuple[Fraction, ...]
    billing: BillingConfig
    slots: tuple[LvdnSlot, ...]

    def __post_init__(self):
        prices, caps = _check_servers(self.n, self.prices, self.caps)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "caps", caps)
        if len(self.slots) != self.billing.p:
            raise InputError(f"expected {self.billing.p} slots, got {len(self.slots)}", "/slots")
        for idx, slot in enumerate(self.slots):
            where = f"/slots/{idx}"
            if slot.t != idx + 1:
                raise InputError(f"slots must be numbered 1..p, found t={slot.t}", f"{where}/t")
            _check_ids(self.n, [p.s for p in slot.producers], f"{where}/producers")
            for k, prod in enumerate(slot.producers):
                if prod.w <= 0:
                    raise InputError("producer weight must be positive", f"{where}/producers/{k}/w")
                servers = sorted(v for v in prod.viewers if v <= self.n)
                if servers:
                    raise InputError(f"viewers {servers} are servers", f"{where}/producers/{k}/viewers")
                if prod.s in prod.viewers:
                    raise InputError(f"producer {prod.s} cannot view itself", f"{where}/producers/{k}/viewers")
            _check_edges(self.n, slot.edges, f"{where}/edges")

    @property
    def servers(self) -> frozenset[int]:
        return frozenset(range(1, self.n + 1))


@dataclass(frozen=True)
class RtcnInstance:
    n: int
    prices: tuple[Fraction, ...]
    caps: tuple[Fraction, ...]
    billing: BillingConfig
    slots: tuple[RtcnSlot, ...]

    def __post_init__(self):
        prices, caps = _check_servers(self.n, self.prices, self.caps)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "caps", caps)
        if len(self.slots) != self.billing.p:
            raise InputError(f"expected {self.billing.p} slots, got {len(self.slots)}", "/slots")
        for idx, slot in enumerate(self.slots):
            where = f"/slots/{idx}"
            if slot.t != idx + 1:
                raise InputError(f"slots must be numbered 1..p, found t={slot.t}", f"{where}/t")
            ids = [c for c, _ in slot.participants]
            if len(set(ids)) != len(ids):
                raise InputError("duplicate participant ids", f"{where}/participants")
            _check_ids(self.n, ids, f"{where}/participants")
            for c, w in slot.participants:
                if w <= 0:
                    raise InputError(f"participant {c} weight must be positive", f"{where}/participants")
            for g, group in enumerate(slot.groups):
                if len(group) < 2:
                    raise InputError("a group needs at least two participants", f"{where}/groups/{g}")
                if not group <= set(ids):
                    raise InputError(f"group members {sorted(group - set(ids))} are not participants", f"{where}/groups/{g}")
            _check_edges(self.n, slot.edges, f"{where}/edges")


def rtcn_expand(rtcn: RtcnInstance) -> LvdnInstance:
    """Every group member becomes a producer whose viewers are the rest of its group."""
    slots = []
    for slot in rtcn.slots:
        weight = dict(slot.participants)
        producers = [
            Producer(s, weight[s], frozenset(group - {s}))
            for group in slot.groups
            for s in sorted(group)
        ]
        producers.sort(key=lambda p: (p.s, sorted(p.viewers)))
        slots.append(LvdnSlot(slot.t, tuple(producers), slot.edges))
    return LvdnInstance(rtcn.n, rtcn.prices, rtcn.caps, rtcn.billing, tuple(slots))


def lvdn_lower(lvdn: LvdnInstance) -> Instance:
    """Generic instance with server-only billing, relaying and single ingest.

    Non-server nodes get unit price (never billed) and no capacities. A
    producer that appears twice in one slot, as happens when RTCN groups
    overlap, has no single-source encoding and is rejected.
    """
    n = lvdn.n
    top = n
    for slot in lvdn.slots:
        for prod in slot.producers:
            top = max([top, prod.s, *prod.viewers])
        for e in slot.edges:
            top = max(top, *e)
    demands, base = [], set()
    for idx, slot in enumerate(lvdn.slots):
        seen = set()
        for prod in slot.producers:
            if prod.s in seen:
                raise InputError(f"producer {prod.s} appears more than once in slot {slot.t}", f"/slots/{idx}/producers")
            seen.add(prod.s)
        base |= slot.edges
        sources = tuple(Source(p.s, p.w, p.viewers) for p in slot.producers)
        demands.append(SlotDemand(slot.t, slot.edges, sources))
    uncapped = [None] * (top - n)
    network = Network(
        top,
        list(lvdn.prices) + [Fraction(1)] * (top - n),
        list(lvdn.caps) + uncapped,
        [None] * top,
        frozenset(base),
    )
    servers = lvdn.servers
    rules = BillingRules(billed_nodes=servers, bill_ingress=False, relay_nodes=servers, ingest_nodes=servers)
    return Instance(network, lvdn.billing, tuple(demands), rules)


def _servers_json(n, prices, caps) -> dict:
    return {"n": n, "prices": [rational_to_json(u) for u in prices], "caps": [rational_to_json(c) for c in caps]}


def lvdn_to_json(lvdn: LvdnInstance) -> dict:
    return {
        "schema": LVDN_SCHEMA,
        "servers": _servers_json(lvdn.n, lvdn.prices, lvdn.caps),
        "billing": billing_to_json(lvdn.billing),
        "slots": [
            {
                "t": s.t,
                "producers": [
                    {"id": p.s, "w": rational_to_json(p.w), "viewers": sorted(p.viewers)} for p in s.producers
                ],
                "edges": [list(e) for e in sorted(s.edges)],
            }
            for s in lvdn.slots
        ],
    }


def rtcn_to_json(rtcn: RtcnInstance) -> dict:
    return {
        "schema": RTCN_SCHEMA,
        "servers": _servers_json(rtcn.n, rtcn.prices, rtcn.caps),
        "billing": billing_to_json(rtcn.billing),
        "slots": [
            {
                "t": s.t,
                "participants": [{"id": c, "w": rational_to_json(w)} for c, w in s.participants],
                "groups": [sorted(g) for g in s.groups],
                "edges": [list(e) for e in sorted(s.edges)],
            }
            for s in rtcn.slots
        ],
    }


def _servers_from_json(doc):
    servers = require(doc, "servers", "")
    return (
        require(servers, "n", "/servers"),
        require(servers, "prices", "/servers"),
        require(servers, "caps", "/servers"),
    )


def lvdn_from_json(doc: dict) -> LvdnInstance:
    check_schema(doc, LVDN_SCHEMA)
    n, prices, caps = _servers_from_json(doc)
    slots = []
    for idx, s in enumerate(require(doc, "slots", "")):
        where = f"/slots/{idx}"
        producers = []
        for k, p in enumerate(require(s, "producers", where)):
            pw = f"{where}/producers/{k}"
            producers.append(
                Producer(
                    require(p, "id", pw),
                    to_rational(require(p, "w", pw), f"{pw}/w"),
                    frozenset(int_list(require(p, "viewers", pw), f"{pw}/viewers")),
                )
            )
        producers.sort(key=lambda p: (p.s, sorted(p.viewers)))
        edges = frozenset(edge_list(require(s, "edges", where), f"{where}/edges"))
        slots.append(LvdnSlot(require(s, "t", where), tuple(producers), edges))
    return LvdnInstance(n, prices, caps, billing_from_json(require(doc, "billing", "")), tuple(slots))


def rtcn_from_json(doc: dict) -> RtcnInstance:
    check_schema(doc, RTCN_SCHEMA)
    n, prices, caps = _servers_from_json(doc)
    slots = []
    for idx, s in enumerate(require(doc, "slots", "")):
        where = f"/slots/{idx}"
        parts = sorted(
            (require(c, "id", f"{where}/participants/{k}"), to_rational(require(c, "w", f"{where}/participants/{k}"), f"{where}/participants/{k}/w"))
            for k, c in enumerate(require(s, "participants", where))
        )
        groups = tuple(
            frozenset(int_list(g, f"{where}/groups/{k}")) for k, g in enumerate(require(s, "groups", where))
        )
        edges = frozenset(edge_list(require(s, "edges", where), f"{where}/edges"))
        slots.append(RtcnSlot(require(s, "t", where), tuple(parts), groups, edges))
    return RtcnInstance(n, prices, caps, billing_from_json(require(doc, "billing", "")), tuple(slots))
