"""Core data model: networks, billing, per-slot demands and allocation plans.

All bandwidth and money quantities are :class:`fractions.Fraction` so that
cost comparisons are exact. Node ids are 1-based integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from nba.errors import InputError, PlanShapeError

Edge = tuple[int, int]

DEFAULT_PERCENTILE = Fraction(95, 100)


def to_rational(value, field_name: str | None = None) -> Fraction:
    """Convert ``int``/``Fraction``/``str``/``float`` to an exact Fraction.

    Floats go through their shortest ``repr`` so ``0.95`` becomes ``19/20``.
    """
    if isinstance(value, bool):
        raise InputError(f"expected a number, got {value!r}", field_name)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InputError(f"non-finite number {value!r}", field_name)
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"cannot parse rational {value!r}", field_name) from None
    raise InputError(f"expected a number, got {type(value).__name__}", field_name)


def rational_to_json(value: Fraction) -> int | str:
    """Integers stay JSON numbers; everything else becomes ``"num/den"``."""
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class BillingConfig:
    """Billing cycle of ``p`` samples charged at percentile ``q``."""

    p: int
    q: Fraction = DEFAULT_PERCENTILE

    def __post_init__(self):
        if isinstance(self.p, bool) or not isinstance(self.p, int) or self.p < 1:
            raise InputError(f"sample count must be a positive integer, got {self.p!r}", "billing/p")
        q = to_rational(self.q, "billing/q")
        if not (0 < q <= 1):
            raise InputError(f"percentile must lie in (0, 1], got {q}", "billing/q")
        object.__setattr__(self, "q", q)

    @property
    def k(self) -> int:
        """Number of top samples discarded: floor((1 - q) * p)."""
        return math.floor((1 - self.q) * self.p)


@dataclass(frozen=True)
class Network:
    """Nodes ``1..n`` with prices, capacities and the base edge set.

    A capacity of ``None`` means the node is not capacity-constrained in that
    direction (used by scenario lowerings for customer nodes).
    """

    n: int
    prices: tuple[Fraction, ...]
    egress_caps: tuple[Fraction | None, ...]
    ingress_caps: tuple[Fraction | None, ...]
    edges: frozenset[Edge]

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise InputError(f"node count must be a positive integer, got {self.n!r}", "network/n")
        object.__setattr__(self, "prices", _positive_tuple(self.prices, self.n, "network/prices", allow_none=False))
        object.__setattr__(self, "egress_caps", _positive_tuple(self.egress_caps, self.n, "network/egress_caps"))
        object.__setattr__(self, "ingress_caps", _positive_tuple(self.ingress_caps, self.n, "network/ingress_caps"))
        edges = frozenset(_edge(e, f"network/edges/{idx}") for idx, e in enumerate(self.edges))
        for i, j in edges:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise InputError(f"edge ({i},{j}) has an endpoint outside 1..{self.n}", "network/edges")
        object.__setattr__(self, "edges", edges)

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    def price(self, i: int) -> Fraction:
        return self.prices[i - 1]

    def egress_cap(self, i: int) -> Fraction | None:
        return self.egress_caps[i - 1]

    def ingress_cap(self, i: int) -> Fraction | None:
        return self.ingress_caps[i - 1]


def _edge(e, where: str) -> Edge:
    try:
        i, j = e
    except (TypeError, ValueError):
        raise InputError(f"edge must be a pair, got {e!r}", where) from None
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in (i, j)):
        raise InputError(f"edge endpoints must be integers, got {e!r}", where)
    if i == j:
        raise InputError(f"self-loop ({i},{j}) is not allowed", where)
    return (i, j)


def _positive_tuple(values, n: int, where: str, allow_none: bool = True) -> tuple:
    values = tuple(values)
    if len(values) != n:
        raise InputError(f"expected {n} entries, got {len(values)}", where)
    out = []
    for idx, v in enumerate(values):
        if v is None and allow_none:
            out.append(None)
            continue
        if v is None:
            raise InputError("value is required", f"{where}/{idx}")
        r = to_rational(v, f"{where}/{idx}")
        if r <= 0:
            raise InputError(f"must be strictly positive, got {r}", f"{where}/{idx}")
        out.append(r)
    return tuple(out)


@dataclass(frozen=True)
class Source:
    """One source ``s`` of a slot with weight ``w`` and destination set."""

    s: int
    w: Fraction
    dests: frozenset[int]

    def __post_init__(self):
        w = to_rational(self.w, "w")
        if w <= 0:
            raise InputError(f"weight of source {self.s} must be positive, got {w}", "w")
        object.__setattr__(self, "w", w)
        dests = frozenset(self.dests)
        if self.s in dests:
            raise InputError(f"source {self.s} cannot be its own destination", "dests")
        object.__setattr__(self, "dests", dests)


@dataclass(frozen=True)
class SlotDemand:
    """Available edges and source demands of one time slot."""

    t: int
    edges: frozenset[Edge]
    sources: tuple[Source, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(_edge(e, f"demands/{self.t}/edges") for e in self.edges))
        srcs = tuple(sorted(self.sources, key=lambda src: src.s))
        seen = set()
        for src in srcs:
            if src.s in seen:
                raise InputError(f"source {src.s} listed twice in slot {self.t}", f"demands/{self.t}/sources")
            seen.add(src.s)
        object.__setattr__(self, "sources", srcs)

    def source(self, s: int) -> Source:
        for src in self.sources:
            if src.s == s:
                return src
        raise KeyError(s)

    @property
    def source_ids(self) -> tuple[int, ...]:
        return tuple(src.s for src in self.sources)


@dataclass(frozen=True)
class BillingRules:
    """Scenario hooks overriding the generic billing and constraint rules.

    ``None`` for a node set means "every node". The generic model bills
    ``max(egress, ingress)`` percentiles at every node and applies the
    replication rule at every non-destination node.
    """

    billed_nodes: frozenset[int] | None = None
    bill_ingress: bool = True
    relay_nodes: frozenset[int] | None = None
    # when set, every source with destinations sends exactly one edge into this set
    ingest_nodes: frozenset[int] | None = None

    def __post_init__(self):
        for name in ("billed_nodes", "relay_nodes", "ingest_nodes"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, frozenset(v))

    @property
    def is_generic(self) -> bool:
        return self == BillingRules()

    def billed(self, i: int) -> bool:
        return self.billed_nodes is None or i in self.billed_nodes

    def relay(self, i: int) -> bool:
        return self.relay_nodes is None or i in self.relay_nodes


@dataclass(frozen=True)
class Instance:
    """A complete NBA problem instance over one billing cycle."""

    network: Network
    billing: BillingConfig
    demands: tuple[SlotDemand, ...]
    rules: BillingRules = field(default_factory=BillingRules)

    def __post_init__(self):
        demands = tuple(self.demands)
        object.__setattr__(self, "demands", demands)
        if len(demands) != self.billing.p:
            raise InputError(f"expected {self.billing.p} slots, got {len(demands)}", "demands")
        net = self.network
        for idx, d in enumerate(demands):
            where = f"demands/{idx}"
            if d.t != idx + 1:
                raise InputError(f"slots must be numbered 1..p in order; found t={d.t} at position {idx}", f"{where}/t")
            foreign = sorted(d.edges - net.edges)
            if foreign:
                raise InputError(f"slot edges {foreign} are not network edges", f"{where}/edges")
            for k, src in enumerate(d.sources):
                if not 1 <= src.s <= net.n:
                    raise InputError(f"source {src.s} outside 1..{net.n}", f"{where}/sources/{k}/s")
                bad = sorted(j for j in src.dests if not 1 <= j <= net.n)
                if bad:
                    raise InputError(f"destinations {bad} outside 1..{net.n}", f"{where}/sources/{k}/dests")
        for name in ("billed_nodes", "relay_nodes", "ingest_nodes"):
            nodes = getattr(self.rules, name)
            if nodes is not None and any(not 1 <= i <= net.n for i in nodes):
                raise InputError(f"node ids outside 1..{net.n}", f"rules/{name}")

    @property
    def p(self) -> int:
        return self.billing.p

    def slot(self, t: int) -> SlotDemand:
        return self.demands[t - 1]

    def pairs(self) -> Iterator[tuple[int, Source]]:
        """Every (slot, source) pair in slot-then-source order."""
        for d in self.demands:
            for src in d.sources:
                yield d.t, src


class AllocationPlan:
    """Chosen edge sets per (slot, source); absent pairs mean "no edges".

    Immutable: the mapping is copied on construction and never exposed
    for mutation.
    """

    __slots__ = ("_edges",)

    def __init__(self, edges: Mapping[tuple[int, int], Iterable[Edge]] | None = None):
        store = {}
        for (t, s), es in (edges or {}).items():
            fs = frozenset(tuple(e) for e in es)
            if fs:
                store[(t, s)] = fs
        self._edges = dict(sorted(store.items()))

    def edges(self, t: int, s: int) -> frozenset[Edge]:
        return self._edges.get((t, s), frozenset())

    def items(self):
        return self._edges.items()

    def keys(self):
        return self._edges.keys()

    def with_edges(self, t: int, s: int, edges: Iterable[Edge]) -> "AllocationPlan":
        new = dict(self._edges)
        new[(t, s)] = frozenset(edges)
        return AllocationPlan(new)

    def edge_count(self) -> int:
        return sum(len(es) for es in self._edges.values())

    def __eq__(self, other):
        return isinstance(other, AllocationPlan) and self._edges == other._edges

    def __hash__(self):
        return hash(tuple(self._edges.items()))

    def __repr__(self):
        body = ", ".join(f"{k}: {sorted(v)}" for k, v in self._edges.items())
        return f"AllocationPlan({{{body}}})"


def validate_plan(instance: Instance, plan: AllocationPlan) -> None:
    """Raise :class:`PlanShapeError` if the plan references foreign data."""
    for (t, s), es in plan.items():
        if not 1 <= t <= instance.p:
            raise PlanShapeError(f"slot {t} outside 1..{instance.p}", f"slots/t={t}")
        slot = instance.slot(t)
        if s not in slot.source_ids:
            raise PlanShapeError(f"node {s} is not a source in slot {t}", f"slots/t={t}/sources/s={s}")
        foreign = sorted(es - slot.edges)
        if foreign:
            raise PlanShapeError(
                f"edges {foreign} are not available in slot {t}", f"slots/t={t}/sources/s={s}/edges"
            )
