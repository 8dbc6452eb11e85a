"""Mixed-integer linear encoding of an instance.

The percentile of a node's series is linearised with exclusion binaries:
a peak variable ``y`` must dominate every slot load except those switched
off by a binary ``z``, and at most ``k`` slots per node and direction may be
switched off. ``y`` is shared between egress and ingress so that it lands on
the larger of the two percentiles.

Sizes, with ``F = sum over slots of |S(t)| * |E(t)|`` and ``B`` billed nodes:

* binaries: ``F`` flow variables, plus ``p * B`` egress exclusion binaries
  and, when ingress is billed, ``p * B`` ingress ones (none when ``k = 0``);
* continuous: ``B`` peak variables;
* rows: one source row per source with destinations, one destination row
  per (source, destination), one replication row per (source, relay node
  outside its destinations touched by a slot edge), one capacity row per
  capped node, slot and direction with an incident slot edge while some
  source is active, one peak row per billed node, slot and billed
  direction, and one budget row per billed node and billed direction when
  ``k > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from nba.model import Instance

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"

LE, GE, EQ = "<=", ">=", "="


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: Fraction = Fraction(0)
    upper: Fraction | None = None  # None is unbounded; binaries are implicitly [0, 1]


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[int, Fraction], ...]  # (variable index, coefficient), sorted by index
    sense: str
    rhs: Fraction


@dataclass(frozen=True)
class PeakGroup:
    """Peak rows of one node and direction: ``y - load_t + M_t z_t >= 0`` per slot."""

    node: int
    direction: str  # "out" or "in"
    y: int
    rows: tuple[int, ...]  # constraint index per slot
    z: tuple[int | None, ...]  # exclusion binary per slot, None when k = 0
    budget: int | None  # budget row index
    k: int


@dataclass
class MilpModel:
    """Minimisation MILP with provenance metadata on every variable and row."""

    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, Fraction] = field(default_factory=dict)
    var_meta: list[tuple] = field(default_factory=list)
    row_meta: list[tuple] = field(default_factory=list)
    flow_index: dict[tuple[int, int, tuple[int, int]], int] = field(default_factory=dict)
    peaks: list[PeakGroup] = field(default_factory=list)
    name: str = "nba"

    def add_var(self, name: str, kind: str, meta: tuple, upper: Fraction | None = None) -> int:
        self.variables.append(Variable(name, kind, Fraction(0), upper))
        self.var_meta.append(meta)
        return len(self.variables) - 1

    def add_row(self, name: str, terms: dict[int, Fraction], sense: str, rhs, meta: tuple) -> int:
        clean = tuple(sorted((v, Fraction(c)) for v, c in terms.items() if c))
        self.constraints.append(Constraint(name, clean, sense, Fraction(rhs)))
        self.row_meta.append(meta)
        return len(self.constraints) - 1

    def counts(self) -> dict[str, int]:
        kinds = [v.kind for v in self.variables]
        return {
            "binary": kinds.count(BINARY),
            "integer": kinds.count(INTEGER),
            "continuous": kinds.count(CONTINUOUS),
            "constraints": len(self.constraints),
        }

    def index(self, name: str) -> int:
        for idx, v in enumerate(self.variables):
            if v.name == name:
                return idx
        raise KeyError(name)


def _flow_name(t, s, e):
    return f"f_t{t}_s{s}_e{e[0]}_{e[1]}"


def encode(instance: Instance) -> MilpModel:
    """Encode ``instance`` as a MILP whose optimum equals the instance optimum.

    The flow rows are the plain degree constraints (destinations get exactly
    one in-edge); they do not demand reachability from the source.
    """
    net, rules, k, p = instance.network, instance.rules, instance.billing.k, instance.p
    model = MilpModel()
    out_terms: dict[tuple[int, int], dict[int, Fraction]] = {}
    in_terms: dict[tuple[int, int], dict[int, Fraction]] = {}

    for t, src in instance.pairs():
        for e in sorted(instance.slot(t).edges):
            idx = model.add_var(_flow_name(t, src.s, e), BINARY, ("flow", t, src.s, e))
            model.flow_index[(t, src.s, e)] = idx
            i, j = e
            out_terms.setdefault((i, t), {})[idx] = src.w
            in_terms.setdefault((j, t), {})[idx] = src.w

    for t, src in instance.pairs():
        s, dests = src.s, src.dests
        edges = sorted(instance.slot(t).edges)
        f = {e: model.flow_index[(t, s, e)] for e in edges}
        if dests:
            if rules.ingest_nodes is not None:
                terms = {f[e]: 1 for e in edges if e[0] == s and e[1] in rules.ingest_nodes}
                model.add_row(f"src_t{t}_s{s}", terms, EQ, 1, ("source", t, s))
            else:
                terms = {f[e]: 1 for e in edges if e[0] == s}
                model.add_row(f"src_t{t}_s{s}", terms, GE, 1, ("source", t, s))
        for j in sorted(dests):
            terms = {f[e]: 1 for e in edges if e[1] == j}
            model.add_row(f"dst_t{t}_s{s}_n{j}", terms, EQ, 1, ("destination", t, s, j))
        for j in net.nodes:
            if j in dests or not rules.relay(j):
                continue
            terms: dict[int, Fraction] = {}
            for e in edges:
                if e[1] == j:
                    terms[f[e]] = terms.get(f[e], 0) + 1
                if e[0] == j:
                    terms[f[e]] = terms.get(f[e], 0) - 1
            if any(terms.values()):
                model.add_row(f"rep_t{t}_s{s}_n{j}", terms, LE, 0, ("replication", t, s, j))

    for t in range(1, p + 1):
        for i in net.nodes:
            for tag, cap, table in (("cout", net.egress_cap(i), out_terms), ("cin", net.ingress_cap(i), in_terms)):
                terms = table.get((i, t))
                if cap is not None and terms:
                    model.add_row(f"{tag}_n{i}_t{t}", terms, LE, cap, ("capacity", tag, i, t))

    directions = [("out", "peako", "zout", "budo", out_terms, net.egress_cap)]
    if rules.bill_ingress:
        directions.append(("in", "peaki", "zin", "budi", in_terms, net.ingress_cap))
    for i in net.nodes:
        if not rules.billed(i):
            continue
        y = model.add_var(f"y_n{i}", CONTINUOUS, ("peak", i))
        model.objective[y] = net.price(i)
        for direction, rowtag, ztag, budtag, table, capfn in directions:
            rows, zs = [], []
            for t in range(1, p + 1):
                load = table.get((i, t), {})
                terms = {v: -c for v, c in load.items()}
                terms[y] = Fraction(1)
                z = None
                if k > 0:
                    z = model.add_var(f"{ztag}_n{i}_t{t}", BINARY, ("exclude", direction, i, t))
                    big_m = sum(load.values(), Fraction(0))
                    cap = capfn(i)
                    if cap is not None:
                        big_m = min(big_m, cap)
                    terms[z] = big_m
                zs.append(z)
                rows.append(model.add_row(f"{rowtag}_n{i}_t{t}", terms, GE, 0, ("peak", direction, i, t)))
            budget = None
            if k > 0:
                budget = model.add_row(f"{budtag}_n{i}", {z: 1 for z in zs}, LE, k, ("budget", direction, i))
            model.peaks.append(PeakGroup(i, direction, y, tuple(rows), tuple(zs), budget, k))
    return model
