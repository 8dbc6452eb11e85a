"""JSON (de)serialization for instances and plans.

Schemas: ``nba-instance/1`` and ``nba-plan/1``. Rationals are written as
JSON integers when integral and as ``"num/den"`` strings otherwise, so a
load/dump round trip is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from nba.errors import InputError
from nba.model import (
    AllocationPlan,
    BillingConfig,
    BillingRules,
    Instance,
    Network,
    SlotDemand,
    Source,
    rational_to_json,
    to_rational,
)

INSTANCE_SCHEMA = "nba-instance/1"
PLAN_SCHEMA = "nba-plan/1"


def dumps(doc: dict) -> str:
    """Canonical JSON text used for every file the package writes."""
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", str(path)) from None
    except OSError as exc:
        raise InputError(f"cannot read file: {exc.strerror}", str(path)) from None


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def _get(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise InputError("expected an object", where)
    if key not in doc:
        raise InputError(f"missing field {key!r}", where)
    return doc[key]


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"expected an integer, got {value!r}", where)
    return value


def _list(value, where: str) -> list:
    if not isinstance(value, list):
        raise InputError(f"expected an array, got {type(value).__name__}", where)
    return value


def _edges(value, where: str) -> list[tuple[int, int]]:
    out = []
    for idx, e in enumerate(_list(value, where)):
        if not isinstance(e, list) or len(e) != 2:
            raise InputError(f"edge must be [i, j], got {e!r}", f"{where}/{idx}")
        out.append((_int(e[0], f"{where}/{idx}/0"), _int(e[1], f"{where}/{idx}/1")))
    return out


def _check_schema(doc, expected: str):
    schema = _get(doc, "schema", "")
    if schema != expected:
        raise InputError(f"expected schema {expected!r}, got {schema!r}", "/schema")


def _opt_caps(values, where):
    return [None if v is None else to_rational(v, f"{where}/{k}") for k, v in enumerate(_list(values, where))]


def _node_set(value, where):
    if value is None:
        return None
    return frozenset(_int(v, f"{where}/{k}") for k, v in enumerate(_list(value, where)))


def instance_from_json(doc: dict) -> Instance:
    _check_schema(doc, INSTANCE_SCHEMA)
    net = _get(doc, "network", "")
    n = _int(_get(net, "n", "/network"), "/network/n")
    network = Network(
        n=n,
        prices=[to_rational(v, f"/network/prices/{k}") for k, v in enumerate(_list(_get(net, "prices", "/network"), "/network/prices"))],
        egress_caps=_opt_caps(_get(net, "egress_caps", "/network"), "/network/egress_caps"),
        ingress_caps=_opt_caps(_get(net, "ingress_caps", "/network"), "/network/ingress_caps"),
        edges=_edges(_get(net, "edges", "/network"), "/network/edges"),
    )
    bill = _get(doc, "billing", "")
    billing = BillingConfig(
        p=_int(_get(bill, "p", "/billing"), "/billing/p"),
        q=to_rational(bill.get("q", "19/20"), "/billing/q"),
    )
    demands = []
    for idx, d in enumerate(_list(_get(doc, "demands", ""), "/demands")):
        where = f"/demands/{idx}"
        sources = []
        for k, sd in enumerate(_list(_get(d, "sources", where), f"{where}/sources")):
            sw = f"{where}/sources/{k}"
            try:
                sources.append(
                    Source(
                        s=_int(_get(sd, "s", sw), f"{sw}/s"),
                        w=to_rational(_get(sd, "w", sw), f"{sw}/w"),
                        dests=frozenset(_int(v, f"{sw}/dests/{m}") for m, v in enumerate(_list(_get(sd, "dests", sw), f"{sw}/dests"))),
                    )
                )
            except InputError as exc:
                if exc.field and not exc.field.startswith("/"):
                    raise InputError(str(exc).split(": ", 1)[-1], f"{sw}/{exc.field}") from None
                raise
        demands.append(
            SlotDemand(
                t=_int(_get(d, "t", where), f"{where}/t"),
                edges=frozenset(_edges(_get(d, "edges", where), f"{where}/edges")),
                sources=tuple(sources),
            )
        )
    rules = BillingRules()
    if "rules" in doc:
        r = doc["rules"]
        rules = BillingRules(
            billed_nodes=_node_set(r.get("billed_nodes"), "/rules/billed_nodes"),
            bill_ingress=bool(r.get("bill_ingress", True)),
            relay_nodes=_node_set(r.get("relay_nodes"), "/rules/relay_nodes"),
            ingest_nodes=_node_set(r.get("ingest_nodes"), "/rules/ingest_nodes"),
        )
    return Instance(network=network, billing=billing, demands=tuple(demands), rules=rules)


def _cap_json(c):
    return None if c is None else rational_to_json(c)


def instance_to_json(instance: Instance) -> dict:
    net = instance.network
    doc: dict[str, Any] = {
        "schema": INSTANCE_SCHEMA,
        "network": {
            "n": net.n,
            "prices": [rational_to_json(u) for u in net.prices],
            "egress_caps": [_cap_json(c) for c in net.egress_caps],
            "ingress_caps": [_cap_json(c) for c in net.ingress_caps],
            "edges": [list(e) for e in sorted(net.edges)],
        },
        "billing": {"p": instance.billing.p, "q": rational_to_json(instance.billing.q)},
        "demands": [
            {
                "t": d.t,
                "edges": [list(e) for e in sorted(d.edges)],
                "sources": [
                    {"s": src.s, "w": rational_to_json(src.w), "dests": sorted(src.dests)}
                    for src in d.sources
                ],
            }
            for d in instance.demands
        ],
    }
    if not instance.rules.is_generic:
        r = instance.rules
        doc["rules"] = {
            "billed_nodes": None if r.billed_nodes is None else sorted(r.billed_nodes),
            "bill_ingress": r.bill_ingress,
            "relay_nodes": None if r.relay_nodes is None else sorted(r.relay_nodes),
            "ingest_nodes": None if r.ingest_nodes is None else sorted(r.ingest_nodes),
        }
    return doc


def plan_from_json(doc: dict) -> AllocationPlan:
    _check_schema(doc, PLAN_SCHEMA)
    entries: dict[tuple[int, int], list] = {}
    for idx, slot in enumerate(_list(_get(doc, "slots", ""), "/slots")):
        where = f"/slots/{idx}"
        t = _int(_get(slot, "t", where), f"{where}/t")
        for k, sd in enumerate(_list(_get(slot, "sources", where), f"{where}/sources")):
            sw = f"{where}/sources/{k}"
            s = _int(_get(sd, "s", sw), f"{sw}/s")
            if (t, s) in entries:
                raise InputError(f"duplicate entry for slot {t} source {s}", sw)
            entries[(t, s)] = _edges(_get(sd, "edges", sw), f"{sw}/edges")
    return AllocationPlan(entries)


def plan_to_json(plan: AllocationPlan) -> dict:
    slots: dict[int, list] = {}
    for (t, s), edges in plan.items():
        slots.setdefault(t, []).append({"s": s, "edges": [list(e) for e in sorted(edges)]})
    return {"schema": PLAN_SCHEMA, "slots": [{"t": t, "sources": srcs} for t, srcs in sorted(slots.items())]}
