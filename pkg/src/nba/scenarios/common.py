from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from nba.errors import InputError
from nba.model import BillingConfig, rational_to_json, to_rational


@dataclass(frozen=True)
class ScenarioReport:
    """Solver result for scenarios whose decisions are not generic edge plans.

    ``assignment`` maps slot to the chosen edges: ``{(i, j): 1}`` for CDN
    customer assignments, ``{(i, j): flow}`` for Cloud-WAN integer flows.
    """

    schema: str
    status: str
    cost: Fraction | None
    assignment: dict[int, dict[tuple[int, int], int]]
    stats: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.cost is not None

    def to_json(self, include_timing: bool = False) -> dict:
        doc = {
            "schema": self.schema,
            "status": self.status,
            "cost": None if self.cost is None else rational_to_json(self.cost),
            "slots": [
                {"t": t, "edges": [[i, j, v] for (i, j), v in sorted(a.items())]}
                for t, a in sorted(self.assignment.items())
            ],
            "statistics": self.stats,
        }
        if include_timing:
            doc["wall_time_s"] = self.wall_time
        return doc


def billing_from_json(doc: Any) -> BillingConfig:
    if not isinstance(doc, dict) or "p" not in doc:
        raise InputError("billing needs an integer 'p'", "/billing")
    return BillingConfig(p=doc["p"], q=to_rational(doc.get("q", "19/20"), "/billing/q"))


def billing_to_json(b: BillingConfig) -> dict:
    return {"p": b.p, "q": rational_to_json(b.q)}


def require(doc: Any, key: str, where: str):
    if not isinstance(doc, dict):
        raise InputError("expected an object", where)
    if key not in doc:
        raise InputError(f"missing field {key!r}", where)
    return doc[key]


def check_schema(doc: Any, expected: str) -> None:
    got = doc.get("schema") if isinstance(doc, dict) else None
    if got != expected:
        raise InputError(f"expected schema {expected!r}, got {got!r}", "/schema")


def int_list(values, where: str) -> list[int]:
    if not isinstance(values, list):
        raise InputError("expected an array", where)
    out = []
    for k, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, int):
            raise InputError(f"expected an integer, got {v!r}", f"{where}/{k}")
        out.append(v)
    return out


def edge_list(values, where: str) -> list[tuple[int, int]]:
    if not isinstance(values, list):
        raise InputError("expected an array", where)
    out = []
    for k, e in enumerate(values):
        pair = int_list(e, f"{where}/{k}")
        if len(pair) != 2:
            raise InputError(f"edge must be [i, j], got {e!r}", f"{where}/{k}")
        out.append((pair[0], pair[1]))
    return out


def positive_list(values, n: int, where: str) -> tuple[Fraction, ...]:
    if not isinstance(values, (list, tuple)) or len(values) != n:
        raise InputError(f"expected {n} entries", where)
    out = []
    for k, v in enumerate(values):
        r = to_rational(v, f"{where}/{k}")
        if r <= 0:
            raise InputError(f"must be strictly positive, got {r}", f"{where}/{k}")
        out.append(r)
    return tuple(out)
