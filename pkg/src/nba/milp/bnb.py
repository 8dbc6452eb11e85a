"""Depth-first branch and bound for models produced by :func:`encode`.

Only the flow binaries are branched on. Once every flow is fixed, the best
peak and exclusion values follow in closed form: each peak group's
optimal ``y`` is its ``(k+1)``-th largest slot load, because every big-M
covers the load it multiplies. During the search the same formula applied
to the loads of flows already fixed to one is an admissible lower bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from nba.cost import charged_value
from nba.errors import StructuralError
from nba.milp.encoder import BINARY, EQ, GE, LE, MilpModel
from nba.model import AllocationPlan

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNSOLVED = "Unsolved"


@dataclass
class MilpResult:
    status: str
    objective: Fraction | None
    values: dict[str, Fraction] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from nba.model import rational_to_json

        return {
            "status": self.status,
            "objective": None if self.objective is None else rational_to_json(self.objective),
            "values": {k: rational_to_json(v) for k, v in sorted(self.values.items()) if v},
            "statistics": self.stats,
        }


class _Rows:
    """Binary-only rows as ``lo <= sum c_v x_v <= hi`` with incremental bookkeeping."""

    def __init__(self, model: MilpModel, flows: list[int]):
        pos = {v: n for n, v in enumerate(flows)}
        self.terms: list[list[tuple[int, Fraction]]] = []
        self.lo: list[Fraction | None] = []
        self.hi: list[Fraction | None] = []
        self.rows_of: list[list[int]] = [[] for _ in flows]
        for row in model.constraints:
            if not row.terms or any(v not in pos for v, _ in row.terms):
                if not row.terms and not _const_ok(row):
                    raise _Infeasible
                continue
            r = len(self.terms)
            self.terms.append([(pos[v], c) for v, c in row.terms])
            self.lo.append(row.rhs if row.sense in (GE, EQ) else None)
            self.hi.append(row.rhs if row.sense in (LE, EQ) else None)
            for v, _ in row.terms:
                self.rows_of[pos[v]].append(r)


class _Infeasible(Exception):
    pass


def _const_ok(row) -> bool:
    return (row.sense == LE and 0 <= row.rhs) or (row.sense == GE and 0 >= row.rhs) or (row.sense == EQ and row.rhs == 0)


def _check_structure(model: MilpModel) -> list[int]:
    peak_vars = set()
    for g in model.peaks:
        peak_vars.add(g.y)
        peak_vars.update(z for z in g.z if z is not None)
        for r, z in zip(g.rows, g.z):
            row = model.constraints[r]
            coeffs = dict(row.terms)
            if row.sense != GE or row.rhs != 0 or coeffs.get(g.y) != 1:
                raise StructuralError(f"row {row.name} is not a peak row")
            if any(c > 0 for v, c in row.terms if v != g.y and v != z):
                raise StructuralError(f"row {row.name} has a negative load coefficient")
    flows = [idx for idx, v in enumerate(model.variables) if idx not in peak_vars]
    for idx in flows:
        if model.variables[idx].kind != BINARY:
            raise StructuralError(f"variable {model.variables[idx].name} is neither a flow binary nor a peak variable")
        if model.objective.get(idx):
            raise StructuralError("flow variables must not carry objective weight")
    for v in model.objective:
        if model.objective[v] < 0:
            raise StructuralError("objective weights must be nonnegative")
    return flows


def solve_milp_internal(model: MilpModel, budget: int = 1_000_000) -> MilpResult:
    """Proven optimum of ``model``, or ``Unsolved`` when ``budget`` nodes do not suffice.

    The result never claims optimality for an incomplete search.
    """
    started = time.perf_counter()
    flows = _check_structure(model)
    try:
        rows = _Rows(model, flows)
    except _Infeasible:
        return MilpResult(INFEASIBLE, None, stats={"nodes": 0})
    if budget <= 0:
        return MilpResult(UNSOLVED, None, stats={"nodes": 0, "budget": budget})

    nf = len(flows)
    pos = {v: n for n, v in enumerate(flows)}
    # peak groups: per slot list of (flow position, load coefficient)
    groups = []
    for g in model.peaks:
        per_slot = []
        for r, z in zip(g.rows, g.z):
            per_slot.append([(pos[v], -c) for v, c in model.constraints[r].terms if v != g.y and v != z])
        budget_row = model.constraints[g.budget].rhs if g.budget is not None else Fraction(0)
        groups.append((g, per_slot, int(budget_row)))
    by_y: dict[int, list[int]] = {}
    for gi, (g, _, _) in enumerate(groups):
        by_y.setdefault(g.y, []).append(gi)

    value: list[int | None] = [None] * nf
    nrows = len(rows.terms)
    minact = [sum((c for _, c in t if c < 0), Fraction(0)) for t in rows.terms]
    maxact = [sum((c for _, c in t if c > 0), Fraction(0)) for t in rows.terms]
    loads = [[Fraction(0)] * len(ps) for _, ps, _ in groups]
    slot_of: list[list[tuple[int, int, Fraction]]] = [[] for _ in range(nf)]
    for gi, (_, per_slot, _) in enumerate(groups):
        for t, terms in enumerate(per_slot):
            for fpos, c in terms:
                slot_of[fpos].append((gi, t, c))
    coeff = [dict(t) for t in rows.terms]

    def objective_bound() -> Fraction:
        total = Fraction(0)
        for y, gis in by_y.items():
            peak = max(charged_value(loads[gi], groups[gi][2]) for gi in gis)
            total += model.objective.get(y, Fraction(0)) * peak
        return total

    trail: list[int] = []

    def assign(fpos: int, val: int) -> None:
        value[fpos] = val
        trail.append(fpos)
        for r in rows.rows_of[fpos]:
            c = coeff[r][fpos]
            if c > 0:
                maxact[r] -= c * (1 - val)
                minact[r] += c * val
            else:
                minact[r] -= c * (1 - val)
                maxact[r] += c * val
        if val:
            for gi, t, c in slot_of[fpos]:
                loads[gi][t] += c

    def undo(mark: int) -> None:
        while len(trail) > mark:
            fpos = trail.pop()
            val = value[fpos]
            for r in rows.rows_of[fpos]:
                c = coeff[r][fpos]
                if c > 0:
                    maxact[r] += c * (1 - val)
                    minact[r] -= c * val
                else:
                    minact[r] += c * (1 - val)
                    maxact[r] -= c * val
            if val:
                for gi, t, c in slot_of[fpos]:
                    loads[gi][t] -= c
            value[fpos] = None

    def propagate(queue: list[int]) -> bool:
        seen = set(queue)
        while queue:
            r = queue.pop()
            seen.discard(r)
            lo, hi = rows.lo[r], rows.hi[r]
            if (lo is not None and maxact[r] < lo) or (hi is not None and minact[r] > hi):
                return False
            for fpos, c in rows.terms[r]:
                if value[fpos] is not None:
                    continue
                forced = None
                span = abs(c)
                if hi is not None and minact[r] + span > hi:
                    forced = 0 if c > 0 else 1
                if lo is not None and maxact[r] - span < lo:
                    want = 1 if c > 0 else 0
                    if forced is not None and forced != want:
                        return False
                    forced = want
                if forced is not None:
                    assign(fpos, forced)
                    for r2 in rows.rows_of[fpos]:
                        if r2 not in seen:
                            seen.add(r2)
                            queue.append(r2)
        return True

    state = {"nodes": 0, "best": None, "solution": None, "exhausted": False}

    def dfs() -> None:
        if state["exhausted"]:
            return
        state["nodes"] += 1
        if state["nodes"] > budget:
            state["exhausted"] = True
            return
        bound = objective_bound()
        if state["best"] is not None and bound >= state["best"]:
            return
        free = next((f for f in range(nf) if value[f] is None), None)
        if free is None:
            state["best"] = bound
            state["solution"] = list(value)
            return
        for val in (0, 1):
            mark = len(trail)
            assign(free, val)
            if propagate(list(rows.rows_of[free])):
                dfs()
            undo(mark)
            if state["exhausted"]:
                return

    if propagate(list(range(nrows))):
        dfs()
    stats = {"nodes": state["nodes"], "wall_time_s": round(time.perf_counter() - started, 6)}
    if state["exhausted"]:
        return MilpResult(UNSOLVED, None, stats=stats)
    if state["solution"] is None:
        return MilpResult(INFEASIBLE, None, stats=stats)
    return MilpResult(OPTIMAL, state["best"], _complete(model, flows, groups, by_y, state["solution"]), stats)


def _complete(model, flows, groups, by_y, solution) -> dict[str, Fraction]:
    vals = {model.variables[v].name: Fraction(solution[n]) for n, v in enumerate(flows)}
    for y, gis in by_y.items():
        peak = Fraction(0)
        for gi in gis:
            g, per_slot, k = groups[gi]
            series = [sum((c for f, c in terms if solution[f]), Fraction(0)) for terms in per_slot]
            peak = max(peak, charged_value(series, k))
            excluded = sorted(range(len(series)), key=lambda t: (-series[t], t))[:k]
            for t, z in enumerate(g.z):
                if z is not None:
                    vals[model.variables[z].name] = Fraction(1 if t in excluded else 0)
        vals[model.variables[y].name] = peak
    return vals


def plan_from_values(model: MilpModel, values: dict[str, Fraction]) -> AllocationPlan:
    """The allocation plan encoded by the flow binaries of a solution."""
    chosen: dict[tuple[int, int], set] = {}
    for (t, s, e), idx in model.flow_index.items():
        if values.get(model.variables[idx].name):
            chosen.setdefault((t, s), set()).add(e)
    return AllocationPlan(chosen)
