"""Total unimodularity checks for Cloud-WAN slot constraint matrices."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from nba.errors import InputError, ResourceLimitError
from nba.scenarios.cloudwan import CloudWanInstance


@dataclass(frozen=True)
class SlotMatrix:
    rows: tuple[str, ...]  # "demand:j" then "cap:i"
    cols: tuple[tuple[int, int], ...]  # flow variable per eligible edge
    entries: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class TuResult:
    ok: bool
    witness: dict | None
    checked: int

    def to_json(self) -> dict:
        return {"totally_unimodular": self.ok, "witness": self.witness, "submatrices_checked": self.checked}


def cloudwan_constraint_matrix(cw: CloudWanInstance, t: int) -> SlotMatrix:
    """Demand rows (one per client) over capacity rows (one per PoP), one column per edge."""
    if not 1 <= t <= cw.billing.p:
        raise InputError(f"slot {t} outside 1..{cw.billing.p}", "slot")
    cols = tuple(sorted(cw.slot(t).edges))
    rows, entries = [], []
    for j in cw.clients:
        rows.append(f"demand:{j}")
        entries.append(tuple(1 if jj == j else 0 for _, jj in cols))
    for i in cw.pops:
        rows.append(f"cap:{i}")
        entries.append(tuple(1 if ii == i else 0 for ii, _ in cols))
    return SlotMatrix(tuple(rows), cols, tuple(entries))


def integer_determinant(matrix: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    a = [list(map(int, row)) for row in matrix]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def is_totally_unimodular(matrix: Sequence[Sequence[int]], max_size: int, max_checks: int = 5_000_000) -> TuResult:
    """Check every square submatrix up to ``max_size`` for a determinant in {-1, 0, 1}.

    Raises :class:`ResourceLimitError` before doing any work when the number
    of submatrices exceeds ``max_checks``.
    """
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    if max_size < 1:
        raise InputError("max_size must be at least 1", "max_sub")
    top = min(max_size, rows, cols)
    count = sum(math.comb(rows, s) * math.comb(cols, s) for s in range(1, top + 1))
    if count > max_checks:
        raise ResourceLimitError(
            f"{count} square submatrices up to size {top}, limit {max_checks}",
            {"rows": rows, "cols": cols, "submatrices": count},
        )
    checked = 0
    for size in range(1, top + 1):
        for rs in itertools.combinations(range(rows), size):
            for cs in itertools.combinations(range(cols), size):
                checked += 1
                sub = [[matrix[r][c] for c in cs] for r in rs]
                det = integer_determinant(sub)
                if det not in (-1, 0, 1):
                    return TuResult(False, {"rows": list(rs), "cols": list(cs), "submatrix": sub, "determinant": det}, checked)
    return TuResult(True, None, checked)


def check_totally_unimodular(cw: CloudWanInstance, t: int, max_submatrix: int = 6,
                             max_checks: int = 5_000_000) -> TuResult:
    m = cloudwan_constraint_matrix(cw, t)
    result = is_totally_unimodular(m.entries, max_submatrix, max_checks)
    if result.witness is not None:
        w = dict(result.witness)
        w["row_labels"] = [m.rows[r] for r in w["rows"]]
        w["col_labels"] = [list(m.cols[c]) for c in w["cols"]]
        result = TuResult(False, w, result.checked)
    return result


def slot_lp_relaxation(cw: CloudWanInstance, t: int) -> dict[tuple[int, int], Fraction]:
    """Solve the slot's LP relaxation (minimise price-weighted PoP load) by dual simplex.

    With a single slot and nothing discarded the percentile objective is
    linear in the flows. Returns the basic optimal flows, snapped to exact
    rationals with small denominators.
    """
    from scipy.optimize import linprog

    m = cloudwan_constraint_matrix(cw, t)
    ncol = len(m.cols)
    if ncol == 0:
        return {}
    c = [float(cw.prices[i - 1]) for i, _ in m.cols]
    nclient = cw.n - cw.m
    a_eq = [list(r) for r in m.entries[:nclient]]
    b_eq = list(cw.slot(t).demand)
    a_ub = [list(r) for r in m.entries[nclient:]]
    b_ub = list(cw.caps)
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * ncol, method="highs-ds")
    if res.status != 0:
        raise InputError(f"slot {t} LP relaxation is not solvable: {res.message}", "slot")
    return {e: Fraction(float(x)).limit_denominator(1000) for e, x in zip(m.cols, res.x)}
