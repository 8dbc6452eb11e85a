"""Text exports of a :class:`MilpModel`: CPLEX LP and fixed-column MPS.

Coefficients are written as exact decimals whenever the rational has a
terminating expansion; otherwise they are rounded to 17 significant
digits in LP files and to the 12-character field width in MPS files.
"""

from __future__ import annotations

from decimal import Decimal, localcontext
from fractions import Fraction

from nba.milp.encoder import BINARY, EQ, GE, INTEGER, LE, MilpModel

_TERMS_PER_LINE = 6


def _terminating(x: Fraction) -> bool:
    d = x.denominator
    for f in (2, 5):
        while d % f == 0:
            d //= f
    return d == 1


def format_number(x: Fraction, digits: int = 17) -> str:
    """Shortest decimal text for ``x``; exact when the expansion terminates."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    with localcontext() as ctx:
        ctx.prec = 200 if _terminating(x) else digits
        text = format(Decimal(x.numerator) / Decimal(x.denominator), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def _linear(model: MilpModel, terms, first_prefix: str) -> list[str]:
    chunks = []
    for pos, (v, c) in enumerate(terms):
        name = model.variables[v].name
        sign = "-" if c < 0 else "+"
        mag = format_number(abs(c))
        body = name if mag == "1" else f"{mag} {name}"
        chunks.append(f"{'- ' if sign == '-' else ('' if pos == 0 else '+ ')}{body}")
    lines = []
    for start in range(0, len(chunks), _TERMS_PER_LINE):
        piece = " ".join(chunks[start:start + _TERMS_PER_LINE])
        lines.append((first_prefix if start == 0 else "   ") + piece)
    if not lines:
        lines.append(first_prefix + "0")
    return lines


def export_lp(model: MilpModel) -> str:
    """CPLEX LP text; byte-identical for equal models."""
    out = [f"\\ {model.name}", "Minimize"]
    obj = sorted(model.objective.items())
    out.extend(_linear(model, [(v, c) for v, c in obj if c], " obj: "))
    out.append("Subject To")
    for row in model.constraints:
        lines = _linear(model, row.terms, f" {row.name}: ")
        lines[-1] += f" {row.sense} {format_number(row.rhs)}"
        out.extend(lines)
    out.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY:
            continue
        lo = format_number(v.lower)
        if v.upper is None:
            out.append(f" {v.name} >= {lo}")
        else:
            out.append(f" {lo} <= {v.name} <= {format_number(v.upper)}")
    out.append("Binaries")
    out.extend(f" {v.name}" for v in model.variables if v.kind == BINARY)
    out.append("Generals")
    out.extend(f" {v.name}" for v in model.variables if v.kind == INTEGER)
    out.append("End")
    return "\n".join(out) + "\n"


def _mps_number(x: Fraction) -> str:
    text = format_number(x)
    if len(text) <= 12:
        return text
    for digits in range(12, 0, -1):
        text = f"{float(x):.{digits}g}"
        if len(text) <= 12:
            return text
    raise ValueError(f"cannot fit {x} into an MPS field")


def _field_line(f1: str, f2: str, f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # fixed MPS columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    line = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5 or f6:
        line += f"   {f5:<8}  {f6:>12}"
    return line.rstrip()


def column_names(model: MilpModel) -> list[str]:
    return [f"C{idx + 1:07d}" for idx in range(len(model.variables))]


def row_names(model: MilpModel) -> list[str]:
    return [f"R{idx + 1:07d}" for idx in range(len(model.constraints))]


def export_mps(model: MilpModel) -> str:
    """Fixed-column MPS with generated 8-character names.

    Long model names do not fit the fixed format, so columns and rows are
    renamed ``C0000001``/``R0000001`` and the mapping back to the LP names is
    written as leading comment lines.
    """
    cols, rows = column_names(model), row_names(model)
    out = [f"* {model.name}"]
    out.extend(f"* {c} {v.name}" for c, v in zip(cols, model.variables))
    out.extend(f"* {r} {row.name}" for r, row in zip(rows, model.constraints))
    out.append(f"NAME          {model.name[:8].upper()}")
    out.append("ROWS")
    out.append(" N  COST")
    code = {LE: "L", GE: "G", EQ: "E"}
    for r, row in zip(rows, model.constraints):
        out.append(f" {code[row.sense]}  {r}")
    out.append("COLUMNS")
    entries: list[list[tuple[str, Fraction]]] = [[] for _ in model.variables]
    for v, c in sorted(model.objective.items()):
        if c:
            entries[v].append(("COST", c))
    for r, row in zip(rows, model.constraints):
        for v, c in row.terms:
            entries[v].append((r, c))
    in_int = False
    marker = 0
    for idx, v in enumerate(model.variables):
        integral = v.kind in (BINARY, INTEGER)
        if integral != in_int:
            marker += 1
            tag = "'INTORG'" if integral else "'INTEND'"
            out.append(_field_line("", f"M{marker:07d}", "'MARKER'", "", tag))
            in_int = integral
        pairs = entries[idx] or [("COST", Fraction(0))]
        for start in range(0, len(pairs), 2):
            chunk = pairs[start:start + 2]
            f5, f6 = (chunk[1][0], _mps_number(chunk[1][1])) if len(chunk) > 1 else ("", "")
            out.append(_field_line("", cols[idx], chunk[0][0], _mps_number(chunk[0][1]), f5, f6))
    if in_int:
        marker += 1
        out.append(_field_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    for r, row in zip(rows, model.constraints):
        if row.rhs:
            out.append(_field_line("", "RHS", r, _mps_number(row.rhs)))
    out.append("BOUNDS")
    for c, v in zip(cols, model.variables):
        if v.kind == BINARY:
            out.append(_field_line("BV", "BND", c))
            continue
        if v.lower:
            out.append(_field_line("LO", "BND", c, _mps_number(v.lower)))
        if v.upper is not None:
            out.append(_field_line("UP", "BND", c, _mps_number(v.upper)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"
