"""``nba`` command line.

stdout always carries one JSON document; diagnostics go to stderr.
Exit codes: 0 success, 1 infeasible / unsolved / failed check, 2 input
error, 3 resource limit. ``NBA_LOG`` (error, info, debug) sets verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from nba.cost import total_cost
from nba.errors import InputError, NBAError, PreconditionError, ResourceLimitError
from nba.feasibility import check_feasible, violations_to_json
from nba.generate import generate, genspec_from_json, instance_to_document
from nba.io import dumps, instance_from_json, plan_from_json, plan_to_json, read_json, write_json
from nba.milp import encode, export_lp, export_mps
from nba.model import rational_to_json, validate_plan
from nba.scenarios.cdn import CDN_SCHEMA, cdn_from_json, cdn_solve
from nba.scenarios.cloudwan import CWAN_SCHEMA, cloudwan_from_json, cloudwan_solve
from nba.scenarios.lvdn import LVDN_SCHEMA, RTCN_SCHEMA, lvdn_from_json, lvdn_lower, rtcn_expand, rtcn_from_json
from nba.scenarios.unimodular import check_totally_unimodular
from nba.solvers import ExactLimits, improve_local, solve_exact, solve_greedy

log = logging.getLogger("nba")

OK, INFEASIBLE, INPUT, RESOURCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message, "argv")


def _load(path: str):
    """Instance object for any known schema; LVDN and RTCN arrive lowered to the generic model."""
    doc = read_json(path)
    schema = doc.get("schema") if isinstance(doc, dict) else None
    if schema == CDN_SCHEMA:
        return "cdn", cdn_from_json(doc)
    if schema == CWAN_SCHEMA:
        return "cwan", cloudwan_from_json(doc)
    if schema == LVDN_SCHEMA:
        return "generic", lvdn_lower(lvdn_from_json(doc))
    if schema == RTCN_SCHEMA:
        return "generic", lvdn_lower(rtcn_expand(rtcn_from_json(doc)))
    return "generic", instance_from_json(doc)


def _generic_only(kind: str, command: str):
    if kind != "generic":
        raise InputError(f"{command} needs a generic, LVDN or RTCN instance", "--instance")


def cmd_gen(args) -> tuple[int, dict]:
    spec = genspec_from_json(read_json(args.spec))
    doc = instance_to_document(generate(spec))
    if args.out:
        write_json(args.out, doc)
        return OK, {"written": args.out, "schema": doc["schema"], "seed": spec.seed}
    return OK, doc


def cmd_validate(args) -> tuple[int, dict]:
    kind, inst = _load(args.instance)
    if not args.plan:
        return OK, {"valid": True, "schema": kind}
    _generic_only(kind, "validate --plan")
    plan = plan_from_json(read_json(args.plan))
    validate_plan(inst, plan)
    found = check_feasible(inst, plan)
    doc = violations_to_json(found)
    doc["valid"] = not found
    return (INFEASIBLE if found else OK), doc


def cmd_cost(args) -> tuple[int, dict]:
    kind, inst = _load(args.instance)
    _generic_only(kind, "cost")
    plan = plan_from_json(read_json(args.plan))
    validate_plan(inst, plan)
    return OK, {"cost": rational_to_json(total_cost(inst, plan))}


def cmd_solve(args) -> tuple[int, dict]:
    kind, inst = _load(args.instance)
    if kind in ("cdn", "cwan"):
        if args.strategy == "local":
            raise InputError("local search applies to generic, LVDN and RTCN instances", "--strategy")
        solver = cdn_solve if kind == "cdn" else cloudwan_solve
        report = solver(inst, args.strategy)
        doc = report.to_json(include_timing=args.timing)
        if args.out:
            write_json(args.out, doc)
    else:
        if args.strategy == "exact":
            report = solve_exact(inst, ExactLimits(), workers=args.workers)
        else:
            report = solve_greedy(inst, seed=args.seed)
            if args.strategy == "local" and report.feasible:
                base = report
                report = improve_local(inst, base.plan)
                report.stats["greedy_cost"] = rational_to_json(base.cost)
        doc = report.to_json(include_timing=args.timing)
        if args.out and report.feasible:
            write_json(args.out, plan_to_json(report.plan))
    if args.report:
        write_json(args.report, doc)
    log.info("solve finished: %s", report.status)
    return (OK if report.feasible else INFEASIBLE), doc


def cmd_export(args) -> tuple[int, dict]:
    kind, inst = _load(args.instance)
    _generic_only(kind, "export-milp")
    model = encode(inst)
    text = export_lp(model) if args.format == "lp" else export_mps(model)
    doc = {"format": args.format, "counts": model.counts()}
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        doc["written"] = args.out
    else:
        doc["text"] = text
    return OK, doc


def cmd_check_tu(args) -> tuple[int, dict]:
    kind, inst = _load(args.instance)
    if kind != "cwan":
        raise InputError("check-tu needs a Cloud-WAN instance", "--instance")
    result = check_totally_unimodular(inst, args.slot, args.max_sub)
    doc = result.to_json()
    doc["slot"] = args.slot
    return (OK if result.ok else INFEASIBLE), doc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nba", description="Bandwidth allocation under percentile billing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate an instance from a generator spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="validate an instance and optionally a plan")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("cost", help="percentile-billed cost of a plan")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--strategy", choices=("exact", "greedy", "local"), default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--report")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("export-milp", help="write the MILP as CPLEX LP or fixed MPS")
    p.add_argument("--instance", required=True)
    p.add_argument("--format", choices=("lp", "mps"), default="lp")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("check-tu", help="total unimodularity of a Cloud-WAN slot matrix")
    p.add_argument("--instance", required=True)
    p.add_argument("--slot", type=int, default=1)
    p.add_argument("--max-sub", type=int, default=6)
    p.set_defaults(func=cmd_check_tu)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("NBA_LOG", "error").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.ERROR), format="nba: %(levelname)s %(message)s")


def run(argv: list[str] | None = None) -> int:
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
        code, doc = args.func(args)
    except ResourceLimitError as exc:
        code, doc = RESOURCE, {"error": str(exc), "counts": exc.counts}
    except InputError as exc:
        code, doc = INPUT, {"error": str(exc), "field": exc.field}
    except PreconditionError as exc:
        code, doc = INPUT, {"error": str(exc)}
    except NBAError as exc:
        code, doc = INPUT, {"error": str(exc)}
    if "error" in doc:
        print(f"nba: {doc['error']}", file=sys.stderr)
    sys.stdout.write(dumps(doc))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
