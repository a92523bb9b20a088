"""Command line entry point.

Exit codes: 0 success, 2 when a checked property fails on the given input,
1 for usage, configuration, IO and input-validation errors.  Errors are
written to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .averages import (
    CubeSpec,
    convergence_trace,
    cube_average,
    cube_limit,
    divergence_demo,
    iterated_limit,
    period_box,
    upper_bound_check_rank1,
    upper_bound_check_rankr,
)
from .combinatorics import average_recurrence_check, cyclic_correspondence, recurrence_set, upper_density_window
from .conditional import conditional_expectation, integrate
from .errors import CubeAvgError, NotCommuting, PropertyViolation
from .io import ConfigError, dumps, load_config, load_cube_spec, load_subset, load_system, observable_from_data
from .magic import build_magic, characterization_check, factor_check, magic_defect, marginals_match
from .measures import box_seminorm
from .suite import STATEMENTS, run_suite
from .systems import Observable, eps_digits, eps_members, format_rational, parse_rational

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- commands ---------------------------------------------------------------------

def _labels(system):
    return list(system.space.labels) if system.space.labels else [str(k) for k in range(system.size)]


def _values_rows(system, f: Observable, name="value"):
    return [["point", name]] + [[lab, format_rational(v)] for lab, v in zip(_labels(system), f.values)]


def _key_rows(payload: dict):
    rows = [["key", "value"]]
    for k, v in payload.items():
        if isinstance(v, (dict, list)):
            v = json.dumps(v, sort_keys=True, default=str)
        elif isinstance(v, Fraction):
            v = format_rational(v)
        rows.append([k, v])
    return rows


def _parse_eps(text: str | None, d: int) -> tuple[int, ...]:
    """``None`` -> all directions; ``"101"`` (d digits of 0/1) -> mask; otherwise ``"1,3"``."""
    if text is None:
        return tuple(range(1, d + 1))
    text = text.strip()
    if len(text) == d and set(text) <= {"0", "1"} and "," not in text:
        return tuple(i + 1 for i, ch in enumerate(text) if ch == "1")
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"bad --eps {text!r}") from None


def _load_function(path, system) -> Observable:
    return observable_from_data(load_config(path), system)


def cmd_validate(args):
    system = load_system(args.system, require_commuting=False if args.allow_noncommuting else None)
    witness = system.commutation_witness()
    payload = {
        "valid": True,
        "points": system.size,
        "d": system.d,
        "orders": list(system.orders),
        "commuting": witness is None,
        "weights": [format_rational(w) for w in system.space.weights],
    }
    if witness is not None:
        payload["witness"] = NotCommuting(*witness).details()
    return payload, _key_rows(payload)


def cmd_seminorm(args):
    system = load_system(args.system)
    f = _load_function(args.function, system)
    eps = _parse_eps(args.eps, system.d)
    val = box_seminorm(system, f, eps, method=args.method, max_entries=args.max_entries)
    payload = {
        "epsilon": list(eps),
        "power_value": format_rational(val.power_value),
        "degree": val.degree,
        "value": val.float_value,
    }
    return payload, _key_rows(payload)


def _trace_csv(rows, d) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"box_len_{i}" for i in range(1, d + 1)] + ["l2_deviation"])
    for row in rows:
        w.writerow(list(row["box_lengths"]) + [repr(row["l2_deviation"])])
    return buf.getvalue()


def _result_payload(spec: CubeSpec, res, **extra):
    payload = {
        "d": spec.d,
        "rank": spec.rank,
        "box_lengths": list(res.box_lengths),
        "average": [format_rational(v) for v in res.average.values],
        "points": _labels(spec.system),
    }
    if res.integrated is not None:
        payload["integrated"] = format_rational(res.integrated)
    payload.update(extra)
    return payload


def cmd_average(args):
    spec = load_cube_spec(args.spec)
    box_given = spec.box is not None
    if not box_given:
        spec = spec.with_box(period_box(spec.system))
    res = cube_average(spec)
    payload = _result_payload(spec, res, box=[list(iv) for iv in spec.box], box_from_file=box_given)
    if args.trace:
        rows = convergence_trace(spec, steps=args.trace_steps, offsets=[a for a, _ in spec.box])
        Path(args.trace).write_text(_trace_csv(rows, spec.d))
        payload["trace"] = {"path": args.trace, "steps": len(rows)}
    if args.compare_boxes:
        payload["box_comparison"] = _compare_boxes(spec, args.compare_boxes)
    return payload, _values_rows(spec.system, res.average, "average")


def _compare_boxes(spec: CubeSpec, steps: int) -> dict:
    """Square boxes ``[0, N)^d`` against boxes whose first side is ``N`` and the others ``2N``."""
    d = spec.d
    sizes = [1 << k for k in range(steps)]
    boxes_a = [tuple((0, n) for _ in range(d)) for n in sizes]
    boxes_b = [((0, n),) + tuple((0, 2 * n) for _ in range(d - 1)) for n in sizes]
    report = divergence_demo(spec, boxes_a, boxes_b)
    return {
        "commuting": report.commuting,
        "rows": [{"box_a": r["box_a"], "box_b": r["box_b"],
                  "l2_distance_squared": r["l2_distance_squared"],
                  "l2_distance_float": r["l2_distance"]} for r in report.rows],
    }


def cmd_limit(args):
    spec = load_cube_spec(args.spec)
    res = iterated_limit(spec) if args.iterated else cube_limit(spec)
    extra = {"path": "iterated" if args.iterated else "joint"}
    if args.check_bounds:
        # raises PropertyViolation (exit 2) when a bound fails
        extra["bound_all_vertices"] = upper_bound_check_rank1(spec).as_dict()
        extra["bound_rank"] = upper_bound_check_rankr(spec).as_dict()
    return _result_payload(spec, res, **extra), _values_rows(spec.system, res.average, "limit")


def cmd_magic(args):
    system = load_system(args.system)
    ms = build_magic(system, max_entries=args.max_entries)
    d = system.d
    checks = ["defect", "characterization", "factor"] if args.check == "all" else [args.check]
    if args.function:
        fns = [("function", ms.lift(_load_function(args.function, system)))]
    else:
        fns = [(f"atom_{k}", Observable.indicator(ms.star_space, [k])) for k in range(ms.size)]
    verdicts = {}
    failed = []
    if "defect" in checks:
        z = ms.sigma_algebra()
        rows = []
        for name, g in fns:
            h = g - conditional_expectation(g, z)
            a, b = magic_defect(ms, h)
            rows.append({"function": name, "projection_norm_squared": format_rational(a),
                         "seminorm_power": format_rational(b), "ok": b == 0})
        ok = all(r["ok"] for r in rows)
        verdicts["defect"] = {"ok": ok, "rows": rows}
        if not ok:
            failed.append("seminorm vanishes off the join of the side invariant sigma-algebras")
    if "characterization" in checks:
        rows = []
        for mask in range(1, 1 << d):
            eps = eps_members(mask)
            ok = all(characterization_check(ms, eps, g, strict=False) for _, g in fns)
            rows.append({"epsilon": eps_digits(mask, d), "ok": ok})
        ok = all(r["ok"] for r in rows)
        verdicts["characterization"] = {"ok": ok, "rows": rows}
        if not ok:
            failed.append("zero seminorm after removing the projection on the side sigma-algebras")
    if "factor" in checks:
        ok = factor_check(ms) and marginals_match(ms)
        verdicts["factor"] = {"ok": ok, "coordinate": eps_digits(0, d)}
        if not ok:
            failed.append("the base system is a factor of the extension")
    payload = {
        "base_points": system.size,
        "extension_points": ms.size,
        "d": d,
        "checks": verdicts,
        "ok": not failed,
    }
    rows = [["check", "ok"]] + [[k, v["ok"]] for k, v in verdicts.items()]
    if failed:
        raise PropertyViolation("; ".join(failed), payload)
    return payload, rows


def cmd_recurrence(args):
    subset = load_subset(args.subset)
    c = parse_rational(args.c)
    system, a = cyclic_correspondence(subset)
    report = recurrence_set(system, a, c)
    limit, bound = average_recurrence_check(system, a)
    payload = report.as_dict()
    payload.update({
        "c": format_rational(c),
        "density": format_rational(upper_density_window(subset)),
        "measure": format_rational(integrate(a)),
        "averaged_intersection_limit": format_rational(limit),
        "lower_bound": format_rational(bound),
    })
    rows = [[f"n_{i}" for i in range(1, subset.dims + 1)] + ["measure", "good"]]
    good = set(report.good_set)
    for n, m in sorted(report.measures.items()):
        rows.append(list(n) + [format_rational(m), n in good])
    return payload, rows


def cmd_suite(args):
    summary = run_suite(args.seed, args.instances, args.max_points, args.max_d)
    rows = [["check", "passed", "failed"]] + [[k, v["passed"], v["failed"]] for k, v in summary["checks"].items()]
    if not summary["ok"]:
        raise PropertyViolation(summary["failures"][0]["statement"], summary)
    return summary, rows


# --- plumbing ---------------------------------------------------------------------

SUITE_HELP = "checks run on every instance:\n" + "\n".join(f"  {k}: {v}" for k, v in STATEMENTS.items())


def build_parser() -> Parser:
    p = Parser(prog="cubeavg", description="Exact cube averages, box seminorms and recurrence on finite systems.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--output", "-o", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--max-entries", type=int, default=None,
                   help="cap on sparse cube-measure entries (default: $CUBEAVG_MAX_ENTRIES or 10^7)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    s = sub.add_parser("validate", help="check weights, bijectivity, measure preservation and commutation")
    s.add_argument("system")
    s.add_argument("--allow-noncommuting", action="store_true",
                   help="accept systems whose maps do not commute (reported, not rejected)")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("seminorm", help="box seminorm of a function, as an exact power and a float")
    s.add_argument("system")
    s.add_argument("function")
    s.add_argument("--eps", help="transformations to use, e.g. '1,2' or digit string '101' (default all)")
    s.add_argument("--method", choices=("recursive", "direct"), default="recursive",
                   help="recursive cell sums or direct integration against the full cube measure")
    s.set_defaults(func=cmd_seminorm)

    s = sub.add_parser("average", help="cube average over the box of a cube-spec file")
    s.add_argument("spec")
    s.add_argument("--trace", help="write a CSV of the L2 distance to the limit along doubling boxes")
    s.add_argument("--trace-steps", type=int, default=8)
    s.add_argument("--compare-boxes", type=int, metavar="STEPS",
                   help="compare averages along two box sequences; the only mode meant for "
                        "systems whose maps do not commute (set require_commuting false in the file)")
    s.set_defaults(func=cmd_average)

    s = sub.add_parser(
        "limit", formatter_class=argparse.RawDescriptionHelpFormatter,
        help="limit of cube averages (single period box)",
        description="Limit of the cube averages.  --check-bounds also verifies that the L2 norm of the "
                    "limit is at most the box seminorm of every vertex function, and at most the subset "
                    "seminorms of the rank-capped vertices; a failure exits with code 2.")
    s.add_argument("spec")
    s.add_argument("--iterated", action="store_true",
                   help="take the limit one direction at a time, first direction first")
    s.add_argument("--check-bounds", action="store_true")
    s.set_defaults(func=cmd_limit)

    s = sub.add_parser(
        "magic", help="build the cube-measure extension and check its properties",
        description="defect: removing the projection on the join of the side invariant sigma-algebras "
                    "leaves zero seminorm.  characterization: the same for every subset of side maps with "
                    "subset seminorms.  factor: the empty-vertex coordinate maps the extension onto the base.")
    s.add_argument("system")
    s.add_argument("--check", choices=("defect", "characterization", "factor", "all"), default="all")
    s.add_argument("--function", help="lift this base function instead of testing every atom indicator")
    s.set_defaults(func=cmd_magic)

    s = sub.add_parser(
        "recurrence", help="set of n whose cube intersection has measure at least mu(A)^(2^d) - c",
        description="Builds the shift system of the cyclic window, lists the good n in one period box and "
                    "their syndetic gap, and checks that averaged cube intersections are at least "
                    "mu(A)^(2^d) (exit 2 otherwise).")
    s.add_argument("--subset", required=True)
    s.add_argument("--c", default="0", help="relaxation, a rational such as 1/100")
    s.set_defaults(func=cmd_recurrence)

    s = sub.add_parser("suite", help="property checks on seeded random instances",
                       description=SUITE_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--instances", type=int, default=100)
    s.add_argument("--max-points", type=int, default=8)
    s.add_argument("--max-d", type=int, default=3)
    s.set_defaults(func=cmd_suite)
    return p


def _render(payload, rows, fmt: str) -> str:
    if fmt == "json":
        return dumps(payload)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([format_rational(v) if isinstance(v, Fraction) else v for v in row])
    return buf.getvalue()


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _diagnostic(kind: str, message: str, details=None) -> None:
    sys.stderr.write(dumps({"error": kind, "message": message, "details": details or {}}))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _diagnostic("UsageError", str(exc))
        return EXIT_ERROR
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    saved_cap = os.environ.get("CUBEAVG_MAX_ENTRIES")
    if args.max_entries is not None:
        os.environ["CUBEAVG_MAX_ENTRIES"] = str(args.max_entries)
    try:
        payload, rows = args.func(args)
        _emit(_render(payload, rows, args.format), args.output)
        return EXIT_OK
    except PropertyViolation as exc:
        report = exc.report
        if hasattr(report, "as_dict"):
            report = report.as_dict()
        if isinstance(report, dict):
            _emit(dumps(report), args.output)
        _diagnostic("PropertyViolation", str(exc), exc.details())
        return EXIT_VIOLATION
    except CubeAvgError as exc:
        _diagnostic(type(exc).__name__, str(exc), exc.details())
        return EXIT_ERROR
    except (UsageError, ConfigError, OSError, ValueError, KeyError, TypeError) as exc:
        _diagnostic(type(exc).__name__, str(exc))
        return EXIT_ERROR
    finally:
        if saved_cap is None:
            os.environ.pop("CUBEAVG_MAX_ENTRIES", None)
        else:
            os.environ["CUBEAVG_MAX_ENTRIES"] = saved_cap


if __name__ == "__main__":
    sys.exit(main())
