"""Property suite over seeded random instances.

Each check returns the names of the statements it found violated; an empty
list means the instance passed.  Failures carry the full instance so that
they can be replayed from the summary alone.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations

from .averages import (
    CubeSpec,
    cube_average,
    cube_limit,
    integrated_cube_limit,
    iterated_limit,
    upper_bound_check_rank1,
    upper_bound_check_rankr,
)
from .combinatorics import average_recurrence_check, recurrence_set
from .conditional import conditional_expectation, integrate
from .io import observable_to_list, system_to_dict
from .magic import build_magic, characterization_check, factor_check, magic_defect, marginals_match
from .measures import box_seminorm
from .random_instances import Instance, random_instance
from .systems import Observable, eps_digits

STATEMENTS = {
    "seminorm_oracle": "direct and recursive box seminorms agree",
    "multi_period": "cube averages over whole periods do not depend on the number of periods or the offset",
    "iterated_limit": "iterated limit equals the joint limit",
    "lower_bound": "averaged cube intersections at least mu(A)^(2^d) and equal to the seminorm power",
    "rank1_bound": "cube-limit norm bounded by the box seminorm of every vertex function",
    "rankr_bound": "rank-r cube-limit norm bounded by the subset seminorms",
    "seminorm_axioms": "triangle inequality, homogeneity, digit permutation and monotonicity of box seminorms",
    "recurrence": "recurrence sets non-empty, contain 0 at c = 0 and grow with c",
    "magic": "seminorm vanishes off the join of the side invariant sigma-algebras",
}


def check_seminorm_oracle(inst: Instance) -> list[str]:
    s = inst.system
    bad = []
    for f in (inst.subset, inst.functions[(1 << s.d) - 1]):
        if box_seminorm(s, f, method="direct").power_value != box_seminorm(s, f).power_value:
            bad.append("seminorm_oracle")
    return bad


def check_multi_period(inst: Instance) -> list[str]:
    s = inst.system
    spec = CubeSpec(s, inst.functions)
    limit = cube_limit(spec).average
    for k in (1, 2, 3):
        for offset in (0, 1, 17):
            box = tuple((offset, offset + k * L) for L in s.orders)
            if cube_average(spec.with_box(box)).average != limit:
                return ["multi_period"]
    return []


def check_iterated(inst: Instance) -> list[str]:
    spec = CubeSpec(inst.system, inst.functions)
    return [] if iterated_limit(spec).average == cube_limit(spec).average else ["iterated_limit"]


def check_lower_bound(inst: Instance) -> list[str]:
    s, a = inst.system, inst.subset
    limit = integrated_cube_limit(s, a)
    if limit < integrate(a) ** (1 << s.d) or limit != box_seminorm(s, a).power_value:
        return ["lower_bound"]
    return []


def check_rank_bounds(inst: Instance) -> list[str]:
    spec = CubeSpec(inst.system, inst.functions)
    bad = []
    if not upper_bound_check_rank1(spec, strict=False).holds:
        bad.append("rank1_bound")
    for r in range(1, inst.system.d + 1):
        if not upper_bound_check_rankr(spec.with_rank(r), strict=False).holds:
            bad.append("rankr_bound")
            break
    return bad


def check_seminorm_axioms(inst: Instance) -> list[str]:
    s = inst.system
    d = s.d
    f, g = inst.functions[1], inst.functions[(1 << d) - 1]
    nf, ng, nfg = (box_seminorm(s, h).float_value for h in (f, g, f + g))
    ok = nfg <= nf + ng + 1e-9
    c = Fraction(-2, 3)
    ok &= box_seminorm(s, f * c).power_value == c ** (1 << d) * box_seminorm(s, f).power_value
    base = box_seminorm(s, f).power_value
    ok &= all(box_seminorm(s, f, perm).power_value == base for perm in permutations(range(1, d + 1)))
    a = inst.subset
    full = box_seminorm(s, a).power_value
    first = box_seminorm(s, a, (1,)).power_value
    ok &= full >= first ** (1 << (d - 1)) and first >= integrate(a) ** 2
    return [] if ok else ["seminorm_axioms"]


def check_recurrence(inst: Instance) -> list[str]:
    s, a = inst.system, inst.subset
    average_recurrence_check(s, a, strict=False)
    reports = [recurrence_set(s, a, c) for c in (Fraction(0), Fraction(1, 100), Fraction(1, 10), Fraction(1))]
    zero = (0,) * s.d
    ok = zero in reports[0].good_set and all(r.good_set for r in reports[1:])
    ok &= all(set(x.good_set) <= set(y.good_set) for x, y in zip(reports, reports[1:]))
    return [] if ok else ["recurrence"]


def check_magic(inst: Instance) -> list[str]:
    s = inst.system
    if s.d > 2 or s.size > 4:
        return []
    ms = build_magic(s)
    ok = factor_check(ms) and marginals_match(ms)
    z = ms.sigma_algebra()
    for k in range(ms.size):
        g = Observable.indicator(ms.star_space, [k])
        a, b = magic_defect(ms, g - conditional_expectation(g, z))
        ok &= a == 0 and b == 0
    lifted = ms.lift(inst.subset)
    for mask in range(1, 1 << s.d):
        eps = [i + 1 for i in range(s.d) if mask >> i & 1]
        ok &= characterization_check(ms, eps, lifted, strict=False)
    return [] if ok else ["magic"]


CHECKS = {
    "seminorm_oracle": check_seminorm_oracle,
    "multi_period": check_multi_period,
    "iterated_limit": check_iterated,
    "lower_bound": check_lower_bound,
    "rank_bounds": check_rank_bounds,
    "seminorm_axioms": check_seminorm_axioms,
    "recurrence": check_recurrence,
    "magic": check_magic,
}


def instance_record(inst: Instance) -> dict:
    d = inst.system.d
    return {
        "seed": inst.seed,
        "description": inst.description,
        "system": system_to_dict(inst.system),
        "functions": {eps_digits(m, d): observable_to_list(f) for m, f in inst.functions.items()},
        "subset": observable_to_list(inst.subset),
    }


def run_suite(seed: int, instances: int = 100, max_points: int = 8, max_d: int = 3) -> dict:
    """Run every check on ``instances`` random instances derived from ``seed``."""
    counts = {name: {"passed": 0, "failed": 0} for name in CHECKS}
    failures = []
    for k in range(instances):
        inst = random_instance(seed * 1_000_003 + k, max_points=max_points, max_d=max_d)
        for name, check in CHECKS.items():
            violated = check(inst)
            counts[name]["failed" if violated else "passed"] += 1
            for stmt in violated:
                failures.append({
                    "check": name,
                    "statement": STATEMENTS[stmt],
                    "instance": instance_record(inst),
                })
    return {
        "seed": seed,
        "instances": instances,
        "max_points": max_points,
        "max_d": max_d,
        "checks": counts,
        "failures": failures,
        "ok": not failures,
    }
