"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line naming its criterion and
must finish within 60 seconds.
"""

import json
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from itertools import permutations, product
from pathlib import Path

from cubeavg.averages import (
    CubeSpec,
    cube_average,
    cube_limit,
    integrated_cube_limit,
    iterated_limit,
    upper_bound_check_rank1,
    upper_bound_check_rankr,
)
from cubeavg.combinatorics import LatticeSubset, cyclic_correspondence, recurrence_set
from cubeavg.conditional import conditional_expectation, integrate, invariant_partition, l2_norm_squared
from cubeavg.magic import build_magic, characterization_check, magic_defect
from cubeavg.measures import box_seminorm
from cubeavg.random_instances import random_instance
from cubeavg.systems import Observable

from oracles import brute_seminorm_power

TIME_LIMIT = 60.0
INSTANCES = 120
SAMPLES = Path(__file__).resolve().parent.parent / "samples"


@contextmanager
def criterion(capsys, label):
    start = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < TIME_LIMIT, f"took {elapsed:.1f}s"
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label} ({elapsed:.2f}s)")


def instances(max_points=8, max_d=3, count=INSTANCES, start=0):
    out = [random_instance(seed, max_points=max_points, max_d=max_d) for seed in range(start, start + count)]
    assert {inst.system.d for inst in out} == set(range(1, max_d + 1))
    return out


def test_seminorm_oracle_equivalence(capsys):
    with criterion(capsys, "1 seminorm: direct cube-measure integration equals the recursive path"):
        for inst in instances(max_points=6):
            s = inst.system
            images = [t.image for t in s.transformations]
            for f in (inst.functions[(1 << s.d) - 1], inst.subset):
                direct = box_seminorm(s, f, method="direct").power_value
                assert direct == box_seminorm(s, f, method="recursive").power_value, inst.description
                assert direct == brute_seminorm_power(s.space.weights, images, f.values)


def test_multi_period_stability_and_iterated_limit(capsys):
    with criterion(capsys, "2 cube averages over whole periods are exact and offset-free; iterated = joint limit"):
        for inst in instances():
            s = inst.system
            spec = CubeSpec(s, inst.functions)
            limit = cube_limit(spec).average
            for ks in product((1, 2, 3), repeat=s.d):
                for offsets in product((0, 1, 17), repeat=s.d):
                    box = tuple((m, m + k * L) for m, k, L in zip(offsets, ks, s.orders))
                    assert cube_average(spec.with_box(box)).average == limit, (inst.description, box)
            assert iterated_limit(spec).average == limit, inst.description


def test_averaged_intersections_lower_bound(capsys):
    with criterion(capsys, "3 averaged cube intersections >= mu(A)^(2^d) and equal the seminorm power of 1_A"):
        for inst in instances():
            s, a = inst.system, inst.subset
            limit = integrated_cube_limit(s, a)
            assert limit >= integrate(a) ** (1 << s.d), inst.description
            assert limit == box_seminorm(s, a).power_value, inst.description


def test_limit_norm_bounded_by_full_seminorms(capsys):
    with criterion(capsys, "4 L2 norm of the cube limit <= min box seminorm; single-map seminorm = projection norm"):
        for inst in instances():
            s = inst.system
            assert all(f.sup_norm() <= 1 for f in inst.functions.values())
            report = upper_bound_check_rank1(CubeSpec(s, inst.functions), strict=False)
            assert len(report.bounds) == (1 << s.d) - 1
            assert report.l2_norm <= report.minimum + 1e-9, inst.description
            f = inst.functions[1]
            proj = conditional_expectation(f, invariant_partition(s.space, s.T(1)))
            assert box_seminorm(s, f, (1,)).power_value == l2_norm_squared(proj)


def test_rank_r_bound(capsys):
    with criterion(capsys, "5 rank-r cube limit <= subset seminorms, every r"):
        for inst in instances():
            spec = CubeSpec(inst.system, inst.functions)
            for r in range(1, inst.system.d + 1):
                report = upper_bound_check_rankr(spec.with_rank(r), strict=False)
                assert report.rank == r and report.bounds
                assert report.holds, (inst.description, r)


def test_magic_extension(capsys):
    with criterion(capsys, "6 extension: seminorm vanishes off the join of side invariant sets; characterization"):
        for inst in instances(max_points=4, max_d=2):
            ms = build_magic(inst.system)
            z = ms.sigma_algebra()
            atoms = [Observable.indicator(ms.star_space, [k]) for k in range(ms.size)]
            for g in atoms:
                a, b = magic_defect(ms, g - conditional_expectation(g, z))
                assert a == 0 and b == 0, inst.description
            for mask in range(1, 1 << ms.d):
                eps = [i + 1 for i in range(ms.d) if mask >> i & 1]
                for g in atoms + [ms.lift(inst.subset)]:
                    assert characterization_check(ms, eps, g, strict=False), (inst.description, eps)


def test_seminorm_axioms(capsys):
    c = Fraction(-3, 4)
    with criterion(capsys, "7 seminorm: triangle, homogeneity, digit permutation, monotone chain for 1_A"):
        for inst in instances():
            s = inst.system
            d = s.d
            f, g = inst.functions[1], inst.functions[(1 << d) - 1]
            nf, ng, nfg = (box_seminorm(s, h).float_value for h in (f, g, f + g))
            assert nfg <= nf + ng + 1e-9
            assert box_seminorm(s, f * c).power_value == c ** (1 << d) * box_seminorm(s, f).power_value
            base = box_seminorm(s, g).power_value
            for order in permutations(range(1, d + 1)):
                assert box_seminorm(s, g, order).power_value == base
            a = inst.subset
            full = box_seminorm(s, a).power_value
            first = box_seminorm(s, a, (1,)).power_value
            # |||1_A|||_{T_1..T_d} >= |||1_A|||_{T_1} >= int 1_A, compared at matching powers
            assert full >= first ** (1 << (d - 1))
            assert first >= integrate(a) ** 2


def test_recurrence_sets(capsys):
    with criterion(capsys, "8 recurrence sets: nonempty for c > 0, contain 0 at c = 0, monotone; Z_4 example"):
        cs = [Fraction(0), Fraction(1, 1000), Fraction(1, 100), Fraction(1, 10), Fraction(1)]
        for inst in instances():
            s, a = inst.system, inst.subset
            reports = [recurrence_set(s, a, c) for c in cs]
            assert (0,) * s.d in reports[0].good_set
            assert all(r.good_set for r in reports[1:])
            for small, big in zip(reports, reports[1:]):
                assert set(small.good_set) <= set(big.good_set)
        system, a = cyclic_correspondence(LatticeSubset.from_points([4], [[0], [2]]))
        report = recurrence_set(system, a, 0)
        assert report.good_set == [(0,), (2,)] and report.syndetic_gap == 2


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "cubeavg.cli", *map(str, args)],
                          capture_output=True, check=False)


def test_determinism(capsys, tmp_path):
    with criterion(capsys, "9 identical config and seed give byte-identical JSON"):
        runs = [
            ("suite", "--seed", "7", "--instances", "100"),
            ("limit", "--check-bounds", SAMPLES / "cube_grid.json"),
            ("magic", SAMPLES / "grid_2x3.toml"),
            ("recurrence", "--subset", SAMPLES / "subset_z4.json", "--c", "1/100"),
        ]
        for args in runs:
            first, second = _cli(*args), _cli(*args)
            assert first.returncode == 0, first.stderr
            assert first.stdout == second.stdout
            json.loads(first.stdout)
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for p in paths:
            assert _cli("--output", p, "suite", "--seed", "11", "--instances", "30").returncode == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()
