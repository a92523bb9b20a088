import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubeavg import Observable, kernels
from cubeavg.averages import CubeSpec, cube_average, period_tables, residue_integrals
from cubeavg.measures import box_seminorm, build_mu_star
from cubeavg.random_instances import random_instance

needs_compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="extension not built")


@given(st.permutations(range(9)))
def test_orbit_labels_backends(perm):
    perm = np.asarray(perm, dtype=np.int64)
    expected = []
    for x in range(9):
        cyc, y = [x], int(perm[x])
        while y != x:
            cyc.append(y)
            y = int(perm[y])
        expected.append(min(cyc))
    assert list(kernels.orbit_labels(perm, backend="python")) == expected
    assert list(kernels.orbit_labels(perm)) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_tensor_sums_backends(seed):
    inst = random_instance(seed)
    mu = build_mu_star(inst.system)
    p, _ = inst.functions[1].integer_values()
    vals = kernels.int_array(p)
    labels = np.arange(len(mu), dtype=np.int64) % 3
    a = kernels.tensor_cell_sums(mu.coords, mu.numerators, labels, 3, vals, backend="python")
    b = kernels.tensor_cell_sums(mu.coords, mu.numerators, labels, 3, vals, backend="cython")
    assert a == b


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_cube_kernels_backends(seed):
    inst = random_instance(seed)
    s = inst.system
    tables, lengths = period_tables(s)
    items = sorted(inst.functions.items())
    masks = np.asarray([m for m, _ in items], dtype=np.int64)
    values = np.asarray([f.integer_values()[0] for _, f in items], dtype=np.int64)
    mults = np.ones((s.d, int(lengths.max())), dtype=np.int64)
    wnum, _ = s.space.integer_weights
    w = np.asarray(wnum, dtype=np.int64)
    for name, args in (("cube_sums", (tables, lengths, mults, masks, values)),
                       ("residue_integrals", (tables, lengths, masks, values, w))):
        fn = getattr(kernels, name)
        assert fn(*args, backend="python") == fn(*args, backend="cython")


@needs_compiled
def test_overflow_falls_back_to_exact_arithmetic():
    big = 2**40
    coords = np.asarray([[0, 0], [0, 1], [1, 1]], dtype=np.int64)
    weights = np.asarray([1, 2, 3], dtype=np.int64)
    labels = np.zeros(3, dtype=np.int64)
    values = np.asarray([big, -big + 1], dtype=np.int64)
    out = kernels.tensor_cell_sums(coords, weights, labels, 1, values)
    exact = big * big + 2 * big * (-big + 1) + 3 * (-big + 1) ** 2
    assert out == [exact]
    assert kernels._compiled("tensor_cell_sums", coords, weights, labels, 1, values) is None


def test_huge_values_use_object_arrays():
    vals = kernels.int_array([2**70, 1])
    assert vals.dtype == object
    assert kernels.to_int64(vals) is None
    coords = np.asarray([[0, 0]], dtype=np.int64)
    out = kernels.tensor_cell_sums(coords, np.asarray([1]), np.zeros(1, dtype=np.int64), 1, vals)
    assert out == [2**140]


def test_large_denominators_stay_exact():
    inst = random_instance(4, min_d=3, max_d=3)
    s = inst.system
    f = Observable(tuple(v * Fraction(1, 10**7 + 19) for v in inst.functions[7].values), s.space)
    py = box_seminorm(s, f, backend="python").power_value
    assert py == box_seminorm(s, f).power_value
    assert py == box_seminorm(s, inst.functions[7]).power_value / Fraction(10**7 + 19) ** 8
    spec = CubeSpec(s, {7: f}, ((0, 5), (0, 3), (2, 9)))
    assert cube_average(spec).average.values == tuple(
        v / (10**7 + 19) for v in cube_average(CubeSpec(s, {7: inst.functions[7]}, spec.box)).average.values)
    assert residue_integrals(s, {7: f}).shape == tuple(s.orders)


def test_pure_python_switch():
    env = dict(os.environ, CUBEAVG_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from cubeavg import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
