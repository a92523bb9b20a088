"""Seeded random commuting systems for property checks.

Systems are coordinate shifts on products of cyclic groups, so they commute
by construction.  Optionally the points are relabelled by a random
permutation (conjugating every shift by it), and optionally the space is a
disjoint union of two grids carrying different total masses, which gives
non-ergodic systems with non-uniform weights.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Sequence

from .systems import Observable, ProbabilitySpace, System, Transformation

DENOMINATORS = (1, 2, 3, 4)


@dataclass
class Instance:
    seed: int
    system: System
    functions: dict[int, Observable]
    subset: Observable
    description: str


def grid_points(factors: Sequence[int]) -> list[tuple[int, ...]]:
    pts = [()]
    for a in factors:
        pts = [p + (k,) for p in pts for k in range(a)]
    return pts


def grid_shift(factors: Sequence[int], shift: Sequence[int]) -> list[int]:
    """Image list of ``v -> v + shift`` on the grid, points in row-major order."""
    pts = grid_points(factors)
    index = {p: k for k, p in enumerate(pts)}
    return [index[tuple((v + s) % a for v, s, a in zip(p, shift, factors))] for p in pts]


def grid_system(factors: Sequence[int], shifts: Sequence[Sequence[int]]) -> System:
    n = prod(factors)
    ts = tuple(Transformation(tuple(grid_shift(factors, s))) for s in shifts)
    return System(ProbabilitySpace.uniform(n), ts, commuting=True)


def _factorization(rng: random.Random, n: int) -> list[int]:
    if n == 1:
        return [1]
    divisors = [k for k in range(2, n + 1) if n % k == 0]
    first = rng.choice(divisors)
    rest = n // first
    return [first] + ([] if rest == 1 else _factorization(rng, rest))


def _component(rng: random.Random, n: int, d: int):
    factors = _factorization(rng, n)
    return [grid_shift(factors, [rng.randrange(a) for a in factors]) for _ in range(d)]


def random_system(rng: random.Random, max_points: int = 8, d: int = 2, relabel: bool | None = None,
                  weighted: bool | None = None) -> tuple[System, str]:
    if weighted is None:
        weighted = max_points >= 2 and rng.random() < 0.3
    if relabel is None:
        relabel = rng.random() < 0.5
    if weighted and max_points >= 2:
        n1 = rng.randint(1, max_points - 1)
        n2 = rng.randint(1, max_points - n1)
        sizes = [n1, n2]
        mass1 = Fraction(rng.randint(1, 4), 5)
        masses = [mass1, 1 - mass1]
    else:
        sizes = [rng.randint(1, max_points)]
        masses = [Fraction(1)]
    images = [[] for _ in range(d)]
    weights = []
    offset = 0
    for size, mass in zip(sizes, masses):
        comp = _component(rng, size, d)
        for i in range(d):
            images[i].extend(offset + y for y in comp[i])
        weights.extend([mass / size] * size)
        offset += size
    n = offset
    if relabel:
        perm = list(range(n))
        rng.shuffle(perm)  # old point x becomes perm[x]
        new_images = []
        for img in images:
            out = [0] * n
            for x, y in enumerate(img):
                out[perm[x]] = perm[y]
            new_images.append(out)
        images = new_images
        new_weights = [Fraction(0)] * n
        for x, w in enumerate(weights):
            new_weights[perm[x]] = w
        weights = new_weights
    space = ProbabilitySpace(tuple(weights))
    system = System(space, tuple(Transformation(tuple(img)) for img in images), commuting=True)
    desc = f"sizes={sizes} masses={[str(m) for m in masses]} relabel={relabel} d={d}"
    return system, desc


def random_observable(rng: random.Random, space: ProbabilitySpace) -> Observable:
    """Rational values with ``|f| <= 1`` and small denominators."""
    vals = []
    for _ in range(space.size):
        q = rng.choice(DENOMINATORS)
        vals.append(Fraction(rng.randint(-q, q), q))
    return Observable(tuple(vals), space)


def random_indicator(rng: random.Random, space: ProbabilitySpace) -> Observable:
    return Observable.indicator(space, [x for x in range(space.size) if rng.random() < 0.5])


def random_instance(seed: int, max_points: int = 8, max_d: int = 3, min_d: int = 1,
                    relabel: bool | None = None, weighted: bool | None = None) -> Instance:
    rng = random.Random(seed)
    d = rng.randint(min_d, max_d)
    system, desc = random_system(rng, max_points, d, relabel, weighted)
    functions = {mask: random_observable(rng, system.space) for mask in range(1, 1 << d)}
    subset = random_indicator(rng, system.space)
    return Instance(seed, system, functions, subset, desc)
