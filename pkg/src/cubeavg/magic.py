"""The magic extension of a finite commuting system.

Points of the extension are the support tuples ``x = (x_eps)`` of the cube
measure, weighted by it.  The side transformation ``T_i*`` applies ``T_i`` to
every coordinate ``eps`` with ``eps_i = 0`` and leaves the others alone.

Factor convention: the base system is recovered through the coordinate of the
empty vertex ``eps = 0``, the only coordinate on which every ``T_i*`` acts as
``T_i``.  The all-ones coordinate is fixed by every side map and can not serve
as an intertwining projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .averages import CubeResult, CubeSpec, cube_average, cube_limit
from .conditional import (
    Partition,
    conditional_expectation,
    invariant_partition,
    join_partitions,
    l2_norm_squared,
)
from .errors import NotInvariant, PropertyViolation
from .measures import SparseMeasure, box_seminorm, build_mu_star, match_rows, mu_levels
from .systems import Observable, ProbabilitySpace, System, Transformation, eps_digits


@dataclass(frozen=True, eq=False)
class MagicSystem:
    base: System
    star_space: ProbabilitySpace
    side_transformations: tuple[Transformation, ...]
    tuples: np.ndarray  # (N*, 2**d); column c is the coordinate of vertex c

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def size(self) -> int:
        return self.star_space.size

    @property
    def vertex_map(self) -> tuple[str, ...]:
        return tuple(eps_digits(c, self.d) for c in range(1 << self.d))

    @cached_property
    def star_system(self) -> System:
        return System(self.star_space, self.side_transformations, commuting=True)

    def point(self, k: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.tuples[k])

    def lift(self, f: Observable, vertex: int = 0) -> Observable:
        """``f`` read off one coordinate: ``x -> f(x_vertex)``."""
        return Observable(tuple(f.values[v] for v in self.tuples[:, vertex].tolist()), self.star_space)

    def sigma_algebra(self, eps: Sequence[int] | None = None) -> Partition:
        """Join of the invariant sigma-algebras of ``T_i*`` for ``i`` in ``eps``."""
        eps = range(1, self.d + 1) if eps is None else eps
        return join_partitions([invariant_partition(self.star_space, self.side_transformations[i - 1])
                                for i in eps])


def side_transformation(coords: np.ndarray, t: Transformation, i: int) -> np.ndarray:
    """Apply ``t`` to the columns whose vertex has bit ``i - 1`` clear."""
    out = coords.copy()
    cols = [c for c in range(coords.shape[1]) if not c >> (i - 1) & 1]
    out[:, cols] = t.array[coords[:, cols]]
    return out


def build_magic(system: System, max_entries: int | None = None) -> MagicSystem:
    mu = build_mu_star(system, max_entries=max_entries)
    order = np.lexsort(mu.coords.T[::-1])
    coords = np.ascontiguousarray(mu.coords[order])
    nums = mu.numerators[order].tolist()
    space = ProbabilitySpace(tuple(Fraction(int(v), mu.denominator) for v in nums))
    sides = []
    for i, t in enumerate(system.transformations, start=1):
        try:
            perm = match_rows(coords, side_transformation(coords, t, i), system.size)
        except KeyError:
            raise NotInvariant(f"side transformation {i} leaves the support") from None
        sides.append(Transformation(tuple(perm.tolist())))
    return MagicSystem(system, space, tuple(sides), coords)


def magic_defect(ms: MagicSystem, f: Observable) -> tuple[Fraction, Fraction]:
    """``(||E(f | join I(T_i*))||^2, |||f|||*^(2^d))``; the first vanishing forces the second to."""
    proj = conditional_expectation(f, ms.sigma_algebra())
    return l2_norm_squared(proj), box_seminorm(ms.star_system, f).power_value


def characterization_check(ms: MagicSystem, eps: Sequence[int], f: Observable, strict: bool = True) -> bool:
    """Remove from ``f`` its projection on ``Z*_eps`` and check the remainder has zero seminorm."""
    eps = tuple(eps)
    h = f - conditional_expectation(f, ms.sigma_algebra(eps))
    ok = box_seminorm(ms.star_system, h, eps).power_value == 0
    if strict and not ok:
        raise PropertyViolation(f"zero seminorm off Z*_{sorted(eps)}")
    return ok


def factor_check(ms: MagicSystem, vertex: int = 0) -> bool:
    """Projection onto ``vertex`` pushes the cube measure to ``mu`` and intertwines every side map."""
    base = ms.base
    marginal = [Fraction(0)] * base.size
    for x, w in zip(ms.tuples[:, vertex].tolist(), ms.star_space.weights):
        marginal[x] += w
    if tuple(marginal) != base.space.weights:
        return False
    col = ms.tuples[:, vertex]
    for i, side in enumerate(ms.side_transformations, start=1):
        if not np.array_equal(col[side.array], base.T(i).array[col]):
            return False
    return True


def marginals_match(ms: MagicSystem) -> bool:
    """Every coordinate marginal of the cube measure is ``mu``."""
    for c in range(1 << ms.d):
        marginal = [Fraction(0)] * ms.base.size
        for x, w in zip(ms.tuples[:, c].tolist(), ms.star_space.weights):
            marginal[x] += w
        if tuple(marginal) != ms.base.space.weights:
            return False
    return True


def star_cube_average(ms: MagicSystem, functions: Mapping[int, Observable], box=None,
                      rank_cap: int | None = None) -> CubeResult:
    """Cube averages on the extension; ``box=None`` gives the limit."""
    spec = CubeSpec(ms.star_system, functions, box, rank_cap)
    return cube_limit(spec) if box is None else cube_average(spec)


def reduced_system(system: System, r: int, max_entries: int | None = None):
    """The system ``(Y, nu, S_1..S_r)`` obtained by freezing the first ``d - r`` directions.

    ``Y`` is the support of the cube measure built from ``T_1..T_{d-r}`` and
    ``S_i`` is the diagonal action of ``T_{d-r+i}`` on it.  Returns the system
    together with the coordinate matrix of its points.
    """
    d = system.d
    if not 1 <= r <= d:
        raise ValueError(f"r must lie in 1..{d}")
    if r < d:
        nu = mu_levels(system, tuple(range(1, d - r + 1)), max_entries)[-1]
    else:
        nu = SparseMeasure.from_space(system.space)
    order = np.lexsort(nu.coords.T[::-1])
    coords = np.ascontiguousarray(nu.coords[order])
    space = ProbabilitySpace(tuple(Fraction(int(v), nu.denominator) for v in nu.numerators[order].tolist()))
    maps = []
    for i in range(d - r + 1, d + 1):
        perm = match_rows(coords, system.T(i).array[coords], system.size)
        maps.append(Transformation(tuple(perm.tolist())))
    return System(space, tuple(maps), commuting=True), coords


def flatten_star(ms: MagicSystem, coords: np.ndarray) -> dict[tuple[int, ...], Fraction]:
    """Re-express the extension of a reduced system as a measure on tuples of base points."""
    out = {}
    for k in range(ms.size):
        flat = tuple(int(v) for y in ms.tuples[k] for v in coords[y])
        out[flat] = ms.star_space.weights[k]
    return dict(sorted(out.items()))
