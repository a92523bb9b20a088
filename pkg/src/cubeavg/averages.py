"""Multiple averages along cubes.

For a box ``[M_1, N_1) x ... x [M_d, N_d)`` the cube average is the function

    x -> mean over n in the box of  prod_{eps != 0} f_eps(T_eps^n x)

where ``T_eps^n`` composes ``T_i^{n_i}`` for ``i`` in ``eps``.  Every
``n_i -> T_i^{n_i}`` is periodic with period ``L_i = order(T_i)``, so a box sum
only depends on how many ``n_i`` fall in each residue class.  Sums are folded
onto one period box with those multiplicities and evaluated by the integer
kernels; limits are exact period averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import prod
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .conditional import conditional_expectation, integrate, invariant_partition, l2_norm_squared
from .errors import EmptyBox, HypothesisViolated, NotIndicator, PropertyViolation
from .measures import SeminormValue, box_seminorm, require_commuting
from .systems import Observable, System, eps_digits, eps_from_digits, eps_members, popcount

FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class CubeSpec:
    """Functions on the cube vertices plus an optional box.

    ``functions`` maps vertex bitmasks (or digit strings such as ``"10"``) to
    observables.  Vertices without a function contribute the constant 1.  The
    empty vertex (mask 0) is only used by the integrated form.
    """

    system: System
    functions: Mapping[int, Observable]
    box: tuple[tuple[int, int], ...] | None = None
    rank_cap: int | None = None

    def __post_init__(self):
        d = self.system.d
        fns = {}
        for key, f in self.functions.items():
            mask = eps_from_digits(key) if isinstance(key, str) else int(key)
            if isinstance(key, str) and len(key) != d:
                raise ValueError(f"vertex {key!r} has {len(key)} digits, expected {d}")
            if not 0 <= mask < (1 << d):
                raise ValueError(f"vertex mask {mask} out of range for d={d}")
            if len(f) != self.system.size:
                raise ValueError(f"function at vertex {eps_digits(mask, d)} has wrong length")
            fns[mask] = f
        object.__setattr__(self, "functions", dict(sorted(fns.items())))
        if self.box is not None:
            box = tuple((int(a), int(b)) for a, b in self.box)
            if len(box) != d:
                raise ValueError(f"box has {len(box)} intervals, expected {d}")
            for a, b in box:
                if b <= a:
                    raise EmptyBox(f"interval [{a}, {b}) is empty")
            object.__setattr__(self, "box", box)
        if self.rank_cap is not None and not 1 <= self.rank_cap <= d:
            raise ValueError(f"rank_cap must lie in 1..{d}")

    @property
    def d(self) -> int:
        return self.system.d

    @property
    def rank(self) -> int:
        return self.d if self.rank_cap is None else self.rank_cap

    def vertex_functions(self) -> list[tuple[int, Observable]]:
        """Non-empty vertices of rank at most ``rank`` with their functions (1 if absent)."""
        one = None
        out = []
        for mask in range(1, 1 << self.d):
            if popcount(mask) > self.rank:
                continue
            f = self.functions.get(mask)
            if f is None:
                one = one or Observable.constant(self.system.space, 1)
                f = one
            out.append((mask, f))
        return out

    def with_box(self, box) -> "CubeSpec":
        return CubeSpec(self.system, self.functions, box, self.rank_cap)

    def with_rank(self, r) -> "CubeSpec":
        return CubeSpec(self.system, self.functions, self.box, r)


@dataclass
class CubeResult:
    average: Observable
    box_lengths: tuple[int, ...]
    integrated: Fraction | None = None
    trace: list | None = None


# --- folding machinery -----------------------------------------------------------

@lru_cache(maxsize=64)
def period_tables(system: System) -> tuple[np.ndarray, np.ndarray]:
    """``tables[i, r] = image of T_{i+1}^r`` for ``r < L_i`` and the periods ``L``."""
    lengths = np.asarray(system.orders, dtype=np.int64)
    n = system.size
    tables = np.zeros((system.d, int(lengths.max()), n), dtype=np.int64)
    for i, t in enumerate(system.transformations):
        cur = np.arange(n, dtype=np.int64)
        for r in range(int(lengths[i])):
            tables[i, r] = cur
            cur = t.array[cur]
    return tables, lengths


def residue_counts(lo: int, hi: int, period: int) -> list[int]:
    """How many ``n`` in ``[lo, hi)`` satisfy ``n = r mod period``, for each ``r``."""
    return [(hi - 1 - r) // period - (lo - 1 - r) // period for r in range(period)]


def _value_matrix(fns: Sequence[Observable]):
    rows, dens = [], []
    for f in fns:
        p, q = f.integer_values()
        rows.append(p)
        dens.append(q)
    flat = [v for row in rows for v in row]
    arr = kernels.int_array(flat)
    n = len(rows[0]) if rows else 0
    return arr.reshape(len(rows), n), dens


def _folded_average(system: System, vertices, mults: list[list[int]], volume: int) -> list[Fraction]:
    tables, lengths = period_tables(system)
    lmax = tables.shape[1]
    mult_arr = kernels.int_array([c for row in mults for c in row + [0] * (lmax - len(row))])
    mult_arr = mult_arr.reshape(system.d, lmax)
    masks = np.asarray([m for m, _ in vertices], dtype=np.int64)
    values, dens = _value_matrix([f for _, f in vertices])
    if not vertices:
        values = np.zeros((0, system.size), dtype=np.int64)
    sums = kernels.cube_sums(tables, lengths, mult_arr, masks, values)
    den = volume * prod(dens)
    return [Fraction(s, den) for s in sums]


def cube_average(spec: CubeSpec) -> CubeResult:
    """Exact average over ``spec.box``; commutativity is not required."""
    if spec.box is None:
        raise EmptyBox("cube_average needs a box")
    system = spec.system
    mults = [residue_counts(a, b, L) for (a, b), L in zip(spec.box, system.orders)]
    lengths = tuple(b - a for a, b in spec.box)
    values = _folded_average(system, spec.vertex_functions(), mults, prod(lengths))
    avg = Observable(tuple(values), system.space)
    integrated = None
    if 0 in spec.functions:
        integrated = integrate(spec.functions[0] * avg)
    return CubeResult(avg, lengths, integrated)


def period_box(system: System) -> tuple[tuple[int, int], ...]:
    return tuple((0, L) for L in system.orders)


def cube_limit(spec: CubeSpec) -> CubeResult:
    """Limit of the cube averages as every side length tends to infinity."""
    system = spec.system
    require_commuting(system, tuple(range(1, system.d + 1)))
    return cube_average(spec.with_box(period_box(system)))


def iterated_limit(spec: CubeSpec) -> CubeResult:
    """The same limit taken one direction at a time.

    The ``n_1`` direction is removed with the mean ergodic theorem: grouping
    the vertices by ``eps_1`` gives ``G_0 * (G_1 o T_1^{n_1})`` and its average
    over ``n_1`` is ``G_0 * E(G_1 | I(T_1))``.  The remaining directions are
    then averaged over their periods in the order ``n_2, n_3, ...``.
    """
    system = spec.system
    require_commuting(system, tuple(range(1, system.d + 1)))
    tables, lengths = period_tables(system)
    n = system.size
    inv1 = invariant_partition(system.space, system.T(1))
    vertices = spec.vertex_functions()
    rest = [range(int(L)) for L in lengths[1:]]

    def move(f: Observable, mask: int, r: Sequence[int]) -> list[Fraction]:
        y = np.arange(n)
        for i in reversed(range(1, system.d)):
            if mask >> i & 1:
                y = tables[i, r[i - 1]][y]
        return [f.values[k] for k in y.tolist()]

    inner = []
    for r in product(*rest):
        g0 = [Fraction(1)] * n
        g1 = [Fraction(1)] * n
        for mask, f in vertices:
            moved = move(f, mask, r)
            target = g1 if mask & 1 else g0
            for x in range(n):
                target[x] *= moved[x]
        e1 = conditional_expectation(Observable(tuple(g1), system.space), inv1)
        inner.append([a * b for a, b in zip(g0, e1.values)])

    arr = np.empty((len(inner), n), dtype=object)
    for k, row in enumerate(inner):
        arr[k, :] = row
    arr = arr.reshape(tuple(int(L) for L in lengths[1:]) + (n,))
    for L in lengths[1:]:
        arr = arr.sum(axis=0) / int(L)
    avg = Observable(tuple(Fraction(v) for v in arr.reshape(-1).tolist()), system.space)
    integrated = integrate(spec.functions[0] * avg) if 0 in spec.functions else None
    return CubeResult(avg, tuple(int(L) for L in lengths), integrated)


def residue_integrals(system: System, functions: Mapping[int, Observable]) -> np.ndarray:
    """``int prod_eps f_eps(T_eps^n x) dmu`` for every ``n`` in the period box.

    ``functions`` may include the empty vertex.  Returns an object array of
    Fractions with shape ``(L_1, ..., L_d)``.
    """
    tables, lengths = period_tables(system)
    items = sorted(functions.items())
    masks = np.asarray([m for m, _ in items], dtype=np.int64)
    values, dens = _value_matrix([f for _, f in items])
    if not items:
        values = np.zeros((0, system.size), dtype=np.int64)
    wnum, wden = system.space.integer_weights
    sums = kernels.residue_integrals(tables, lengths, masks, values, kernels.int_array(wnum))
    den = wden * prod(dens)
    out = np.empty(len(sums), dtype=object)
    out[:] = [Fraction(s, den) for s in sums]
    return out.reshape(tuple(int(L) for L in lengths))


def _require_indicator(a: Observable) -> None:
    if not a.is_indicator():
        raise NotIndicator("expected a 0/1-valued observable")


def intersection_measures(system: System, a: Observable) -> np.ndarray:
    """``mu(intersection over eps of T_eps^{-n} A)`` over the period box."""
    _require_indicator(a)
    return residue_integrals(system, {mask: a for mask in range(1 << system.d)})


def integrated_cube_limit(system: System, a: Observable) -> Fraction:
    """Limit of the averaged measures of the cube intersections of ``A``."""
    _require_indicator(a)
    require_commuting(system, tuple(range(1, system.d + 1)))
    values = intersection_measures(system, a)
    return sum(values.reshape(-1).tolist(), Fraction(0)) / values.size


# --- upper bounds ------------------------------------------------------------------

@dataclass
class BoundReport:
    """``rank`` is the number of transformations in each bounding seminorm."""

    rank: int
    l2_norm_squared: Fraction
    bounds: dict[int, SeminormValue]
    d: int

    @property
    def l2_norm(self) -> float:
        return float(self.l2_norm_squared) ** 0.5

    @property
    def minimum(self) -> float:
        return min(v.float_value for v in self.bounds.values())

    @property
    def minimizer(self) -> int:
        return min(self.bounds, key=lambda m: self.bounds[m].float_value)

    @property
    def holds(self) -> bool:
        return self.l2_norm <= self.minimum + FLOAT_TOL

    @property
    def holds_exact(self) -> bool:
        # ||A||_2 <= s^(1/2^r)  <=>  ||A||_2^(2^r) <= s
        lhs = self.l2_norm_squared ** (1 << (self.rank - 1))
        return all(lhs <= v.power_value for v in self.bounds.values())

    def as_dict(self) -> dict:
        from .systems import format_rational

        return {
            "rank": self.rank,
            "l2_norm_squared": format_rational(self.l2_norm_squared),
            "l2_norm_float": self.l2_norm,
            "bounds": {
                eps_digits(m, self.d): {
                    "power_value": format_rational(v.power_value),
                    "degree": v.degree,
                    "value_float": v.float_value,
                }
                for m, v in self.bounds.items()
            },
            "minimum_float": self.minimum,
            "holds": self.holds,
            "holds_exact": self.holds_exact,
        }


def _check_bounded(spec: CubeSpec) -> None:
    for mask, f in spec.functions.items():
        if f.sup_norm() > 1:
            raise HypothesisViolated(
                f"|f| <= 1 fails at vertex {eps_digits(mask, spec.d)} (sup {f.sup_norm()})"
            )


def _upper_bound(spec: CubeSpec, r: int, full: bool, strict: bool) -> BoundReport:
    _check_bounded(spec)
    spec = spec.with_rank(r)
    limit = cube_limit(spec).average
    everything = tuple(range(1, spec.d + 1))
    bounds = {}
    for mask, f in spec.vertex_functions():
        if full:
            bounds[mask] = box_seminorm(spec.system, f, everything)
        elif popcount(mask) == r:
            bounds[mask] = box_seminorm(spec.system, f, eps_members(mask))
    report = BoundReport(len(everything) if full else r, l2_norm_squared(limit), bounds, spec.d)
    if strict and not report.holds:
        if full:
            name = "cube-limit norm bounded by the box seminorm of every vertex function"
        else:
            name = f"rank-{r} cube-limit norm bounded by the subset seminorms"
        raise PropertyViolation(name, report)
    return report


def upper_bound_check_rank1(spec: CubeSpec, strict: bool = True) -> BoundReport:
    """``||lim||_2 <= min over eps != 0 of |||f_eps|||_{T_1..T_d}``."""
    return _upper_bound(spec, spec.d, True, strict)


def upper_bound_check_rankr(spec: CubeSpec, strict: bool = True) -> BoundReport:
    """Rank-capped average against ``min over |eps| = r of |||f_eps|||_eps``."""
    return _upper_bound(spec, spec.rank, False, strict)


# --- traces and the non-commuting demo ------------------------------------------------

def l2_distance_squared(f: Observable, g: Observable) -> Fraction:
    return l2_norm_squared(f - g)


def deviation_bound(spec: CubeSpec, lengths: Sequence[int]) -> Fraction:
    """Pointwise bound ``prod ||f||_inf * sum_i L_i / (2 N_i)`` on ``|avg - lim|``."""
    sup = prod((f.sup_norm() for _, f in spec.vertex_functions()), start=Fraction(1))
    return sup * sum((Fraction(L, 2 * N) for L, N in zip(spec.system.orders, lengths)), Fraction(0))


def convergence_trace(spec: CubeSpec, lengths: Sequence[Sequence[int]] | None = None,
                      offsets: Sequence[int] | None = None, steps: int = 8) -> list[dict]:
    """L2 distance to the limit along a sequence of boxes ``[M_i, M_i + N_i)``.

    By default the side lengths double: ``1, 2, 4, ...`` in every direction.
    """
    d = spec.d
    if lengths is None:
        lengths = [(1 << k,) * d for k in range(steps)]
    offsets = tuple(offsets) if offsets is not None else (0,) * d
    limit = cube_limit(spec).average
    rows = []
    for ls in lengths:
        box = tuple((m, m + int(ln)) for m, ln in zip(offsets, ls))
        avg = cube_average(spec.with_box(box)).average
        dev2 = l2_distance_squared(avg, limit)
        rows.append({"box_lengths": tuple(int(v) for v in ls), "l2_deviation_squared": dev2,
                     "l2_deviation": float(dev2) ** 0.5})
    return rows


@dataclass
class DivergenceReport:
    rows: list[dict] = field(default_factory=list)
    commuting: bool = True

    @property
    def final_distance(self) -> float:
        return self.rows[-1]["l2_distance"] if self.rows else 0.0


def divergence_demo(spec: CubeSpec, boxes_a: Sequence, boxes_b: Sequence) -> DivergenceReport:
    """Cube averages along two box sequences and their L2 distance, step by step.

    Only observational: nothing is asserted, commuting or not.
    """
    if len(boxes_a) != len(boxes_b):
        raise ValueError("box sequences must have equal length")
    report = DivergenceReport(commuting=spec.system.commutation_witness() is None)
    for ba, bb in zip(boxes_a, boxes_b):
        a = cube_average(spec.with_box(ba)).average
        b = cube_average(spec.with_box(bb)).average
        dist2 = l2_distance_squared(a, b)
        report.rows.append({
            "box_a": [list(iv) for iv in spec.with_box(ba).box],
            "box_b": [list(iv) for iv in spec.with_box(bb).box],
            "average_a": a,
            "average_b": b,
            "l2_distance_squared": dist2,
            "l2_distance": float(dist2) ** 0.5,
        })
    return report
