"""Recurrence sets on finite cyclic windows.

A subset ``A`` of ``Z_{N_1} x ... x Z_{N_d}`` becomes a system through the
coordinate shifts, with ``mu(A)`` equal to its window density.  For every
``n`` in one period box we get the measure of the cube intersection
``mu(intersection over eps of T_eps^{-n} A)``; the good set collects the ``n``
where it reaches ``mu(A)^(2^d) - c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .averages import integrated_cube_limit, intersection_measures
from .conditional import integrate
from .errors import NotIndicator, PropertyViolation
from .systems import Observable, ProbabilitySpace, System, Transformation


@dataclass(frozen=True, eq=False)
class LatticeSubset:
    """Members of a cyclic window, stored as a flat row-major bitset."""

    moduli: tuple[int, ...]
    members: np.ndarray  # bool, length prod(moduli)

    def __post_init__(self):
        moduli = tuple(int(m) for m in self.moduli)
        if not moduli or any(m < 1 for m in moduli):
            raise ValueError(f"bad moduli {moduli}")
        bits = np.asarray(self.members, dtype=bool).reshape(-1)
        if bits.size != prod(moduli):
            raise ValueError(f"bitset has {bits.size} cells, window has {prod(moduli)}")
        object.__setattr__(self, "moduli", moduli)
        object.__setattr__(self, "members", bits)

    @classmethod
    def from_points(cls, moduli: Sequence[int], points: Iterable[Sequence[int]]) -> "LatticeSubset":
        moduli = tuple(int(m) for m in moduli)
        bits = np.zeros(moduli, dtype=bool)
        for pt in points:
            pt = tuple(int(v) for v in pt)
            if len(pt) != len(moduli) or any(not 0 <= v < m for v, m in zip(pt, moduli)):
                raise ValueError(f"point {pt} outside window {moduli}")
            bits[pt] = True
        return cls(moduli, bits)

    @property
    def dims(self) -> int:
        return len(self.moduli)

    def __len__(self):
        return int(self.members.sum())

    def points(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in np.unravel_index(k, self.moduli)) for k in np.flatnonzero(self.members)]


def upper_density_window(a: LatticeSubset) -> Fraction:
    """Counting density of ``a`` in its window."""
    return Fraction(len(a), prod(a.moduli))


def shift_system(moduli: Sequence[int]) -> System:
    """``Z_{N_1} x ... x Z_{N_d}`` with uniform weights and the unit coordinate shifts."""
    moduli = tuple(moduli)
    grid = np.arange(prod(moduli)).reshape(moduli)
    ts = []
    for axis in range(len(moduli)):
        # image of n is n + e_axis
        image = np.roll(grid, -1, axis=axis).reshape(-1)
        ts.append(Transformation(tuple(image.tolist())))
    return System(ProbabilitySpace.uniform(prod(moduli)), tuple(ts), commuting=True)


def cyclic_correspondence(a: LatticeSubset) -> tuple[System, Observable]:
    system = shift_system(a.moduli)
    return system, Observable.indicator(system.space, np.flatnonzero(a.members).tolist())


@dataclass
class RecurrenceReport:
    threshold: Fraction
    good_set: list[tuple[int, ...]]
    syndetic_gap: int | None
    periods: tuple[int, ...]
    measures: dict[tuple[int, ...], Fraction]

    def as_dict(self) -> dict:
        from .systems import format_rational

        return {
            "threshold": format_rational(self.threshold),
            "periods": list(self.periods),
            "good_set": [list(n) for n in self.good_set],
            "good_count": len(self.good_set),
            "syndetic_gap": self.syndetic_gap if self.syndetic_gap is not None else "none within window",
        }


def syndetic_gap(good: np.ndarray) -> int | None:
    """Least ``R`` such that every cyclic ``R x ... x R`` window of ``good`` has a True cell.

    Windows longer than a period wrap onto the whole axis.
    """
    good = np.asarray(good, dtype=bool)
    if not good.any():
        return None
    for R in range(1, max(good.shape) + 1):
        hit = good
        for axis, L in enumerate(good.shape):
            span = min(R, L)
            acc = hit.copy()
            for k in range(1, span):
                acc |= np.roll(hit, -k, axis=axis)
            hit = acc
        if hit.all():
            return R
    return None


def recurrence_set(system: System, a: Observable, c) -> RecurrenceReport:
    """All ``n`` in one period box whose cube intersection has measure at least ``mu(A)^(2^d) - c``."""
    if not a.is_indicator():
        raise NotIndicator("recurrence_set needs a 0/1-valued observable")
    c = Fraction(c)
    if c < 0:
        raise ValueError("c must be >= 0")
    values = intersection_measures(system, a)
    threshold = integrate(a) ** (1 << system.d) - c
    good = np.zeros(values.shape, dtype=bool)
    measures = {}
    for n in product(*(range(L) for L in values.shape)):
        measures[n] = values[n]
        good[n] = values[n] >= threshold
    good_set = [tuple(int(v) for v in n) for n in zip(*np.nonzero(good))]
    return RecurrenceReport(threshold, good_set, syndetic_gap(good), tuple(values.shape), measures)


def average_recurrence_check(system: System, a: Observable, strict: bool = True) -> tuple[Fraction, Fraction]:
    """``(limit of averaged intersection measures, mu(A)^(2^d))``; the first is never smaller."""
    limit = integrated_cube_limit(system, a)
    bound = integrate(a) ** (1 << system.d)
    if strict and limit < bound:
        raise PropertyViolation("averaged cube intersections at least mu(A)^(2^d)")
    return limit, bound
