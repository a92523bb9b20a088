"""Finite sigma-algebras as atom partitions.

On a finite space every sigma-algebra is generated by its atoms, so a
partition of the points is a lossless representation.  Conditional
expectation is then a weighted average over each cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import MismatchedSpace
from .systems import Observable, ProbabilitySpace, Transformation


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if self.rank[a] < self.rank[b]:
            a, b = b, a
        self.parent[b] = a
        if self.rank[a] == self.rank[b]:
            self.rank[a] += 1

    def labels(self) -> list[int]:
        return [self.find(x) for x in range(len(self.parent))]


@dataclass(frozen=True)
class Partition:
    """Atoms of a finite sigma-algebra.

    Cells are ordered by their smallest member and each cell is sorted, so two
    equal partitions always compare and print identically.
    """

    cell_of: tuple[int, ...]
    cells: tuple[tuple[int, ...], ...]
    cell_weight: tuple[Fraction, ...]
    space: ProbabilitySpace = field(compare=False, repr=False)

    @classmethod
    def from_labels(cls, space: ProbabilitySpace, labels: Sequence) -> "Partition":
        if len(labels) != space.size:
            raise MismatchedSpace(f"{len(labels)} labels for {space.size} points")
        first: dict = {}
        for x, lab in enumerate(labels):
            first.setdefault(lab, x)
        order = sorted(first.values())
        cell_id = {labels[x]: k for k, x in enumerate(order)}
        cells: list[list[int]] = [[] for _ in order]
        cell_of = []
        for x, lab in enumerate(labels):
            c = cell_id[lab]
            cells[c].append(x)
            cell_of.append(c)
        weights = tuple(sum((space.weights[x] for x in cell), Fraction(0)) for cell in cells)
        return cls(tuple(cell_of), tuple(tuple(c) for c in cells), weights, space)

    @classmethod
    def trivial(cls, space: ProbabilitySpace) -> "Partition":
        return cls.from_labels(space, [0] * space.size)

    @classmethod
    def discrete(cls, space: ProbabilitySpace) -> "Partition":
        return cls.from_labels(space, list(range(space.size)))

    def __len__(self):
        return len(self.cells)

    def as_lists(self) -> list[list[int]]:
        return [list(c) for c in self.cells]

    def refines(self, other: "Partition") -> bool:
        """True if every cell of ``self`` sits inside a cell of ``other``."""
        return all(len({other.cell_of[x] for x in cell}) == 1 for cell in self.cells)


def invariant_partition(space: ProbabilitySpace, t: Transformation) -> Partition:
    """Atoms of the sigma-algebra of ``t``-invariant sets, i.e. the orbits of ``t``."""
    if len(t) != space.size:
        raise MismatchedSpace("transformation and space differ in size")
    uf = UnionFind(space.size)
    for x, y in enumerate(t.image):
        uf.union(x, y)
    return Partition.from_labels(space, uf.labels())


def orbit_partition(space: ProbabilitySpace, ts: Iterable[Transformation]) -> Partition:
    """Orbits of the group generated by ``ts``: the meet of their invariant sigma-algebras.

    Not to be confused with :func:`join_partitions`, which refines instead of
    coarsening.
    """
    uf = UnionFind(space.size)
    for t in ts:
        for x, y in enumerate(t.image):
            uf.union(x, y)
    return Partition.from_labels(space, uf.labels())


def join_partitions(parts: Sequence[Partition]) -> Partition:
    """Common refinement: the atoms of the sigma-algebra generated by all inputs."""
    if not parts:
        raise ValueError("join of an empty family")
    space = parts[0].space
    for p in parts[1:]:
        if len(p.cell_of) != len(parts[0].cell_of) or p.space.weights != space.weights:
            raise MismatchedSpace("partitions live on different spaces")
    labels = list(zip(*(p.cell_of for p in parts)))
    return Partition.from_labels(space, labels)


def conditional_expectation(f: Observable, p: Partition) -> Observable:
    if len(f) != len(p.cell_of):
        raise MismatchedSpace("observable and partition differ in size")
    w = p.space.weights
    cell_mean = [
        sum((w[x] * f.values[x] for x in cell), Fraction(0)) / p.cell_weight[c]
        for c, cell in enumerate(p.cells)
    ]
    return Observable(tuple(cell_mean[c] for c in p.cell_of), f.space)


def integrate(f: Observable) -> Fraction:
    return sum((w * v for w, v in zip(f.space.weights, f.values)), Fraction(0))


def l2_norm_squared(f: Observable) -> Fraction:
    return integrate(f * f)
