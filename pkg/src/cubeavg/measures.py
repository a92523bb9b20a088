"""Iterated relative-product measures and box seminorms.

``mu_0`` is the base measure.  ``mu_k`` lives on ``X^(2^k)`` and is the
relative product of two copies of ``mu_{k-1}`` over the sigma-algebra of sets
invariant under the diagonal action of the k-th listed transformation.  Tuple
coordinate ``c`` of ``mu_k`` is the cube vertex whose bitmask is ``c``: the
first half of a tuple is the ``eps_k = 0`` face, the second half ``eps_k = 1``.

Measures are stored sparsely as a coordinate matrix plus integer numerators
over a single common denominator, so every integral is an exact rational.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from math import gcd, lcm
from typing import Sequence

import numpy as np

from . import kernels
from .errors import EmptyCellMass, NotCommuting, NotInvariant, SupportOverflow
from .systems import Observable, ProbabilitySpace, System, Transformation, eps_members

DEFAULT_MAX_ENTRIES = 10**7
_I64_SAFE = 2**62


def default_max_entries() -> int:
    raw = os.environ.get("CUBEAVG_MAX_ENTRIES")
    return int(raw) if raw else DEFAULT_MAX_ENTRIES


@dataclass(frozen=True, eq=False)
class SparseMeasure:
    """Probability measure on ``2**arity``-tuples of base points.

    ``coords[e]`` is the tuple of entry ``e`` and its weight is
    ``numerators[e] / denominator``.  Entries are distinct and have positive
    weight.
    """

    coords: np.ndarray
    numerators: np.ndarray
    denominator: int
    arity: int
    space: ProbabilitySpace

    @classmethod
    def from_space(cls, space: ProbabilitySpace) -> "SparseMeasure":
        nums, den = space.integer_weights
        coords = np.arange(space.size, dtype=np.int64).reshape(-1, 1)
        return cls(coords, kernels.int_array(nums), den, 0, space)

    def __len__(self):
        return self.coords.shape[0]

    @property
    def width(self) -> int:
        return 1 << self.arity

    def weight(self, e: int) -> Fraction:
        return Fraction(int(self.numerators[e]), self.denominator)

    def items(self):
        for e in range(len(self)):
            yield tuple(int(v) for v in self.coords[e]), self.weight(e)

    def as_dict(self) -> dict[tuple[int, ...], Fraction]:
        return dict(sorted(self.items()))

    def total(self) -> Fraction:
        return Fraction(int(sum(int(v) for v in self.numerators.tolist())), self.denominator)

    def marginal(self, coordinate: int) -> list[Fraction]:
        """Pushforward of the measure under the projection onto one coordinate."""
        acc = [0] * self.space.size
        for x, w in zip(self.coords[:, coordinate].tolist(), self.numerators.tolist()):
            acc[x] += int(w)
        return [Fraction(a, self.denominator) for a in acc]

    def codes(self) -> list[int]:
        """Mixed-radix (base ``|X|``) encoding of each tuple, first coordinate most significant."""
        n = self.space.size
        out = []
        for row in self.coords.tolist():
            code = 0
            for v in row:
                code = code * n + v
            out.append(code)
        return out

    def integral(self, f: Observable) -> Fraction:
        """``int prod_c f(x_c) dm(x)``."""
        p, q = f.integer_values()
        zeros = np.zeros(len(self), dtype=np.int64)
        (s,) = kernels.tensor_cell_sums(self.coords, self.numerators, zeros, 1, kernels.int_array(p))
        return Fraction(s, self.denominator * q**self.width)


def _row_keys(coords: np.ndarray, targets: np.ndarray, base: int):
    width = coords.shape[1]
    if base**width < _I64_SAFE:
        powers = np.asarray([base ** (width - 1 - j) for j in range(width)], dtype=np.int64)
        return coords @ powers, targets @ powers
    stacked = np.vstack([coords, targets])
    _, inv = np.unique(stacked, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    return inv[: len(coords)], inv[len(coords):]


def match_rows(coords: np.ndarray, targets: np.ndarray, base: int) -> np.ndarray:
    """For each row of ``targets`` the index of the equal row of ``coords``.

    Raises KeyError if some target row is absent.
    """
    keys, tkeys = _row_keys(coords, targets, base)
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    pos = np.searchsorted(sk, tkeys)
    pos = np.minimum(pos, len(sk) - 1)
    if not np.array_equal(sk[pos], tkeys):
        raise KeyError("target tuple outside the support")
    return order[pos]


@dataclass(frozen=True)
class DiagonalTransformation:
    """``T x T x ... x T`` acting coordinatewise on tuples of length ``copies``."""

    t: Transformation
    copies: int

    def __call__(self, tup: Sequence[int]) -> tuple[int, ...]:
        if len(tup) != self.copies:
            raise ValueError(f"expected a {self.copies}-tuple")
        return tuple(self.t.image[x] for x in tup)

    def apply(self, coords: np.ndarray) -> np.ndarray:
        return self.t.array[coords]

    def power(self, n: int) -> "DiagonalTransformation":
        return DiagonalTransformation(self.t.power(n), self.copies)


def diagonal_transformation(t: Transformation, copies: int) -> DiagonalTransformation:
    return DiagonalTransformation(t, copies)


def support_permutation(m: SparseMeasure, t: Transformation) -> np.ndarray:
    """Diagonal action of ``t`` on the support of ``m`` as an index permutation."""
    diag = DiagonalTransformation(t, m.width)
    try:
        return match_rows(m.coords, diag.apply(m.coords), m.space.size)
    except KeyError:
        raise NotInvariant("measure support is not invariant under the diagonal action") from None


def invariant_cells(m: SparseMeasure, t: Transformation) -> np.ndarray:
    """Cell label (smallest entry index of its orbit) for every support entry."""
    return kernels.orbit_labels(support_permutation(m, t))


def _cell_ids(labels) -> tuple[np.ndarray, int]:
    labels = np.asarray(labels, dtype=np.int64)
    uniq, inv = np.unique(labels, return_inverse=True)
    return inv.reshape(-1).astype(np.int64), len(uniq)


def _cell_mass(numerators: np.ndarray, cell: np.ndarray, ncells: int) -> list[int]:
    order = np.argsort(cell, kind="stable")
    counts = np.bincount(cell, minlength=ncells)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    sums = np.add.reduceat(numerators[order], starts) if len(order) else []
    return [int(s) for s in sums]


def relative_product(m: SparseMeasure, cells, max_entries: int | None = None) -> SparseMeasure:
    """``m x_P m``: weight ``m(a) m(b) / m(cell)`` for ``a, b`` in a common cell.

    ``cells`` labels every support entry of ``m`` with its cell; a
    :class:`~cubeavg.conditional.Partition` over the entries also works.
    """
    cap = default_max_entries() if max_entries is None else max_entries
    labels = getattr(cells, "cell_of", cells)
    if len(labels) != len(m):
        raise ValueError("one cell label per support entry is required")
    cell, ncells = _cell_ids(labels)
    counts = np.bincount(cell, minlength=ncells)
    total = sum(int(c) * int(c) for c in counts.tolist())
    if total > cap:
        raise SupportOverflow(total, cap)

    mass = _cell_mass(m.numerators, cell, ncells)
    if any(u <= 0 for u in mass):
        raise EmptyCellMass("a cell of the conditioning partition has no mass")

    order = np.argsort(cell, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
    cell_sorted = cell[order]
    rep = counts[cell_sorted]
    a_pos = np.repeat(np.arange(len(m), dtype=np.int64), rep)
    block_start = np.repeat(np.cumsum(rep) - rep, rep)
    b_pos = starts[cell_sorted][a_pos] + (np.arange(total, dtype=np.int64) - block_start)
    a = order[a_pos]
    b = order[b_pos]
    coords = np.hstack([m.coords[a], m.coords[b]])

    common = lcm(*mass)
    factor = [common // u for u in mass]
    max_num = max(int(v) for v in m.numerators.tolist())
    den = m.denominator * common
    if max_num * max_num * max(factor) < _I64_SAFE and den < _I64_SAFE:
        fac = np.asarray(factor, dtype=np.int64)
        nums = m.numerators.astype(np.int64)
        new = nums[a] * nums[b] * fac[cell[a]]
        g = int(np.gcd.reduce(np.append(new, den)))
    else:
        fac = np.empty(ncells, dtype=object)
        fac[:] = factor
        nums = m.numerators.astype(object)
        new = nums[a] * nums[b] * fac[cell[a]]
        g = reduce(gcd, new.tolist(), den)
    if g > 1:
        new = new // g
        den //= g
    if new.dtype == object:
        new = kernels.int_array(new.tolist())
    return SparseMeasure(coords, new, den, m.arity + 1, m.space)


def _normalize_eps(system: System, eps) -> tuple[int, ...]:
    if eps is None:
        return tuple(range(1, system.d + 1))
    if isinstance(eps, int):
        eps = eps_members(eps)
    eps = tuple(int(i) for i in eps)
    if not eps:
        raise ValueError("eps must be non-empty")
    if len(set(eps)) != len(eps) or not all(1 <= i <= system.d for i in eps):
        raise ValueError(f"bad transformation indices {eps} for d={system.d}")
    return eps


def require_commuting(system: System, eps: Sequence[int]) -> None:
    if system.commuting:
        return
    for a_pos, a in enumerate(eps):
        for b in eps[a_pos + 1:]:
            ta, tb = system.T(a).image, system.T(b).image
            for x in range(system.size):
                if ta[tb[x]] != tb[ta[x]]:
                    i, j = min(a, b), max(a, b)
                    ti, tj = system.T(i).image, system.T(j).image
                    raise NotCommuting(i, j, x, ti[tj[x]], tj[ti[x]])


@lru_cache(maxsize=16)
def _levels(system: System, eps: tuple[int, ...], cap: int) -> tuple[SparseMeasure, ...]:
    if not eps:
        return (SparseMeasure.from_space(system.space),)
    prev = _levels(system, eps[:-1], cap)
    m = prev[-1]
    labels = invariant_cells(m, system.T(eps[-1]))
    return prev + (relative_product(m, labels, cap),)


@lru_cache(maxsize=16)
def _top_cells(system: System, eps: tuple[int, ...], cap: int):
    m = _levels(system, eps[:-1], cap)[-1]
    cell, ncells = _cell_ids(invariant_cells(m, system.T(eps[-1])))
    return m, cell, ncells, _cell_mass(m.numerators, cell, ncells)


def mu_levels(system: System, eps=None, max_entries: int | None = None) -> tuple[SparseMeasure, ...]:
    """``(mu_0, mu_1, ..., mu_k)`` for the transformations listed in ``eps``."""
    eps = _normalize_eps(system, eps)
    require_commuting(system, eps)
    cap = default_max_entries() if max_entries is None else max_entries
    return _levels(system, eps, cap)


def build_mu_star(system: System, eps=None, max_entries: int | None = None) -> SparseMeasure:
    """The cube measure for the transformations in ``eps`` (default: all, in order)."""
    return mu_levels(system, eps, max_entries)[-1]


@dataclass(frozen=True)
class SeminormValue:
    power_value: Fraction
    degree: int

    def __post_init__(self):
        if self.power_value < 0:
            raise ValueError(f"negative seminorm power {self.power_value}")

    @property
    def float_value(self) -> float:
        if self.power_value == 0:
            return 0.0
        return float(self.power_value) ** (1.0 / self.degree)


def box_seminorm(
    system: System,
    f: Observable,
    eps=None,
    method: str = "recursive",
    max_entries: int | None = None,
    backend: str | None = None,
) -> SeminormValue:
    """Box seminorm of ``f`` for the transformations in ``eps``, kept as its exact power.

    ``method="direct"`` integrates ``prod_c f(x_c)`` against the full cube
    measure.  ``method="recursive"`` stops one level short: the top level
    equals ``sum over cells C of (int_C prod f dmu_{k-1})^2 / mu_{k-1}(C)``,
    which never materialises the top measure.
    """
    eps = _normalize_eps(system, eps)
    require_commuting(system, eps)
    cap = default_max_entries() if max_entries is None else max_entries
    degree = 1 << len(eps)
    p, q = f.integer_values()
    vals = kernels.int_array(p)

    if method == "direct":
        m = _levels(system, eps, cap)[-1]
        zeros = np.zeros(len(m), dtype=np.int64)
        (s,) = kernels.tensor_cell_sums(m.coords, m.numerators, zeros, 1, vals, backend=backend)
        return SeminormValue(Fraction(s, m.denominator * q**degree), degree)
    if method != "recursive":
        raise ValueError(f"unknown method {method!r}")

    m, cell, ncells, mass = _top_cells(system, eps, cap)
    sums = kernels.tensor_cell_sums(m.coords, m.numerators, cell, ncells, vals, backend=backend)
    # group cells by mass so the rational sum has few terms
    grouped: dict[int, int] = {}
    for s, u in zip(sums, mass):
        if s:
            grouped[u] = grouped.get(u, 0) + s * s
    acc = sum((Fraction(v, u) for u, v in grouped.items()), Fraction(0))
    return SeminormValue(acc / (m.denominator * q**degree), degree)


def seminorm_digit_permutation_check(system: System, f: Observable, eps, sigma, method="recursive") -> bool:
    """Compare the seminorm built in the order ``eps`` with the order ``sigma``.

    ``sigma`` is either a rearrangement of the members of ``eps`` or a
    permutation of positions ``0..k-1``.
    """
    eps = _normalize_eps(system, eps)
    sigma = tuple(sigma)
    if sorted(sigma) == sorted(eps):
        permuted = sigma
    elif sorted(sigma) == list(range(len(eps))):
        permuted = tuple(eps[k] for k in sigma)
    else:
        raise ValueError(f"{sigma} does not permute {eps}")
    a = box_seminorm(system, f, eps, method=method).power_value
    b = box_seminorm(system, f, permuted, method=method).power_value
    return a == b


def clear_caches() -> None:
    _levels.cache_clear()
    _top_cells.cache_clear()
