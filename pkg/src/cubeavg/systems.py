"""Finite measure-preserving systems.

A system is a finite probability space with strictly positive rational weights
and ``d`` weight-preserving permutations ``T_1, ..., T_d``.  Points are dense
indices ``0..n-1``.

Cube vertices ``eps`` in ``{0,1}^d`` are identified with subsets of
``{1, ..., d}`` and stored as bitmasks: transformation ``T_i`` corresponds to
bit ``i - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Sequence

import numpy as np

from .errors import BadWeights, NonBijective, NotCommuting, NotMeasurePreserving


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"``, an integer string, an int or a Fraction.  No decimals."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if any(c in text for c in ".eE"):
            raise ValueError(f"decimal notation is not accepted: {value!r}")
        return Fraction(text)
    raise ValueError(f"not a rational: {value!r}")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# --- cube vertex helpers -------------------------------------------------------

def eps_members(mask: int) -> list[int]:
    """1-based members of the subset encoded by ``mask``."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def eps_mask(members: Iterable[int]) -> int:
    mask = 0
    for i in members:
        if i < 1:
            raise ValueError(f"transformation indices are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def eps_from_digits(digits: str) -> int:
    """``"101"`` -> bitmask with T_1 and T_3 selected."""
    if not digits or any(c not in "01" for c in digits):
        raise ValueError(f"bad cube vertex {digits!r}")
    return sum(1 << k for k, c in enumerate(digits) if c == "1")


def eps_digits(mask: int, d: int) -> str:
    return "".join("1" if mask >> k & 1 else "0" for k in range(d))


def popcount(mask: int) -> int:
    return bin(mask).count("1")


# --- types ---------------------------------------------------------------------

@dataclass(frozen=True)
class ProbabilitySpace:
    weights: tuple[Fraction, ...]
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        weights = tuple(Fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if not weights:
            raise BadWeights("a probability space needs at least one point")
        for x, w in enumerate(weights):
            if w <= 0:
                raise BadWeights(f"weight of point {x} is {w}, must be > 0")
        total = sum(weights, Fraction(0))
        if total != 1:
            raise BadWeights(f"weights sum to {total}, not 1")
        if self.labels is not None and len(self.labels) != len(weights):
            raise BadWeights("labels and weights differ in length")

    @classmethod
    def uniform(cls, n: int) -> "ProbabilitySpace":
        return cls(tuple(Fraction(1, n) for _ in range(n)))

    @property
    def size(self) -> int:
        return len(self.weights)

    def __len__(self):
        return len(self.weights)

    @cached_property
    def integer_weights(self) -> tuple[list[int], int]:
        """Weights as integer numerators over their least common denominator."""
        den = lcm(*(w.denominator for w in self.weights))
        return [int(w * den) for w in self.weights], den


@dataclass(frozen=True)
class Transformation:
    """A permutation of ``0..n-1``; ``image[x]`` is ``T(x)``."""

    image: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "image", tuple(int(y) for y in self.image))

    @classmethod
    def identity(cls, n: int) -> "Transformation":
        return cls(tuple(range(n)))

    @classmethod
    def cycle(cls, n: int, shift: int = 1) -> "Transformation":
        """Rotation ``x -> x + shift mod n``."""
        return cls(tuple((x + shift) % n for x in range(n)))

    def __len__(self):
        return len(self.image)

    def __call__(self, x: int) -> int:
        return self.image[x]

    def is_bijection(self) -> bool:
        n = len(self.image)
        return sorted(self.image) == list(range(n))

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.image, dtype=np.int64)

    def compose(self, other: "Transformation") -> "Transformation":
        """``self o other``: first ``other``, then ``self``."""
        return Transformation(tuple(self.image[y] for y in other.image))

    def inverse(self) -> "Transformation":
        inv = [0] * len(self.image)
        for x, y in enumerate(self.image):
            inv[y] = x
        return Transformation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * len(self.image)
        out = []
        for start in range(len(self.image)):
            if seen[start]:
                continue
            cyc = []
            x = start
            while not seen[x]:
                seen[x] = True
                cyc.append(x)
                x = self.image[x]
            out.append(tuple(cyc))
        return out

    def power(self, n: int) -> "Transformation":
        out = [0] * len(self.image)
        for cyc in self.cycles():
            L = len(cyc)
            for k, x in enumerate(cyc):
                out[x] = cyc[(k + n) % L]
        return Transformation(tuple(out))

    def order(self) -> int:
        return lcm(*(len(c) for c in self.cycles()))

    def is_identity(self) -> bool:
        return all(x == y for x, y in enumerate(self.image))


@dataclass(frozen=True)
class System:
    space: ProbabilitySpace
    transformations: tuple[Transformation, ...]
    commuting: bool = True

    def __post_init__(self):
        object.__setattr__(self, "transformations", tuple(self.transformations))
        if not self.transformations:
            raise ValueError("a system needs at least one transformation")

    @property
    def d(self) -> int:
        return len(self.transformations)

    @property
    def size(self) -> int:
        return self.space.size

    def T(self, i: int) -> Transformation:
        """1-based access to the transformations."""
        return self.transformations[i - 1]

    @cached_property
    def orders(self) -> tuple[int, ...]:
        return tuple(t.order() for t in self.transformations)

    def commutation_witness(self):
        """First ``(i, j, x, Ti Tj x, Tj Ti x, all_points)`` that fails, or None."""
        ts = self.transformations
        for a in range(len(ts)):
            for b in range(a + 1, len(ts)):
                ta, tb = ts[a].image, ts[b].image
                bad = [x for x in range(len(ta)) if ta[tb[x]] != tb[ta[x]]]
                if bad:
                    x = bad[0]
                    return a + 1, b + 1, x, ta[tb[x]], tb[ta[x]], bad
        return None

    def require_commuting(self):
        w = self.commutation_witness()
        if w is not None:
            raise NotCommuting(*w)


@dataclass(frozen=True)
class Observable:
    """A rational-valued function on the points of ``space``."""

    values: tuple[Fraction, ...]
    space: ProbabilitySpace = field(compare=False, repr=False)

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != self.space.size:
            raise ValueError(f"observable has {len(vals)} values for {self.space.size} points")

    @classmethod
    def constant(cls, space: ProbabilitySpace, c=1) -> "Observable":
        return cls(tuple(Fraction(c) for _ in range(space.size)), space)

    @classmethod
    def indicator(cls, space: ProbabilitySpace, members: Iterable[int]) -> "Observable":
        members = set(members)
        return cls(tuple(Fraction(int(x in members)) for x in range(space.size)), space)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, x):
        return self.values[x]

    def __iter__(self):
        return iter(self.values)

    def _other(self, other):
        if isinstance(other, Observable):
            if len(other) != len(self):
                raise ValueError("observables live on different spaces")
            return other.values
        c = Fraction(other)
        return [c] * len(self)

    def __add__(self, other):
        return Observable(tuple(a + b for a, b in zip(self.values, self._other(other))), self.space)

    __radd__ = __add__

    def __sub__(self, other):
        return Observable(tuple(a - b for a, b in zip(self.values, self._other(other))), self.space)

    def __rsub__(self, other):
        return Observable(tuple(b - a for a, b in zip(self.values, self._other(other))), self.space)

    def __mul__(self, other):
        return Observable(tuple(a * b for a, b in zip(self.values, self._other(other))), self.space)

    __rmul__ = __mul__

    def __neg__(self):
        return Observable(tuple(-a for a in self.values), self.space)

    def compose(self, t: Transformation) -> "Observable":
        """``f o T``, i.e. the Koopman image ``T f``."""
        return Observable(tuple(self.values[y] for y in t.image), self.space)

    def sup_norm(self) -> Fraction:
        return max(abs(v) for v in self.values)

    def is_indicator(self) -> bool:
        return all(v in (0, 1) for v in self.values)

    def integer_values(self) -> tuple[list[int], int]:
        """Integer numerators over the least common denominator."""
        den = lcm(*(v.denominator for v in self.values))
        return [int(v * den) for v in self.values], den


# --- operations ----------------------------------------------------------------

def validate_system(raw_space, raw_transformations, require_commuting: bool = True) -> System:
    """Build a :class:`System` from raw weights and images, checking every axiom.

    ``raw_space`` is either a :class:`ProbabilitySpace` or a sequence of weights
    (anything :func:`parse_rational` accepts).  ``raw_transformations`` holds
    image lists over dense indices.
    """
    if isinstance(raw_space, ProbabilitySpace):
        space = raw_space
    else:
        try:
            weights = tuple(parse_rational(w) for w in raw_space)
        except (ValueError, ZeroDivisionError) as exc:
            raise BadWeights(str(exc)) from exc
        space = ProbabilitySpace(weights)
    n = space.size
    ts = []
    for idx, raw in enumerate(raw_transformations, start=1):
        image = [int(y) for y in raw.image] if isinstance(raw, Transformation) else [int(y) for y in raw]
        if len(image) != n or sorted(image) != list(range(n)):
            raise NonBijective(idx, image)
        for x, y in enumerate(image):
            if space.weights[x] != space.weights[y]:
                raise NotMeasurePreserving(idx, x, y)
        ts.append(Transformation(tuple(image)))
    if not ts:
        raise ValueError("at least one transformation is required")
    system = System(space, tuple(ts), commuting=False)
    if require_commuting:
        system.require_commuting()
        system = System(space, tuple(ts), commuting=True)
    elif system.commutation_witness() is None:
        system = System(space, tuple(ts), commuting=True)
    return system


def _as_mask(eps, d: int) -> int:
    if eps is None:
        return (1 << d) - 1
    if isinstance(eps, (int, np.integer)):
        return int(eps)
    return eps_mask(eps)


def transformation_power_action(system: System, n: Sequence[int], eps=None) -> Transformation:
    """``T_eps^n = T_{i1}^{n_{i1}} ... T_{ik}^{n_{ik}}`` as one permutation.

    ``eps`` is a bitmask or an iterable of 1-based indices (``None`` = all).
    The product is read as a composition of maps, rightmost factor first, so
    for non-commuting inputs ``T_1^{a} T_2^{b} x = T_1^a(T_2^b(x))``.
    """
    if len(n) != system.d:
        raise ValueError(f"need {system.d} exponents, got {len(n)}")
    mask = _as_mask(eps, system.d)
    result = Transformation.identity(system.size)
    for i in eps_members(mask):
        result = result.compose(system.T(i).power(n[i - 1]))
    return result


def orbit_order(t: Transformation) -> int:
    """Least ``L >= 1`` with ``T^L = id``."""
    return t.order()
