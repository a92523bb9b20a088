"""Exception hierarchy.

Everything raised on purpose by the library derives from :class:`CubeAvgError`.
:class:`PropertyViolation` is special: it means a computed quantity broke one
of the ergodic-theoretic statements the library checks, and the CLI maps it to
exit code 2.
"""


class CubeAvgError(Exception):
    """Base class for library errors."""

    def details(self):
        return {}


class BadWeights(CubeAvgError):
    pass


class NonBijective(CubeAvgError):
    def __init__(self, index, image):
        self.index = index
        self.image = list(image)
        super().__init__(f"transformation {index} is not a bijection: {self.image}")

    def details(self):
        return {"transformation": self.index}


class NotMeasurePreserving(CubeAvgError):
    def __init__(self, index, point, image_point):
        self.index = index
        self.point = point
        self.image_point = image_point
        super().__init__(
            f"transformation {index} moves point {point} to {image_point} "
            "which carries a different weight"
        )

    def details(self):
        return {"transformation": self.index, "point": self.point, "image": self.image_point}


class NotCommuting(CubeAvgError):
    """Two transformations disagree when composed in both orders.

    ``i`` and ``j`` are 1-based transformation indices, ``x`` the first point
    where ``T_i(T_j(x)) != T_j(T_i(x))``; ``points`` lists every such point
    for that pair.
    """

    def __init__(self, i, j, x, left, right, points=()):
        self.i, self.j, self.x = i, j, x
        self.left, self.right = left, right
        self.points = list(points) or [x]
        super().__init__(
            f"T{i} and T{j} do not commute at x={x}: "
            f"T{i}T{j}(x)={left} != T{j}T{i}(x)={right}"
        )

    def details(self):
        return {
            "i": self.i,
            "j": self.j,
            "x": self.x,
            "left": self.left,
            "right": self.right,
            "points": self.points,
        }


class MismatchedSpace(CubeAvgError):
    pass


class SupportOverflow(CubeAvgError):
    def __init__(self, needed, cap):
        self.needed = needed
        self.cap = cap
        super().__init__(f"sparse measure would need {needed} entries (cap {cap})")

    def details(self):
        return {"needed": self.needed, "cap": self.cap}


class NotInvariant(CubeAvgError):
    pass


class EmptyCellMass(CubeAvgError):
    pass


class EmptyBox(CubeAvgError):
    pass


class NotIndicator(CubeAvgError):
    pass


class HypothesisViolated(CubeAvgError):
    pass


class PropertyViolation(CubeAvgError):
    """A checked inequality or identity failed on a concrete instance."""

    def __init__(self, statement, report=None):
        self.statement = statement
        self.report = report
        super().__init__(f"{statement} violated")

    def details(self):
        return {"statement": self.statement}
