"""Commutative semirings with natural order and lattice operations.

Elements are plain immutable Python values: ``bool`` for the boolean
semiring, ``int`` for the naturals, :class:`Access` members for the access
control chain, tuples for world vectors and :class:`UAPair` for pairs.
"""

from __future__ import annotations

from enum import IntEnum
from functools import reduce
from typing import Any, Iterable, NamedTuple, Sequence


class SemiringError(ValueError):
    pass


class Semiring:
    """Base class. Subclasses supply the operations; ``leq`` is never searched."""

    name = "K"
    has_lattice = True

    @property
    def zero(self) -> Any:
        raise NotImplementedError

    @property
    def one(self) -> Any:
        raise NotImplementedError

    def add(self, a: Any, b: Any) -> Any:
        raise NotImplementedError

    def mul(self, a: Any, b: Any) -> Any:
        raise NotImplementedError

    def leq(self, a: Any, b: Any) -> bool:
        raise NotImplementedError

    def glb(self, a: Any, b: Any) -> Any:
        raise SemiringError(f"{self.name} has no greatest lower bound")

    def lub(self, a: Any, b: Any) -> Any:
        raise SemiringError(f"{self.name} has no least upper bound")

    def contains(self, x: Any) -> bool:
        raise NotImplementedError

    def is_zero(self, x: Any) -> bool:
        return x == self.zero

    def elements(self) -> Sequence[Any] | None:
        """The whole carrier when it is finite, else ``None``."""
        return None

    def render(self, x: Any) -> str:
        return str(x)

    def to_json(self, x: Any) -> Any:
        return x

    def from_json(self, x: Any) -> Any:
        if not self.contains(x):
            raise SemiringError(f"{x!r} is not an element of {self.name}")
        return x

    def sum(self, xs: Iterable[Any]) -> Any:
        return reduce(self.add, xs, self.zero)

    def product(self, xs: Iterable[Any]) -> Any:
        return reduce(self.mul, xs, self.one)

    def __repr__(self) -> str:
        return self.name


# Spelled as in the module docs; the class is the spec of a semiring.
SemiringSpec = Semiring


class BooleanSemiring(Semiring):
    name = "B"

    zero = False  # type: ignore[assignment]
    one = True  # type: ignore[assignment]

    def add(self, a: bool, b: bool) -> bool:
        return a or b

    def mul(self, a: bool, b: bool) -> bool:
        return a and b

    def leq(self, a: bool, b: bool) -> bool:
        return (not a) or b

    def glb(self, a: bool, b: bool) -> bool:
        return a and b

    def lub(self, a: bool, b: bool) -> bool:
        return a or b

    def contains(self, x: Any) -> bool:
        return isinstance(x, bool)

    def elements(self) -> Sequence[bool]:
        return (False, True)

    def render(self, x: bool) -> str:
        return "T" if x else "F"

    def from_json(self, x: Any) -> bool:
        if x in ("T", "t", "true", "True"):
            return True
        if x in ("F", "f", "false", "False"):
            return False
        return super().from_json(x)


class NaturalSemiring(Semiring):
    """Bag multiplicities. Python ints are unbounded so nothing can wrap."""

    name = "N"

    zero = 0  # type: ignore[assignment]
    one = 1  # type: ignore[assignment]

    def add(self, a: int, b: int) -> int:
        return a + b

    def mul(self, a: int, b: int) -> int:
        return a * b

    def leq(self, a: int, b: int) -> bool:
        return a <= b

    def glb(self, a: int, b: int) -> int:
        return min(a, b)

    def lub(self, a: int, b: int) -> int:
        return max(a, b)

    def contains(self, x: Any) -> bool:
        return isinstance(x, int) and not isinstance(x, bool) and x >= 0


class Access(IntEnum):
    """Access levels, ordered from no access up to public."""

    ZERO = 0
    T = 1  # top secret
    S = 2  # secret
    C = 3  # confidential
    P = 4  # public

    def __str__(self) -> str:
        return "0" if self is Access.ZERO else self.name


class AccessSemiring(Semiring):
    name = "A"

    zero = Access.ZERO  # type: ignore[assignment]
    one = Access.P  # type: ignore[assignment]

    def add(self, a: Access, b: Access) -> Access:
        return max(a, b)

    def mul(self, a: Access, b: Access) -> Access:
        return min(a, b)

    def leq(self, a: Access, b: Access) -> bool:
        return a <= b

    def glb(self, a: Access, b: Access) -> Access:
        return min(a, b)

    def lub(self, a: Access, b: Access) -> Access:
        return max(a, b)

    def contains(self, x: Any) -> bool:
        return isinstance(x, Access)

    def elements(self) -> Sequence[Access]:
        return tuple(Access)

    def render(self, x: Access) -> str:
        return str(x)

    def to_json(self, x: Access) -> str:
        return str(x)

    def from_json(self, x: Any) -> Access:
        lookup = {str(a): a for a in Access}
        if isinstance(x, str) and x in lookup:
            return lookup[x]
        raise SemiringError(f"{x!r} is not an access level")


class VectorSemiring(Semiring):
    """K^W: one annotation per possible world, all operations pointwise."""

    def __init__(self, base: Semiring, width: int):
        if width < 1:
            raise SemiringError("vector width must be at least 1")
        self.base = base
        self.width = width
        self.name = f"{base.name}^{width}"
        self.has_lattice = base.has_lattice
        self._zero = (base.zero,) * width
        self._one = (base.one,) * width

    @property
    def zero(self) -> tuple:
        return self._zero

    @property
    def one(self) -> tuple:
        return self._one

    def add(self, a: tuple, b: tuple) -> tuple:
        f = self.base.add
        return tuple(f(x, y) for x, y in zip(a, b))

    def mul(self, a: tuple, b: tuple) -> tuple:
        f = self.base.mul
        return tuple(f(x, y) for x, y in zip(a, b))

    def leq(self, a: tuple, b: tuple) -> bool:
        return all(self.base.leq(x, y) for x, y in zip(a, b))

    def glb(self, a: tuple, b: tuple) -> tuple:
        return tuple(self.base.glb(x, y) for x, y in zip(a, b))

    def lub(self, a: tuple, b: tuple) -> tuple:
        return tuple(self.base.lub(x, y) for x, y in zip(a, b))

    def contains(self, x: Any) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == self.width
            and all(self.base.contains(v) for v in x)
        )

    def render(self, x: tuple) -> str:
        return "[" + ",".join(self.base.render(v) for v in x) + "]"

    def to_json(self, x: tuple) -> list:
        return [self.base.to_json(v) for v in x]

    def from_json(self, x: Any) -> tuple:
        if not isinstance(x, (list, tuple)) or len(x) != self.width:
            raise SemiringError(f"expected a vector of width {self.width}, got {x!r}")
        return tuple(self.base.from_json(v) for v in x)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, VectorSemiring)
            and other.base == self.base
            and other.width == self.width
        )

    def __hash__(self) -> int:
        return hash(("vector", self.base, self.width))


class UAPair(NamedTuple):
    """A best-guess annotation ``d`` and a certain under-approximation ``c``."""

    d: Any
    c: Any


class PairSemiring(Semiring):
    """K²: pairs ``[d, c]`` with pointwise operations."""

    def __init__(self, base: Semiring):
        self.base = base
        self.name = f"{base.name}^2"
        self.has_lattice = base.has_lattice

    @property
    def zero(self) -> UAPair:
        return UAPair(self.base.zero, self.base.zero)

    @property
    def one(self) -> UAPair:
        return UAPair(self.base.one, self.base.one)

    def add(self, a: UAPair, b: UAPair) -> UAPair:
        return UAPair(self.base.add(a[0], b[0]), self.base.add(a[1], b[1]))

    def mul(self, a: UAPair, b: UAPair) -> UAPair:
        return UAPair(self.base.mul(a[0], b[0]), self.base.mul(a[1], b[1]))

    def leq(self, a: UAPair, b: UAPair) -> bool:
        return self.base.leq(a[0], b[0]) and self.base.leq(a[1], b[1])

    def glb(self, a: UAPair, b: UAPair) -> UAPair:
        return UAPair(self.base.glb(a[0], b[0]), self.base.glb(a[1], b[1]))

    def lub(self, a: UAPair, b: UAPair) -> UAPair:
        return UAPair(self.base.lub(a[0], b[0]), self.base.lub(a[1], b[1]))

    def contains(self, x: Any) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == 2
            and self.base.contains(x[0])
            and self.base.contains(x[1])
        )

    def elements(self) -> Sequence[UAPair] | None:
        base = self.base.elements()
        if base is None:
            return None
        return tuple(UAPair(d, c) for d in base for c in base)

    def render(self, x: UAPair) -> str:
        return f"[{self.base.render(x[0])},{self.base.render(x[1])}]"

    def to_json(self, x: UAPair) -> dict:
        return {"d": self.base.to_json(x[0]), "c": self.base.to_json(x[1])}

    def from_json(self, x: Any) -> UAPair:
        if isinstance(x, dict):
            return UAPair(self.base.from_json(x["d"]), self.base.from_json(x["c"]))
        d, c = x
        return UAPair(self.base.from_json(d), self.base.from_json(c))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PairSemiring) and other.base == self.base

    def __hash__(self) -> int:
        return hash(("pair", self.base))


B = BooleanSemiring()
N = NaturalSemiring()
A = AccessSemiring()

BY_NAME: dict[str, Semiring] = {"B": B, "N": N, "A": A}


def natural_leq(s: Semiring, a: Any, b: Any) -> bool:
    return s.leq(a, b)


def glb_fold(s: Semiring, ks: Iterable[Any]) -> Any:
    ks = list(ks)
    if not ks:
        raise SemiringError("glb of an empty set is undefined")
    return reduce(s.glb, ks)


def lub_fold(s: Semiring, ks: Iterable[Any]) -> Any:
    ks = list(ks)
    if not ks:
        raise SemiringError("lub of an empty set is undefined")
    return reduce(s.lub, ks)


def as_count(s: Semiring, x: Any) -> int:
    """Booleans count as 0/1 so pairs over B can share the (u,c) rendering."""
    if s is B:
        return int(bool(x))
    if s is N:
        return x
    raise SemiringError(f"no counting interpretation for {s.name}")


def render_uc(s: Semiring, p: UAPair) -> str:
    """Display form ``(u,c)`` with ``u = d - c``."""
    d, c = as_count(s, p[0]), as_count(s, p[1])
    return f"({d - c},{c})"
