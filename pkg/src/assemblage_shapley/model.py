"""Owner identities, owner sets, exact utilities, and allocations.

Owners are dense non-negative integers within one scenario. Sets of owners are
fixed-width bit vectors so that union/intersection/subset tests are exact
integer operations. All revenue arithmetic uses ``fractions.Fraction``; floats
only appear at the reporting boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .errors import UniverseMismatchError

#: Owner universes are capped per scenario so bit vectors stay fixed-width.
DEFAULT_MAX_OWNERS = 4096

#: Exact non-negative rational utility. Floats only at the reporting boundary.
Utility = Fraction


def as_utility(value: int | str | Fraction | float) -> Fraction:
    """Coerce ``value`` to an exact non-negative ``Fraction``.

    Floats are converted through their decimal string form so that e.g. ``0.1``
    becomes ``1/10`` rather than the binary approximation.
    """
    if isinstance(value, float):
        value = str(value)
    out = Fraction(value)
    if out < 0:
        raise ValueError(f"utility must be non-negative, got {out}")
    return out


class OwnerSet:
    """An immutable set of owner indices over a fixed-width universe.

    Supports ``|`` (union), ``&`` (intersection), ``<=`` (subset), ``len``
    (cardinality), ``in``, and iteration over member indices. Mixing sets from
    universes of different widths raises :class:`UniverseMismatchError`.
    """

    __slots__ = ("width", "bits")

    def __init__(self, width: int, bits: int = 0):
        if width < 0:
            raise ValueError(f"universe width must be >= 0, got {width}")
        if bits < 0 or bits >> width:
            raise ValueError(f"bit pattern {bits:#x} does not fit a {width}-owner universe")
        self.width = width
        self.bits = bits

    @classmethod
    def empty(cls, width: int) -> "OwnerSet":
        return cls(width, 0)

    @classmethod
    def full(cls, width: int) -> "OwnerSet":
        return cls(width, (1 << width) - 1)

    @classmethod
    def singleton(cls, width: int, owner: int) -> "OwnerSet":
        if not 0 <= owner < width:
            raise ValueError(f"owner {owner} outside universe of width {width}")
        return cls(width, 1 << owner)

    @classmethod
    def from_indices(cls, width: int, owners: Iterable[int]) -> "OwnerSet":
        bits = 0
        for o in owners:
            if not 0 <= o < width:
                raise ValueError(f"owner {o} outside universe of width {width}")
            bits |= 1 << o
        return cls(width, bits)

    def _check(self, other: "OwnerSet") -> None:
        if not isinstance(other, OwnerSet):
            raise TypeError(f"expected OwnerSet, got {type(other).__name__}")
        if other.width != self.width:
            raise UniverseMismatchError(
                f"owner universes differ: width {self.width} vs {other.width}"
            )

    def union(self, other: "OwnerSet") -> "OwnerSet":
        self._check(other)
        return OwnerSet(self.width, self.bits | other.bits)

    __or__ = union

    def intersection(self, other: "OwnerSet") -> "OwnerSet":
        self._check(other)
        return OwnerSet(self.width, self.bits & other.bits)

    __and__ = intersection

    def difference(self, other: "OwnerSet") -> "OwnerSet":
        self._check(other)
        return OwnerSet(self.width, self.bits & ~other.bits)

    def without(self, owner: int) -> "OwnerSet":
        return OwnerSet(self.width, self.bits & ~(1 << owner))

    def is_subset(self, other: "OwnerSet") -> bool:
        self._check(other)
        return self.bits & other.bits == self.bits

    __le__ = is_subset

    def __lt__(self, other: "OwnerSet") -> bool:
        return self.is_subset(other) and self.bits != other.bits

    def cardinality(self) -> int:
        return self.bits.bit_count()

    __len__ = cardinality

    def __contains__(self, owner: int) -> bool:
        return 0 <= owner < self.width and bool(self.bits >> owner & 1)

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def indices(self) -> tuple[int, ...]:
        return tuple(self)

    def __bool__(self) -> bool:
        return self.bits != 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OwnerSet):
            return NotImplemented
        return self.width == other.width and self.bits == other.bits

    def __hash__(self) -> int:
        return hash((self.width, self.bits))

    def __repr__(self) -> str:
        members = ",".join(f"u{i}" for i in self)
        return f"OwnerSet({{{members}}}, width={self.width})"


@dataclass(frozen=True)
class Allocation:
    """Per-owner revenue shares for one coalition set.

    ``shares[i]`` is the exact value assigned to owner ``i``; the owner universe
    is dense, so zeros are stored explicitly. ``per_tuple`` optionally maps
    ``(tuple_index, owner)`` to that tuple's contribution.
    """

    shares: tuple[Fraction, ...]
    per_tuple: Mapping[tuple[int, int], Fraction] | None = None

    def __post_init__(self):
        for i, v in enumerate(self.shares):
            if v < 0:
                raise ValueError(f"negative share {v} for owner {i}")

    @classmethod
    def zeros(cls, n_owners: int) -> "Allocation":
        return cls(shares=(Fraction(0),) * n_owners)

    @classmethod
    def from_mapping(cls, n_owners: int, values: Mapping[int, Fraction]) -> "Allocation":
        shares = [Fraction(0)] * n_owners
        for owner, v in values.items():
            shares[owner] = Fraction(v)
        return cls(shares=tuple(shares))

    @property
    def n_owners(self) -> int:
        return len(self.shares)

    def __getitem__(self, owner: int) -> Fraction:
        return self.shares[owner]

    def total(self) -> Fraction:
        return sum(self.shares, Fraction(0))

    def per_owner(self) -> dict[int, Fraction]:
        return dict(enumerate(self.shares))

    def as_floats(self) -> list[float]:
        return [float(v) for v in self.shares]
