"""Finite probability spaces over bit-string universes.

Elements are tuples of 0/1 ints.  A *coordinatization* is any callable that
maps an element to a tuple of 0/1 ints of fixed length; ``None`` means the
identity.  All probabilities are exact :class:`fractions.Fraction` values.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import CModelError

Bits = tuple[int, ...]
Coordinatization = Optional[Callable[[Bits], Bits]]


class SpaceError(CModelError):
    module = "space"


class EmptySubset(SpaceError):
    pass


class IndexOutOfRange(SpaceError):
    pass


class EmptyBitSequence(SpaceError):
    pass


class InvalidBits(SpaceError):
    pass


class OverlappingClasses(SpaceError):
    pass


# ---------------------------------------------------------------------------
# bit-string helpers


def parse_bits(text: str, n_bits: int | None = None) -> Bits:
    """Parse ``"0110"`` into ``(0, 1, 1, 0)`` (most significant bit first)."""
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise InvalidBits(f"not a 0/1 string: {text!r}")
    if n_bits is not None and len(text) != n_bits:
        raise InvalidBits(f"expected {n_bits} bits, got {len(text)}: {text!r}")
    return tuple(1 if c == "1" else 0 for c in text)


def format_bits(bits: Iterable[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


def int_to_bits(value: int, n_bits: int) -> Bits:
    return tuple((value >> (n_bits - 1 - i)) & 1 for i in range(n_bits))


def bits_to_int(bits: Iterable[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | b
    return value


def all_bit_vectors(n_bits: int) -> list[Bits]:
    return [int_to_bits(i, n_bits) for i in range(1 << n_bits)]


def read_elements(path: str | Path, n_bits: int | None = None) -> list[Bits]:
    """Read a newline-delimited file of fixed-width 0/1 strings."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        bits = parse_bits(line, n_bits)
        if n_bits is None:
            n_bits = len(bits)
        out.append(bits)
    return out


def write_elements(path: str | Path, elements: Iterable[Bits]) -> None:
    Path(path).write_text("".join(format_bits(e) + "\n" for e in elements))


def bits_to_unit_interval(bits: Sequence[int]) -> float:
    """Read ``bits`` as binary figures of a number in [0, 1): sum of b_i / 2^i."""
    if len(bits) == 0:
        raise EmptyBitSequence("need at least one bit")
    value = 0.0
    for i, b in enumerate(bits, start=1):
        if b not in (0, 1):
            raise InvalidBits(f"bit value {b!r}")
        value += b / 2.0**i
    return value


# ---------------------------------------------------------------------------
# universes and families


@dataclass(frozen=True)
class Universe:
    n_bits: int
    elements: frozenset[Bits]

    def __post_init__(self):
        if self.n_bits < 1:
            raise InvalidBits("universe needs n_bits >= 1")
        if not self.elements:
            raise EmptySubset("universe has no elements")
        for e in self.elements:
            if len(e) != self.n_bits or any(b not in (0, 1) for b in e):
                raise InvalidBits(f"element {e!r} is not a {self.n_bits}-bit vector")

    @classmethod
    def full(cls, n_bits: int) -> "Universe":
        return cls(n_bits, frozenset(all_bit_vectors(n_bits)))

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return x in self.elements

    def sorted(self) -> list[Bits]:
        return sorted(self.elements)


@dataclass(frozen=True)
class SubsetFamily:
    """Pairwise disjoint labelled classes C_a inside a universe."""

    universe: Universe
    classes: Mapping[str, frozenset[Bits]]
    union: frozenset[Bits] = field(init=False)

    def __post_init__(self):
        classes = {str(k): frozenset(v) for k, v in self.classes.items()}
        if not classes:
            raise EmptySubset("family needs at least one class")
        seen: dict[Bits, str] = {}
        for label, members in classes.items():
            if not members:
                raise EmptySubset(f"class {label!r} is empty")
            for x in members:
                if x not in self.universe.elements:
                    raise InvalidBits(f"class {label!r} element {format_bits(x)} not in universe")
                if x in seen:
                    raise OverlappingClasses(
                        f"element {format_bits(x)} in both {seen[x]!r} and {label!r}"
                    )
                seen[x] = label
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "union", frozenset(seen))

    def label_of(self, x: Bits) -> str | None:
        for label, members in self.classes.items():
            if x in members:
                return label
        return None


def load_family(path: str | Path) -> SubsetFamily:
    """Load a subsets file.

    JSON object with ``n_bits``, ``classes`` (label -> list of bit strings)
    and optional ``universe`` (list of bit strings; default all of B^n).
    """
    data = json.loads(Path(path).read_text())
    n = int(data["n_bits"])
    if data.get("universe") in (None, "full"):
        universe = Universe.full(n)
    else:
        universe = Universe(n, frozenset(parse_bits(s, n) for s in data["universe"]))
    classes = {
        str(label): frozenset(parse_bits(s, n) for s in members)
        for label, members in data["classes"].items()
    }
    return SubsetFamily(universe, classes)


def dump_family(family: SubsetFamily) -> dict:
    u = family.universe
    full = len(u) == 1 << u.n_bits
    return {
        "n_bits": u.n_bits,
        "universe": "full" if full else [format_bits(e) for e in u.sorted()],
        "classes": {k: [format_bits(e) for e in sorted(v)] for k, v in family.classes.items()},
    }


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class DistributionTable:
    """Joint distribution of coordinates ``indices`` over a subset.

    Stored as occurrence counts over ``total`` = |C|; absent patterns have
    probability zero.
    """

    indices: tuple[int, ...]
    counts: Mapping[Bits, int]
    total: int

    def probability(self, pattern: Sequence[int]) -> Fraction:
        return Fraction(self.counts.get(tuple(pattern), 0), self.total)

    @property
    def entries(self) -> dict[Bits, Fraction]:
        return {k: Fraction(v, self.total) for k, v in self.counts.items()}

    def to_json(self) -> dict:
        return {
            "indices": list(self.indices),
            "entries": {
                format_bits(k): [self.counts[k], self.total] for k in sorted(self.counts)
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "DistributionTable":
        entries = data["entries"]
        totals = {int(v[1]) for v in entries.values()}
        if len(totals) != 1:
            raise SpaceError("entries must share one denominator")
        counts = {parse_bits(k): int(v[0]) for k, v in entries.items()}
        return cls(tuple(data["indices"]), counts, totals.pop())


def _coords(subset: Iterable[Bits], coordinatization: Coordinatization) -> list[Bits]:
    items = list(subset)
    if not items:
        raise EmptySubset("subset is empty")
    if coordinatization is None:
        return items
    return [tuple(coordinatization(y)) for y in items]


def _check_indices(indices: Sequence[int], n: int) -> tuple[int, ...]:
    idx = tuple(indices)
    if len(set(idx)) != len(idx):
        raise IndexOutOfRange(f"duplicate indices in {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"index {i} outside [0, {n})")
    return idx


def joint_distribution(
    subset: Iterable[Bits], indices: Sequence[int], coordinatization: Coordinatization = None
) -> DistributionTable:
    coords = _coords(subset, coordinatization)
    idx = _check_indices(indices, len(coords[0]))
    counts = Counter(tuple(c[i] for i in idx) for c in coords)
    return DistributionTable(idx, dict(counts), len(coords))


def expectation(q: Callable[[Bits], object], subset: Iterable[Bits]):
    """Mean of ``q`` over ``subset``; exact when ``q`` is int/Fraction valued."""
    items = list(subset)
    if not items:
        raise EmptySubset("subset is empty")
    values = [q(y) for y in items]
    if all(isinstance(v, (int, Fraction)) for v in values):
        return Fraction(sum(values), len(items))
    return sum(values) / len(items)


def correlation(
    indices: Sequence[int], subset: Iterable[Bits], coordinatization: Coordinatization = None
) -> Fraction:
    """a-point correlation E(prod_{i in indices} xi_i | subset)."""
    coords = _coords(subset, coordinatization)
    idx = _check_indices(indices, len(coords[0]))
    return expectation(lambda c: int(all(c[i] for i in idx)), coords)


def is_deterministic(
    i: int, subset: Iterable[Bits], coordinatization: Coordinatization = None
) -> int | None:
    coords = _coords(subset, coordinatization)
    _check_indices([i], len(coords[0]))
    values = {c[i] for c in coords}
    return values.pop() if len(values) == 1 else None


def is_uniform(i: int, subset: Iterable[Bits], coordinatization: Coordinatization = None) -> bool:
    coords = _coords(subset, coordinatization)
    _check_indices([i], len(coords[0]))
    ones = sum(c[i] for c in coords)
    return 2 * ones == len(coords)


def _factorizes(coords: list[Bits], i: int) -> bool:
    # Occurring patterns suffice: if p(s) = p_i * p_rest on every occurring s,
    # both sides sum to 1, so the product vanishes on every absent pattern.
    n = len(coords)
    full = Counter(coords)
    single = Counter(c[i] for c in coords)
    rest = Counter(c[:i] + c[i + 1 :] for c in coords)
    return all(
        cnt * n == single[s[i]] * rest[s[:i] + s[i + 1 :]] for s, cnt in full.items()
    )


def is_independent(
    i: int, subset: Iterable[Bits], coordinatization: Coordinatization = None
) -> bool:
    """Whether coordinate ``i`` is independent of all the others over ``subset``."""
    coords = _coords(subset, coordinatization)
    _check_indices([i], len(coords[0]))
    return _factorizes(coords, i)


def independence_by_correlations(
    i: int, subset: Iterable[Bits], coordinatization: Coordinatization = None
) -> bool:
    """Brute-force independence test through all correlation functions.

    Exponential in the number of coordinates; meant as a cross-check for
    small N only.
    """
    coords = _coords(subset, coordinatization)
    n = len(coords[0])
    _check_indices([i], n)
    others = [j for j in range(n) if j != i]
    e_i = correlation([i], coords)
    for mask in range(1 << len(others)):
        s = [others[k] for k in range(len(others)) if mask >> k & 1]
        if correlation([i, *s], coords) != e_i * correlation(s, coords):
            return False
    return True
