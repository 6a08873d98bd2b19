"""Common complete models built from an indexed list of the classes.

The classes are laid out largest first, each padded with dummy slots to a
power-of-two block; the position of an element in that list, written in
binary, is its coordinate vector.  Because every block of size 2^k starts at
a multiple of 2^k, the leading bits are constant on a block and the trailing
k bits run through all of B^k.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .errors import CModelError
from .space import (
    Bits,
    Coordinatization,
    SubsetFamily,
    format_bits,
    int_to_bits,
    bits_to_int,
    is_deterministic,
    is_independent,
    is_uniform,
    parse_bits,
)


class ModelError(CModelError):
    module = "model"


class NotPowerOfTwo(ModelError):
    pass


class NotABijection(ModelError):
    pass


class UnknownClass(ModelError):
    pass


class Tag(str, Enum):
    OVERALL_RELEVANT = "OverallRelevant"
    PARTIALLY_RELEVANT = "PartiallyRelevant"
    IRRELEVANT = "Irrelevant"
    RESIDUAL = "Residual"


@dataclass(frozen=True)
class CoordinateClass:
    tag: Tag
    class_values: Mapping[str, int] = field(default_factory=dict)
    union_value: int | None = None

    def to_json(self) -> dict:
        return {
            "tag": self.tag.value,
            "union_value": self.union_value,
            "class_values": dict(self.class_values),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CoordinateClass":
        return cls(Tag(data["tag"]), dict(data["class_values"]), data["union_value"])


@dataclass(frozen=True)
class ClassBlock:
    label: str
    start: int
    size: int  # padded, a power of two
    n_real: int

    @property
    def end(self) -> int:
        return self.start + self.size

    @property
    def n_irrelevant(self) -> int:
        return self.size.bit_length() - 1


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class CompleteModel:
    """A bijection between an extended universe and B^n_bits.

    ``slots[i]`` is the element whose coordinate vector is the binary form of
    ``i``; ``None`` marks a dummy slot.
    """

    n_bits: int
    slots: tuple[Bits | None, ...]
    blocks: tuple[ClassBlock, ...]
    union_size: int
    coordinate_classes: tuple[CoordinateClass, ...]
    _index: dict = field(init=False, repr=False, compare=False)
    _starts: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.slots) != 1 << self.n_bits:
            raise NotABijection(f"{len(self.slots)} slots for {self.n_bits} bits")
        index = {}
        for i, x in enumerate(self.slots):
            if x is None:
                continue
            if x in index:
                raise NotABijection(f"element {format_bits(x)} appears twice")
            index[x] = i
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_starts", [b.start for b in self.blocks])

    # -- lookups ----------------------------------------------------------

    @property
    def elements(self) -> frozenset[Bits]:
        return frozenset(self._index)

    @property
    def labels(self) -> list[str]:
        return [b.label for b in self.blocks]

    @property
    def class_ranges(self) -> dict[str, tuple[int, int]]:
        return {b.label: (b.start, b.end) for b in self.blocks}

    @property
    def padded_sizes(self) -> dict[str, int]:
        return {b.label: b.size for b in self.blocks}

    @property
    def dummy_indices(self) -> frozenset[int]:
        return frozenset(i for i, x in enumerate(self.slots) if x is None)

    def block(self, label: str) -> ClassBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise UnknownClass(f"no class {label!r}")

    def block_at(self, index: int) -> ClassBlock | None:
        k = bisect_right(self._starts, index) - 1
        if k >= 0 and index < self.blocks[k].end:
            return self.blocks[k]
        return None

    def __contains__(self, x) -> bool:
        return x in self._index

    def index_of(self, x: Bits) -> int:
        return self._index[x]

    def forward(self, x: Bits) -> Bits:
        return int_to_bits(self._index[tuple(x)], self.n_bits)

    __call__ = forward

    def inverse(self, coords: Bits | int) -> Bits | None:
        i = coords if isinstance(coords, int) else bits_to_int(coords)
        return self.slots[i]

    def is_dummy(self, index: int) -> bool:
        return self.slots[index] is None

    def relevant_values(self, label: str) -> dict[int, int]:
        """Coordinates that are deterministic on class ``label``, with their value."""
        return {
            i: cc.class_values[label]
            for i, cc in enumerate(self.coordinate_classes)
            if label in cc.class_values
        }

    def irrelevant_positions(self, label: str) -> list[int]:
        """Coordinates that are uniform within class ``label``, ascending."""
        return [i for i, cc in enumerate(self.coordinate_classes) if label not in cc.class_values]

    def union_values(self) -> dict[int, int]:
        return {
            i: cc.union_value
            for i, cc in enumerate(self.coordinate_classes)
            if cc.union_value is not None
        }


# ---------------------------------------------------------------------------
# construction


def classify_coordinate(
    i: int, class_sets: Mapping[str, Sequence[Bits]], union_set: Sequence[Bits]
) -> CoordinateClass:
    union_value = is_deterministic(i, union_set)
    class_values = {}
    all_uniform = True
    all_det_or_uniform = True
    for label, members in class_sets.items():
        v = is_deterministic(i, members)
        uni = v is None and is_uniform(i, members) and is_independent(i, members)
        if v is not None:
            class_values[label] = v
        all_uniform &= uni
        all_det_or_uniform &= v is not None or uni
    if union_value is not None:
        tag = Tag.OVERALL_RELEVANT
    elif all_uniform:
        tag = Tag.IRRELEVANT
    elif (
        all_det_or_uniform
        and class_values
        and is_uniform(i, union_set)
        and is_independent(i, union_set)
    ):
        tag = Tag.PARTIALLY_RELEVANT
    else:
        tag = Tag.RESIDUAL
    return CoordinateClass(tag, class_values, union_value)


def _index_patterns(start: int, stop: int, n_bits: int) -> list[Bits]:
    return [int_to_bits(i, n_bits) for i in range(start, stop)]


def _sweep(n_bits: int, blocks: Sequence[ClassBlock], union_size: int) -> tuple[CoordinateClass, ...]:
    class_sets = {b.label: _index_patterns(b.start, b.end, n_bits) for b in blocks}
    union_set = _index_patterns(0, union_size, n_bits)
    return tuple(classify_coordinate(i, class_sets, union_set) for i in range(n_bits))


def build_common_complete_model(family: SubsetFamily, pad: bool = True) -> CompleteModel:
    universe = family.universe
    if not pad:
        for label, members in family.classes.items():
            if not _is_pow2(len(members)):
                raise NotPowerOfTwo(f"|{label}| = {len(members)} is not a power of 2")
        for name, n in (("C", len(family.union)), ("X", len(universe))):
            if not _is_pow2(n):
                raise NotPowerOfTwo(f"|{name}| = {n} is not a power of 2")
        if len(universe) < 2:
            raise NotPowerOfTwo("universe needs at least 2 elements without padding")
    size_of = _next_pow2 if pad else (lambda n: n)

    order = sorted(
        family.classes.items(),
        key=lambda kv: (-size_of(len(kv[1])), kv[0], min(kv[1])),
    )
    slots: list[Bits | None] = []
    blocks = []
    for label, members in order:
        size = size_of(len(members))
        blocks.append(ClassBlock(label, len(slots), size, len(members)))
        slots.extend(sorted(members))
        slots.extend([None] * (size - len(members)))
    union_size = size_of(len(slots))
    slots.extend([None] * (union_size - len(slots)))
    slots.extend(sorted(universe.elements - family.union))
    total = max(2, size_of(len(slots)))
    slots.extend([None] * (total - len(slots)))
    n_bits = total.bit_length() - 1

    return CompleteModel(
        n_bits, tuple(slots), tuple(blocks), union_size, _sweep(n_bits, blocks, union_size)
    )


def relabel_irrelevant(model: CompleteModel, label: str, permutation) -> CompleteModel:
    """Permute the irrelevant-bit patterns inside one class block.

    ``permutation`` is either a sequence ``p`` of block offsets (the slot at
    offset ``o`` moves to offset ``p[o]``) or a mapping between irrelevant-bit
    patterns of length N_a.
    """
    block = model.block(label)
    k = block.n_irrelevant
    if isinstance(permutation, Mapping):
        perm = [bits_to_int(permutation[int_to_bits(o, k)]) for o in range(block.size)]
    else:
        perm = [int(p) for p in permutation]
    if sorted(perm) != list(range(block.size)):
        raise NotABijection(f"not a permutation of {block.size} block offsets")
    slots = list(model.slots)
    for o, p in enumerate(perm):
        slots[block.start + p] = model.slots[block.start + o]
    return CompleteModel(
        model.n_bits, tuple(slots), model.blocks, model.union_size, model.coordinate_classes
    )


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.passed

    def check(self, ok: bool, message: str) -> None:
        self.checks += 1
        if not ok:
            self.failures.append(message)

    def to_json(self) -> dict:
        return {"passed": self.passed, "checks": self.checks, "failures": list(self.failures)}


def _check_sets(
    report: VerificationReport, named_sets: Mapping[str, Sequence[Bits]], n_bits: int
) -> None:
    for name, coords in named_sets.items():
        for i in range(n_bits):
            det = is_deterministic(i, coords) is not None
            uni = is_uniform(i, coords) and is_independent(i, coords)
            report.check(
                det != uni,
                f"{name}: coordinate {i} is neither deterministic nor uniform-and-independent",
            )


def check_complete(
    subsets: Mapping[str, Iterable[Bits]], coordinatization: Coordinatization = None
) -> VerificationReport:
    """Check that ``coordinatization`` is a complete model of every given subset."""
    report = VerificationReport()
    named = {}
    for name, members in subsets.items():
        members = list(members)
        named[name] = members if coordinatization is None else [coordinatization(y) for y in members]
    n_bits = len(next(iter(named.values()))[0])
    _check_sets(report, named, n_bits)
    return report


def verify_complete_model(model: CompleteModel, family: SubsetFamily) -> VerificationReport:
    report = VerificationReport()
    n = model.n_bits

    # bijectivity on the extended universe
    report.check(len(model.slots) == 1 << n, "slot count is not 2^n_bits")
    report.check(
        model.elements == family.universe.elements,
        "real elements of the model differ from the universe",
    )
    for i, x in enumerate(model.slots):
        if x is not None:
            report.check(model.index_of(x) == i, f"inverse(forward({format_bits(x)})) != id")

    # class membership and layout
    report.check(
        sorted(model.labels) == sorted(family.classes), "class labels differ from the family"
    )
    prev_size = None
    prev_end = 0
    for b in model.blocks:
        report.check(_is_pow2(b.size), f"{b.label}: padded size {b.size} not a power of 2")
        report.check(b.start % b.size == 0, f"{b.label}: block start not aligned")
        report.check(b.start >= prev_end, f"{b.label}: block overlaps its predecessor")
        report.check(prev_size is None or b.size <= prev_size, f"{b.label}: blocks not sorted")
        prev_size, prev_end = b.size, b.end
        real = {x for x in model.slots[b.start : b.end] if x is not None}
        report.check(
            real == set(family.classes.get(b.label, ())),
            f"{b.label}: block members differ from the family class",
        )
    report.check(
        prev_end <= model.union_size and _is_pow2(model.union_size),
        "union block is not a power of 2 covering all classes",
    )

    # deterministic XOR uniform-and-independent, per padded class and union
    named = {b.label: _index_patterns(b.start, b.end, n) for b in model.blocks}
    named["<union>"] = _index_patterns(0, model.union_size, n)
    _check_sets(report, named, n)

    # exact-uniformity witness on each class's irrelevant bits
    for b in model.blocks:
        positions = [
            i for i in range(n) if is_deterministic(i, named[b.label]) is None
        ]
        report.check(
            len(positions) == b.n_irrelevant,
            f"{b.label}: {len(positions)} irrelevant bits, expected {b.n_irrelevant}",
        )
        projected = {tuple(c[i] for i in positions) for c in named[b.label]}
        report.check(
            len(projected) == b.size == 1 << len(positions),
            f"{b.label}: irrelevant-bit projection is not a bijection onto B^{len(positions)}",
        )

    report.check(
        tuple(model.coordinate_classes) == _sweep(n, model.blocks, model.union_size),
        "stored coordinate classes differ from a fresh sweep",
    )
    return report


# ---------------------------------------------------------------------------
# serialization


def model_to_json(model: CompleteModel) -> dict:
    dummies = model.dummy_indices
    return {
        "format": "cmodel-model",
        "version": __version__,
        "n_bits": model.n_bits,
        "union_size": model.union_size,
        "classes": [
            {
                "label": b.label,
                "interval": [b.start, b.end],
                "padded_size": b.size,
                "n_real": b.n_real,
                "dummies": [i for i in range(b.start, b.end) if i in dummies],
            }
            for b in model.blocks
        ],
        "mapping": [None if x is None else format_bits(x) for x in model.slots],
        "coordinate_classes": [cc.to_json() for cc in model.coordinate_classes],
    }


def model_from_json(data: Mapping) -> CompleteModel:
    if data.get("format") != "cmodel-model":
        raise ModelError("not a model file")
    blocks = []
    for c in data["classes"]:
        start, end = c["interval"]
        if end - start != c["padded_size"]:
            raise ModelError(f"class {c['label']!r}: interval does not match padded size")
        blocks.append(ClassBlock(c["label"], start, c["padded_size"], c["n_real"]))
    slots = tuple(None if s is None else parse_bits(s) for s in data["mapping"])
    model = CompleteModel(
        data["n_bits"],
        slots,
        tuple(blocks),
        data["union_size"],
        tuple(CoordinateClass.from_json(cc) for cc in data["coordinate_classes"]),
    )
    for c in data["classes"]:
        start, end = c["interval"]
        listed = set(c["dummies"])
        actual = {i for i in range(start, end) if slots[i] is None}
        if listed != actual:
            raise ModelError(f"class {c['label']!r}: dummy list does not match mapping")
    return model


def dumps_model(model: CompleteModel) -> str:
    return json.dumps(model_to_json(model), indent=1) + "\n"


def save_model(model: CompleteModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path: str | Path) -> CompleteModel:
    return model_from_json(json.loads(Path(path).read_text()))
