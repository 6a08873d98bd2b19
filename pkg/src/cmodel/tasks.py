"""Classification, decoding, compression and regression through a complete model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CModelError
from .model import CompleteModel
from .space import Bits, bits_to_int, format_bits, int_to_bits


class TaskError(CModelError):
    module = "tasks"


class UnknownElement(TaskError):
    pass


class OutlierNotCompressible(TaskError):
    pass


class DummyCode(TaskError):
    pass


class BadCode(TaskError):
    pass


class EmptyInput(TaskError):
    pass


class _Outlier:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Outlier"

    __str__ = __repr__


OUTLIER = _Outlier()


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# classification


def classify(x: Bits, model: CompleteModel):
    """Class label of ``x``, or ``OUTLIER`` when it lies outside every class."""
    x = tuple(x)
    if x not in model:
        raise UnknownElement(f"{format_bits(x)} is not in the model's universe")
    idx = model.index_of(x)
    coords = int_to_bits(idx, model.n_bits)
    for i, v in model.union_values().items():
        if coords[i] != v:
            return OUTLIER
    block = model.block_at(idx)
    if block is None or model.is_dummy(idx):
        return OUTLIER
    return block.label


# ---------------------------------------------------------------------------
# decoding


def _assemble(model: CompleteModel, label: str, irrelevant: Sequence[int]) -> int:
    coords = [0] * model.n_bits
    for i, v in model.relevant_values(label).items():
        coords[i] = v
    for i, v in zip(model.irrelevant_positions(label), irrelevant):
        coords[i] = int(v)
    return bits_to_int(coords)


def decode(model: CompleteModel, label: str, rng_seed=None) -> Bits:
    """Draw a uniformly random real member of class ``label``.

    Irrelevant bits are drawn uniformly and combined with the class's
    deterministic bits; draws that hit a dummy slot are rejected.
    """
    model.block(label)
    rng = as_rng(rng_seed)
    k = len(model.irrelevant_positions(label))
    while True:
        idx = _assemble(model, label, rng.integers(0, 2, size=k))
        x = model.slots[idx]
        if x is not None:
            return x


def decode_many(model: CompleteModel, label: str, count: int, rng_seed=None) -> list[Bits]:
    rng = as_rng(rng_seed)
    return [decode(model, label, rng) for _ in range(count)]


def enumerate_class(model: CompleteModel, label: str) -> list[Bits]:
    """Every real member of ``label``, by exhausting its irrelevant-bit patterns."""
    k = len(model.irrelevant_positions(label))
    out = []
    for pattern in range(1 << k):
        x = model.slots[_assemble(model, label, int_to_bits(pattern, k))]
        if x is not None:
            out.append(x)
    return out


# ---------------------------------------------------------------------------
# lossless compression


@dataclass(frozen=True)
class CompressedCode:
    class_label: str
    irrelevant_bits: Bits

    def __len__(self) -> int:
        return len(self.irrelevant_bits)


def compress(x: Bits, model: CompleteModel) -> CompressedCode:
    label = classify(x, model)
    if label is OUTLIER:
        raise OutlierNotCompressible(f"{format_bits(x)} is an outlier")
    coords = model.forward(x)
    return CompressedCode(label, tuple(coords[i] for i in model.irrelevant_positions(label)))


def decompress(code: CompressedCode, model: CompleteModel) -> Bits:
    model.block(code.class_label)
    k = len(model.irrelevant_positions(code.class_label))
    if len(code.irrelevant_bits) != k:
        raise BadCode(f"class {code.class_label!r} needs {k} bits, got {len(code.irrelevant_bits)}")
    x = model.slots[_assemble(model, code.class_label, code.irrelevant_bits)]
    if x is None:
        raise DummyCode(f"code {format_bits(code.irrelevant_bits)} addresses a padding slot")
    return x


def pack_bits(bits: Sequence[int]) -> bytes:
    """Pack bits most-significant-first, zero-filling the last byte."""
    out = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            out[i // 8] |= 0x80 >> (i % 8)
    return bytes(out)


def unpack_bits(data: bytes, n_bits: int) -> Bits:
    if len(data) != (n_bits + 7) // 8:
        raise BadCode(f"{len(data)} bytes cannot hold exactly {n_bits} bits")
    return tuple((data[i // 8] >> (7 - i % 8)) & 1 for i in range(n_bits))


def encode_code(code: CompressedCode) -> bytes:
    label = code.class_label
    if not label or any(c.isspace() for c in label):
        raise BadCode(f"class label {label!r} cannot be written to a code file")
    header = f"CMC1 {label} {len(code.irrelevant_bits)}\n".encode()
    return header + pack_bits(code.irrelevant_bits)


def decode_code(data: bytes) -> CompressedCode:
    head, sep, body = data.partition(b"\n")
    parts = head.decode(errors="replace").split(" ")
    if not sep or len(parts) != 3 or parts[0] != "CMC1" or not parts[2].isdigit():
        raise BadCode("missing or malformed CMC1 header")
    return CompressedCode(parts[1], unpack_bits(body, int(parts[2])))


def write_code(code: CompressedCode, path: str | Path) -> None:
    Path(path).write_bytes(encode_code(code))


def read_code(path: str | Path) -> CompressedCode:
    return decode_code(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# regression as classification


@dataclass(frozen=True)
class RegressionGrid:
    """Candidate (a, b) pairs of y = a * exp(b * x), each one class."""

    pairs: tuple[tuple[float, float], ...]
    sample_points: tuple[float, ...]
    noise_sigma: float
    precision_bits: int = 16

    def __post_init__(self):
        pairs = tuple((float(a), float(b)) for a, b in self.pairs)
        if not pairs:
            raise EmptyInput("regression grid is empty")
        if len(set(pairs)) != len(pairs):
            raise TaskError("regression grid has duplicate pairs")
        if not self.noise_sigma > 0:
            raise TaskError("noise_sigma must be positive")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "sample_points", tuple(float(x) for x in self.sample_points))


def quantize(y: float, precision_bits: int) -> float:
    scale = 2.0**precision_bits
    return math.floor(y * scale + 0.5) / scale


def log_likelihood(points, a: float, b: float, grid: RegressionGrid) -> float:
    s = grid.noise_sigma
    rss = sum((quantize(y, grid.precision_bits) - a * math.exp(b * x)) ** 2 for x, y in points)
    return -rss / (2 * s * s) - len(points) * math.log(s * math.sqrt(2 * math.pi))


def fit_regression(points, grid: RegressionGrid, floor: float | None = None):
    """Assign a noisy point set to the most likely (a, b) class of ``grid``.

    Gaussian noise of width ``grid.noise_sigma``; ties go to the earlier grid
    pair.  With ``floor`` set, a best log-likelihood below it is an outlier.
    """
    points = [(float(x), float(y)) for x, y in points]
    if not points:
        raise EmptyInput("no points")
    allowed = set(grid.sample_points)
    for x, _ in points:
        if x not in allowed:
            raise TaskError(f"x = {x} is not a grid sample point")
    best, best_ll = None, -math.inf
    for a, b in grid.pairs:
        ll = log_likelihood(points, a, b, grid)
        if ll > best_ll:
            best, best_ll = (a, b), ll
    if floor is not None and best_ll < floor:
        return OUTLIER
    return best
