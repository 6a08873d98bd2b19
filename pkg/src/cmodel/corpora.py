"""Ising and geometric image corpora, and relevant/irrelevant bit counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import __version__
from .errors import CModelError
from .space import Bits, format_bits


class CorpusError(CModelError):
    module = "corpora"


class SizeMismatch(CorpusError):
    pass


class TooLargeForExact(CorpusError):
    pass


class ExtentOutOfRange(CorpusError):
    pass


BOUNDARY = "open"


@dataclass(frozen=True)
class IsingSpec:
    side: int
    beta: float
    j_pair: float = 1.0
    h_field: float = 0.0

    def __post_init__(self):
        if self.side < 1:
            raise CorpusError("side must be >= 1")
        if self.beta < 0:
            raise CorpusError("beta must be >= 0")
        if not all(math.isfinite(v) for v in (self.beta, self.j_pair, self.h_field)):
            raise CorpusError("couplings must be finite")


def unequal_pairs(grid: np.ndarray) -> int:
    """Adjacent 4-neighbour pairs with different values, open boundary."""
    return int((grid[1:, :] != grid[:-1, :]).sum() + (grid[:, 1:] != grid[:, :-1]).sum())


def _grid(image, side: int) -> np.ndarray:
    arr = np.asarray(image, dtype=np.int8)
    if arr.size != side * side:
        raise SizeMismatch(f"image has {arr.size} pixels, expected {side * side}")
    return arr.reshape(side, side)


def sufficient_statistics(image, side: int) -> tuple[int, int]:
    """(#unequal neighbour pairs, #ones): all an Ising weight depends on."""
    g = _grid(image, side)
    return unequal_pairs(g), int(g.sum())


def ising_energy(image, spec: IsingSpec) -> float:
    pairs, ones = sufficient_statistics(image, spec.side)
    return spec.j_pair * pairs + spec.h_field * ones


def ising_exact_distribution(spec: IsingSpec) -> dict[Bits, float]:
    """Boltzmann probabilities exp(-beta H)/Z over every image, by enumeration."""
    n = spec.side * spec.side
    if n > 16:
        raise TooLargeForExact(f"{n} pixels; exact enumeration is limited to 16")
    images = list(product((0, 1), repeat=n))
    energies = np.array([ising_energy(im, spec) for im in images])
    logw = -spec.beta * energies
    w = np.exp(logw - logw.max())
    p = w / w.sum()
    return dict(zip(images, p.tolist()))


def _metropolis(spec: IsingSpec, rng: np.random.Generator, sweeps: int, n_chains: int) -> np.ndarray:
    # Each site update proposes a uniformly random new value (so a flip half of
    # the time) and accepts it with min(1, exp(-beta dH)).
    L = spec.side
    s = np.zeros((n_chains, L, L), dtype=np.int8)
    for _ in range(sweeps):
        for r in range(L):
            for c in range(L):
                propose = rng.integers(0, 2, size=n_chains).astype(bool)
                u = rng.random(n_chains)
                cur = s[:, r, c]
                new = 1 - cur
                d_pairs = np.zeros(n_chains, dtype=np.int64)
                for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= rr < L and 0 <= cc < L:
                        nb = s[:, rr, cc]
                        d_pairs += (new != nb).astype(np.int64) - (cur != nb)
                d_h = spec.j_pair * d_pairs + spec.h_field * (new.astype(np.int64) - cur)
                with np.errstate(over="ignore"):
                    accept = u < np.exp(-spec.beta * d_h)
                flip = propose & accept
                s[:, r, c] = np.where(flip, new, cur)
    return s.reshape(n_chains, L * L)


def ising_sample(spec: IsingSpec, seed, sweeps: int) -> Bits:
    """One configuration after ``sweeps`` row-major Metropolis sweeps from all zeros."""
    if sweeps < 1:
        raise CorpusError("sweeps must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return tuple(int(b) for b in _metropolis(spec, rng, sweeps, 1)[0])


def ising_samples(spec: IsingSpec, seed, sweeps: int, count: int) -> list[Bits]:
    """``count`` independent chains run side by side from one seed."""
    if sweeps < 1:
        raise CorpusError("sweeps must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return [tuple(int(b) for b in row) for row in _metropolis(spec, rng, sweeps, count)]


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def empirical_distribution(samples) -> dict:
    counts: dict = {}
    for s in samples:
        counts[s] = counts.get(s, 0) + 1
    n = len(samples)
    return {k: v / n for k, v in counts.items()}


# ---------------------------------------------------------------------------
# geometric images


@dataclass(frozen=True)
class Rect:
    """Inclusive pixel extents ``x = (first, last)``, ``y = (first, last)``."""

    x: tuple[int, int]
    y: tuple[int, int]
    color: tuple[int, ...] = (1,)


@dataclass(frozen=True)
class GeomSpec:
    side: int
    shapes: tuple[Rect, ...] = field(default_factory=tuple)
    depth: int = 1
    background: int = 0

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        for s in self.shapes:
            for lo, hi in (s.x, s.y):
                if not 0 <= lo <= hi < self.side:
                    raise ExtentOutOfRange(f"extent ({lo}, {hi}) outside [0, {self.side})")
            if len(s.color) != self.depth or any(b not in (0, 1) for b in s.color):
                raise CorpusError(f"color {s.color} is not {self.depth} bits")


def square(x: int, y: int, edge: int, color=(1,)) -> Rect:
    return Rect((x, x + edge - 1), (y, y + edge - 1), tuple(color))


def render_geometry(spec: GeomSpec) -> Bits:
    """Row-major pixels, ``depth`` bits each; later shapes overdraw earlier ones."""
    img = np.full((spec.side, spec.side, spec.depth), spec.background, dtype=np.int8)
    for s in spec.shapes:
        img[s.y[0] : s.y[1] + 1, s.x[0] : s.x[1] + 1, :] = s.color
    return tuple(int(b) for b in img.reshape(-1))


def to_pbm(bits: Bits, side: int) -> str:
    rows = [" ".join(str(b) for b in bits[r * side : (r + 1) * side]) for r in range(side)]
    return f"P1\n# cmodel {__version__}\n{side} {side}\n" + "\n".join(rows) + "\n"


def to_ppm(bits: Bits, side: int, depth: int) -> str:
    """Plain PPM; each pixel's bits split into three channels (most significant first)."""
    per = math.ceil(depth / 3)
    maxval = (1 << per) - 1
    lines = [f"P3\n# cmodel {__version__}\n{side} {side}\n{maxval}"]
    for r in range(side):
        row = []
        for c in range(side):
            px = bits[(r * side + c) * depth : (r * side + c + 1) * depth]
            px = tuple(px) + (0,) * (3 * per - depth)
            row.extend(str(int(format_bits(px[k * per : (k + 1) * per]), 2)) for k in range(3))
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# counts


def _bits_for(n: int) -> int:
    return max(0, (n - 1).bit_length())  # ceil(log2 n)


def square_corpus_bits(side: int) -> int:
    """Naive irrelevant-bit count of the single-square corpus: x, y and edge."""
    if side < 2:
        raise CorpusError("side must be >= 2")
    return 3 * _bits_for(side)


def square_corpus_exact_bits(side: int) -> float:
    """log2 of the number of squares that fit inside the canvas."""
    placements = sum((side - e + 1) ** 2 for e in range(1, side + 1))
    return math.log2(placements)


@dataclass(frozen=True)
class BitCounts:
    irrelevant: int
    total: int
    relevant: int


def rect_corpus_bits(side: int, n_rects: int, color_depth: int) -> BitCounts:
    """Irrelevant bits for ``n_rects`` coloured rectangles on a side x side canvas.

    Each rectangle costs two extent pairs (C(L, 2) choices per axis) and its
    colour.
    """
    if side < 2 or n_rects < 1:
        raise CorpusError("need side >= 2 and n_rects >= 1")
    pairs = side * (side - 1) // 2
    raw = n_rects * (2 * math.log2(pairs) + color_depth)
    irrelevant = math.ceil(raw - 1e-9)
    total = side * side * color_depth
    return BitCounts(irrelevant, total, total - irrelevant)


def rect_corpus_naive_bits(side: int, n_rects: int, color_depth: int) -> int:
    """Per-field encoding: four coordinates of ceil(log2 L) bits plus the colour."""
    return n_rects * (4 * _bits_for(side) + color_depth)
