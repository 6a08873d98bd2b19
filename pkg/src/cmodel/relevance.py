"""Measures of relevance: precision sweeps, time variability, lossy compression."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CModelError
from .model import CompleteModel, Tag, classify_coordinate
from .space import Bits, SubsetFamily, Universe, bits_to_int, format_bits, parse_bits
from .tasks import OUTLIER, OutlierNotCompressible, as_rng, classify


class RelevanceError(CModelError):
    module = "relevance"


class StreamTooShort(RelevanceError):
    pass


@dataclass(frozen=True)
class Measurement:
    name: str
    eval: Callable[[Bits], float]
    precision_levels: tuple[int, ...]
    scale_exponent: int | None = None

    def __post_init__(self):
        levels = tuple(int(p) for p in self.precision_levels)
        if any(p < 0 for p in levels) or any(a <= b for a, b in zip(levels, levels[1:])):
            raise RelevanceError("precision levels must be strictly decreasing and >= 0")
        object.__setattr__(self, "precision_levels", levels)


def leading_exponent(values: Iterable[float]) -> int:
    """Smallest e with |v| < 2^e for every value (0 if all values are zero)."""
    peak = max((abs(v) for v in values), default=0.0)
    return math.frexp(peak)[1] if peak else 0


def truncate(v: float, p: int, exponent: int) -> int:
    """Keep ``p`` binary figures of ``v`` below the 2^exponent position.

    Truncates toward zero, so the sign survives and 0 stays 0.
    """
    return math.trunc(math.ldexp(v, p - exponent))


def coarsen(measurement: Measurement, p: int, universe: Universe) -> SubsetFamily:
    """Partition the universe by the measurement rounded to ``p`` binary figures.

    Significant figures are counted from the leading binary position of the
    largest |value| over the universe (or ``scale_exponent`` when given), so
    p = 0 gives the single class X.
    """
    if p not in measurement.precision_levels:
        raise RelevanceError(f"precision {p} not among {measurement.precision_levels}")
    values = {x: measurement.eval(x) for x in universe.elements}
    e = measurement.scale_exponent
    if e is None:
        e = leading_exponent(values.values())
    groups: dict[int, set] = {}
    for x, v in values.items():
        groups.setdefault(truncate(v, p, e), set()).add(x)
    return SubsetFamily(universe, {f"{measurement.name}@{p}:{k}": g for k, g in sorted(groups.items())})


@dataclass(frozen=True)
class RelevanceProfile:
    coordinatization: str
    levels: tuple[int, ...]
    tags: tuple[tuple[Tag, ...], ...]  # tags[level_index][coordinate]
    thresholds: tuple[int, ...]

    def score(self, i: int) -> float:
        return float(self.thresholds[i])

    def to_json(self) -> dict:
        return {
            "coordinatization": self.coordinatization,
            "levels": list(self.levels),
            "coordinates": {
                str(i): {
                    "threshold_precision": self.thresholds[i],
                    "tags": {str(p): self.tags[k][i].value for k, p in enumerate(self.levels)},
                }
                for i in range(len(self.thresholds))
            },
        }


def _name_of(coordinatization) -> str:
    if coordinatization is None:
        return "identity"
    if isinstance(coordinatization, CompleteModel):
        return "complete-model"
    return getattr(coordinatization, "__name__", type(coordinatization).__name__)


def relevance_threshold(coordinatization, measurement: Measurement, universe: Universe) -> RelevanceProfile:
    """Tag every coordinate at every precision level and read off thresholds.

    A coordinate is Irrelevant at level p when it is uniform and independent
    within every class of the coarsening at p.  Its threshold is the largest
    level at which it is not Irrelevant (0 if none).
    """
    coord = (lambda x: x) if coordinatization is None else coordinatization
    mapped = {x: tuple(coord(x)) for x in universe.elements}
    n = len(next(iter(mapped.values())))
    all_coords = list(mapped.values())
    tags = []
    for p in measurement.precision_levels:
        fam = coarsen(measurement, p, universe)
        class_sets = {k: [mapped[x] for x in members] for k, members in fam.classes.items()}
        tags.append(tuple(classify_coordinate(i, class_sets, all_coords).tag for i in range(n)))
    thresholds = tuple(
        max(
            (p for p, level in zip(measurement.precision_levels, tags) if level[i] != Tag.IRRELEVANT),
            default=0,
        )
        for i in range(n)
    )
    return RelevanceProfile(_name_of(coordinatization), measurement.precision_levels, tuple(tags), thresholds)


# ---------------------------------------------------------------------------
# time variability


class Band(str, Enum):
    FROZEN = "Frozen"
    INFORMATIVE = "Informative"
    NOISE = "Noise"


_BAND_RANK = {Band.INFORMATIVE: 2, Band.FROZEN: 1, Band.NOISE: 0}


@dataclass(frozen=True)
class VariabilityScore:
    flip_rates: tuple[float, ...]
    bands: tuple[Band, ...]
    flips: tuple[int, ...] = field(default=())
    steps: int = 0

    def score(self, i: int) -> tuple[int, float]:
        # Informative beats frozen beats noise; slower informative bits rank higher.
        return (_BAND_RANK[self.bands[i]], -self.flip_rates[i])

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "coordinates": {
                str(i): {"flip_rate": r, "flips": f, "band": b.value}
                for i, (r, f, b) in enumerate(zip(self.flip_rates, self.flips, self.bands))
            },
        }


def count_flips(stream: Sequence[Bits], coordinatization=None) -> np.ndarray:
    coord = (lambda x: x) if coordinatization is None else coordinatization
    arr = np.array([coord(x) for x in stream], dtype=np.int8)
    return (arr[1:] != arr[:-1]).sum(axis=0)


def variability_score(stream: Sequence[Bits], coordinatization=None, noise_cutoff: float = 0.45) -> VariabilityScore:
    stream = list(stream)
    if len(stream) < 2:
        raise StreamTooShort("need at least two stream elements")
    flips = count_flips(stream, coordinatization)
    steps = len(stream) - 1
    rates = tuple(float(f) / steps for f in flips)
    bands = tuple(
        Band.FROZEN if f == 0 else Band.NOISE if r > noise_cutoff else Band.INFORMATIVE
        for f, r in zip(flips, rates)
    )
    return VariabilityScore(rates, bands, tuple(int(f) for f in flips), steps)


def read_stream(path) -> list[Bits]:
    """Read a stream file: one bit string per line, optionally after an integer timestamp."""
    rows = []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) == 2:
            rows.append((int(parts[0]), parse_bits(parts[1])))
        elif len(parts) == 1:
            rows.append((len(rows), parse_bits(parts[0])))
        else:
            raise RelevanceError(f"bad stream line: {line!r}")
    rows.sort(key=lambda r: r[0])
    return [bits for _, bits in rows]


# ---------------------------------------------------------------------------
# lossy compression


@dataclass(frozen=True)
class LossyCode:
    class_label: str
    positions: tuple[int, ...]  # kept coordinates, ascending
    bits: Bits


def _ranked(positions: Sequence[int], scores) -> list[int]:
    scorers = scores if isinstance(scores, (list, tuple)) else [scores]
    profiles = [s for s in scorers if isinstance(s, RelevanceProfile)]
    variability = [s for s in scorers if isinstance(s, VariabilityScore)]
    if not profiles and not variability:
        raise RelevanceError("need a RelevanceProfile or VariabilityScore")

    def key(i):
        k = tuple(-p.score(i) for p in profiles)
        for v in variability:
            band, neg_rate = v.score(i)
            k += (-band, -neg_rate)
        return k + (i,)

    return sorted(positions, key=key)


def lossy_compress(x: Bits, model: CompleteModel, scores, keep: int) -> LossyCode:
    """Keep the ``keep`` highest-scoring irrelevant coordinates of x's class."""
    label = classify(x, model)
    if label is OUTLIER:
        raise OutlierNotCompressible(f"{format_bits(x)} is an outlier")
    irrelevant = model.irrelevant_positions(label)
    if not 0 <= keep <= len(irrelevant):
        raise RelevanceError(f"keep must be in [0, {len(irrelevant)}]")
    kept = tuple(sorted(_ranked(irrelevant, scores)[:keep]))
    coords = model.forward(x)
    return LossyCode(label, kept, tuple(coords[i] for i in kept))


def lossy_decompress(code: LossyCode, model: CompleteModel, rng_seed=None) -> Bits:
    """Refill dropped coordinates uniformly; redraw while a dummy is hit."""
    rng = as_rng(rng_seed)
    coords = [0] * model.n_bits
    for i, v in model.relevant_values(code.class_label).items():
        coords[i] = v
    for i, v in zip(code.positions, code.bits):
        coords[i] = v
    dropped = [i for i in model.irrelevant_positions(code.class_label) if i not in code.positions]
    while True:
        for i, v in zip(dropped, rng.integers(0, 2, size=len(dropped))):
            coords[i] = int(v)
        x = model.slots[bits_to_int(coords)]
        if x is not None:
            return x
