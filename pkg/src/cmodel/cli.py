"""Command-line front end.

Every verb prints a short human-readable summary on stdout and, with
``--output``, writes a machine-readable artifact.  Exit status is 0 on
success, 1 on a domain or input error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import zlib
from pathlib import Path

import numpy as np

from . import __version__
from .corpora import (
    BOUNDARY,
    GeomSpec,
    IsingSpec,
    Rect,
    ising_sample,
    rect_corpus_bits,
    rect_corpus_naive_bits,
    render_geometry,
    square,
    square_corpus_bits,
    square_corpus_exact_bits,
    to_pbm,
    to_ppm,
)
from .errors import CModelError
from .model import build_common_complete_model, dumps_model, load_model, verify_complete_model
from .relevance import Measurement, read_stream, relevance_threshold, variability_score
from .rgflow import BetaMatrix, CouplingVector, classify_couplings, trajectory
from .space import Universe, bits_to_unit_interval, format_bits, load_family, parse_bits
from .tasks import OUTLIER, compress, decode, decode_code, decompress, encode_code, classify

DEFAULT_SEED = 20240601


def derive_rng(seed: int, site: str) -> np.random.Generator:
    """Independent generator for one named draw site under a base seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(zlib.crc32(site.encode()),))
    return np.random.default_rng(ss)


def atomic_write(path: str | Path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data.encode() if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps({"version": f"cmodel {__version__}", **obj}, indent=1) + "\n"


def _emit(args, result: dict) -> None:
    if getattr(args, "output", None):
        atomic_write(args.output, _json(result))


# ---------------------------------------------------------------------------
# verbs


def cmd_build(args):
    family = load_family(args.subsets)
    model = build_common_complete_model(family, pad=not args.no_pad)
    atomic_write(args.output, dumps_model(model))
    print(f"model: {model.n_bits} bits, classes {', '.join(model.labels)}")
    for i, cc in enumerate(model.coordinate_classes):
        print(f"  bit {i}: {cc.tag.value}")


def cmd_verify(args):
    model = load_model(args.model)
    report = verify_complete_model(model, load_family(args.subsets))
    _emit(args, report.to_json())
    print(f"{'PASS' if report.passed else 'FAIL'}: {report.checks} checks, {len(report.failures)} failures")
    for f in report.failures:
        print(f"  {f}")
    return 0 if report.passed else 1


def cmd_classify(args):
    model = load_model(args.model)
    label = classify(parse_bits(args.element), model)
    result = {"element": args.element, "class": None if label is OUTLIER else label, "outlier": label is OUTLIER}
    _emit(args, result)
    print(label)


def cmd_decode(args):
    model = load_model(args.model)
    rng = derive_rng(args.seed, "decode")
    draws = [format_bits(decode(model, args.class_label, rng)) for _ in range(args.count)]
    _emit(args, {"class": args.class_label, "seed": args.seed, "elements": draws})
    print("\n".join(draws))


def cmd_compress(args):
    model = load_model(args.model)
    code = compress(parse_bits(args.element), model)
    atomic_write(args.output, encode_code(code))
    print(f"{code.class_label} {format_bits(code.irrelevant_bits)} ({len(code)} bits)")


def cmd_decompress(args):
    model = load_model(args.model)
    x = format_bits(decompress(decode_code(Path(args.code).read_bytes()), model))
    _emit(args, {"element": x})
    print(x)


MEASUREMENTS = {
    "unit_interval": lambda x: bits_to_unit_interval(x),
    "popcount": lambda x: sum(x),
    "constant": lambda x: 0,
}


def _measurement(name: str):
    if name.startswith("bit:"):
        i = int(name[4:])
        return lambda x: x[i]
    if name not in MEASUREMENTS:
        raise CModelError(f"unknown measurement {name!r}")
    return MEASUREMENTS[name]


def cmd_relevance(args):
    spec = json.loads(Path(args.spec).read_text())
    if args.model:
        model = load_model(args.model)
        universe = Universe(len(next(iter(model.elements))), model.elements)
        coordinatization = model
    else:
        universe = Universe.full(int(spec["n_bits"]))
        coordinatization = None
    m = Measurement(spec["measurement"], _measurement(spec["measurement"]), tuple(spec["levels"]))
    profile = relevance_threshold(coordinatization, m, universe)
    _emit(args, profile.to_json())
    print(f"coordinatization: {profile.coordinatization}")
    for i, t in enumerate(profile.thresholds):
        print(f"  bit {i}: threshold {t}")


def cmd_variability(args):
    stream = read_stream(args.stream)
    coord = load_model(args.model) if args.model else None
    score = variability_score(stream, coord, noise_cutoff=args.noise_cutoff)
    _emit(args, score.to_json())
    for i, (r, b) in enumerate(zip(score.flip_rates, score.bands)):
        print(f"  bit {i}: flip rate {r:.4f} {b.value}")


def cmd_rgflow(args):
    spec = json.loads(Path(args.spec).read_text())
    matrix = np.asarray(spec["matrix"], dtype=float)
    dep = spec.get("k_dependence", "const")
    if dep == "const":
        beta = BetaMatrix(matrix)
    elif dep.startswith("power:"):
        beta = BetaMatrix.power(matrix, float(dep[6:]))
    else:
        raise CModelError(f"unknown k_dependence {dep!r}")
    g0 = CouplingVector(spec["g0"], float(spec["k0"]))
    ks, gs, hs, es = trajectory(g0, beta, float(spec["k1"]), int(spec["steps"]))
    n = len(g0.g)
    buf = io.StringIO()
    buf.write(f"# cmodel {__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k"] + [f"g_{a + 1}" for a in range(n)] + [f"h_{a + 1}" for a in range(n)])
    for k, g, h in zip(ks, gs, hs):
        w.writerow([repr(float(k))] + [repr(float(v)) for v in g] + [repr(float(v)) for v in h])
    atomic_write(args.output, buf.getvalue())
    for lam, tag in zip(es.eigenvalues, classify_couplings(es)):
        print(f"  lambda = {lam:+.6g}: {tag.value}")


def cmd_gen_ising(args):
    spec = json.loads(Path(args.spec).read_text())
    ising = IsingSpec(int(spec["side"]), float(spec["beta"]), float(spec.get("j_pair", 1.0)), float(spec.get("h_field", 0.0)))
    sweeps, count = int(spec.get("sweeps", 100)), int(spec.get("count", 1))
    out = Path(args.output_dir)
    files, samples, manifest = {}, [], []
    for i in range(count):
        img = ising_sample(ising, derive_rng(args.seed, f"gen-ising/{i}"), sweeps)
        samples.append(format_bits(img))
        files[f"ising_{i:04d}.pbm"] = to_pbm(img, ising.side)
        manifest.append({"file": f"ising_{i:04d}.pbm", "seed": args.seed, "stream": i, "sweeps": sweeps})
    files["samples.txt"] = "".join(s + "\n" for s in samples)
    files["manifest.json"] = _json(
        {"spec": {**ising.__dict__}, "boundary": BOUNDARY, "samples": manifest}
    )
    for name, data in files.items():
        atomic_write(out / name, data)
    print(f"wrote {count} Ising samples to {out}")


def _shapes(spec):
    depth = int(spec.get("depth", 1))
    default = tuple([1] * depth)
    shapes = []
    for s in spec.get("shapes", []):
        color = tuple(s.get("color", default))
        if "edge" in s:
            shapes.append(square(int(s["x"]), int(s["y"]), int(s["edge"]), color))
        else:
            shapes.append(Rect(tuple(s["x"]), tuple(s["y"]), color))
    return GeomSpec(int(spec["side"]), tuple(shapes), depth, int(spec.get("background", 0)))


def cmd_gen_geometry(args):
    geom = _shapes(json.loads(Path(args.spec).read_text()))
    bits = render_geometry(geom)
    out = Path(args.output_dir)
    image = "image.pbm" if geom.depth == 1 else "image.ppm"
    text = to_pbm(bits, geom.side) if geom.depth == 1 else to_ppm(bits, geom.side, geom.depth)
    files = {
        image: text,
        "bits.txt": format_bits(bits) + "\n",
        "manifest.json": _json({"side": geom.side, "depth": geom.depth, "shapes": len(geom.shapes), "file": image}),
    }
    for name, data in files.items():
        atomic_write(out / name, data)
    print(f"wrote {image} ({geom.side}x{geom.side}, depth {geom.depth}) to {out}")


def cmd_count_bits(args):
    if args.kind == "square":
        irrelevant = square_corpus_bits(args.side)
        total = args.side * args.side
        result = {
            "kind": "square",
            "side": args.side,
            "irrelevant": irrelevant,
            "total": total,
            "relevant": total - irrelevant,
            "exact_irrelevant": square_corpus_exact_bits(args.side),
        }
    else:
        counts = rect_corpus_bits(args.side, args.n_rects, args.color_depth)
        result = {
            "kind": "rects",
            "side": args.side,
            "n_rects": args.n_rects,
            "color_depth": args.color_depth,
            "irrelevant": counts.irrelevant,
            "total": counts.total,
            "relevant": counts.relevant,
            "naive_irrelevant": rect_corpus_naive_bits(args.side, args.n_rects, args.color_depth),
        }
    _emit(args, result)
    print(result["irrelevant"])


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmodel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cmodel {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def verb(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = verb("build", cmd_build, "build a common complete model from a subsets file")
    sp.add_argument("--subsets", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--no-pad", action="store_true", help="require power-of-two sizes instead of padding")

    sp = verb("verify", cmd_verify, "verify a model against its subsets")
    sp.add_argument("--model", required=True)
    sp.add_argument("--subsets", required=True)
    sp.add_argument("--output")

    sp = verb("classify", cmd_classify, "classify one element")
    sp.add_argument("--model", required=True)
    sp.add_argument("--element", required=True)
    sp.add_argument("--output")

    sp = verb("decode", cmd_decode, "draw random members of a class")
    sp.add_argument("--model", required=True)
    sp.add_argument("--class", dest="class_label", required=True)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--output")

    sp = verb("compress", cmd_compress, "compress an element to its irrelevant bits")
    sp.add_argument("--model", required=True)
    sp.add_argument("--element", required=True)
    sp.add_argument("--output", required=True)

    sp = verb("decompress", cmd_decompress, "restore an element from a code file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--code", required=True)
    sp.add_argument("--output")

    sp = verb("relevance", cmd_relevance, "precision-sweep relevance thresholds")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--model", help="use this model's coordinates instead of the identity")
    sp.add_argument("--output")

    sp = verb("variability", cmd_variability, "per-coordinate flip rates of a stream")
    sp.add_argument("--stream", required=True)
    sp.add_argument("--model")
    sp.add_argument("--noise-cutoff", type=float, default=0.45)
    sp.add_argument("--output")

    sp = verb("rgflow", cmd_rgflow, "integrate a linear coupling flow to a CSV trajectory")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--output", required=True)

    sp = verb("gen-ising", cmd_gen_ising, "sample Ising images")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--output-dir", required=True)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = verb("gen-geometry", cmd_gen_geometry, "render rectangles to an image")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--output-dir", required=True)

    sp = verb("count-bits", cmd_count_bits, "irrelevant/relevant bit counts of geometric corpora")
    sp.add_argument("kind", choices=["square", "rects"])
    sp.add_argument("side", type=int)
    sp.add_argument("--n-rects", type=int, default=10)
    sp.add_argument("--color-depth", type=int, default=24)
    sp.add_argument("--output")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args) or 0
    except CModelError as e:
        print(f"error [{e.module}]: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, TypeError) as e:
        print(f"error [cli]: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
