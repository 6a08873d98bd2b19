import itertools
import math

import numpy as np
import pytest
from scipy.stats import norm

from cmodel.model import build_common_complete_model
from cmodel.space import SubsetFamily, Universe, all_bit_vectors, parse_bits
from cmodel.tasks import (
    OUTLIER,
    BadCode,
    CompressedCode,
    DummyCode,
    EmptyInput,
    OutlierNotCompressible,
    RegressionGrid,
    UnknownElement,
    classify,
    compress,
    decode,
    decode_code,
    decode_many,
    decompress,
    encode_code,
    enumerate_class,
    fit_regression,
    pack_bits,
    read_code,
    unpack_bits,
    write_code,
)

from .conftest import bitset

P = parse_bits


def test_classify_worked_examples(worked_model, worked_family):
    assert worked_model.forward(P("0110")) == (0, 1, 0, 0)
    assert classify(P("0110"), worked_model) == "C2"
    assert classify(P("0000"), worked_model) is OUTLIER
    for x in worked_family.classes["C1"]:
        assert classify(x, worked_model) == "C1"


def test_classify_matches_membership(worked_model, worked_family):
    for x in all_bit_vectors(4):
        expected = worked_family.label_of(x)
        assert classify(x, worked_model) == (OUTLIER if expected is None else expected)


def test_classify_unknown_element(worked_model):
    with pytest.raises(UnknownElement):
        classify(P("00000"), worked_model)


def test_decode_exhausts_c2(worked_model):
    seen = {decode(worked_model, "C2", seed) for seed in range(50)}
    assert seen == bitset("0110", "1111")


def test_decode_singleton_class():
    fam = SubsetFamily(Universe.full(3), {"only": bitset("101"), "rest": bitset("000", "111")})
    model = build_common_complete_model(fam)
    assert all(decode(model, "only", s) == P("101") for s in range(20))


def test_decode_uniform_over_c1(worked_model, worked_family):
    draws = decode_many(worked_model, "C1", 10_000, rng_seed=12345)
    counts = {x: draws.count(x) for x in worked_family.classes["C1"]}
    assert sum(counts.values()) == 10_000
    for c in counts.values():
        assert abs(c - 2500) <= 150


def test_decode_rejects_dummies():
    fam = SubsetFamily(Universe.full(3), {"a": bitset("000", "011", "101")})
    model = build_common_complete_model(fam)
    draws = decode_many(model, "a", 3000, rng_seed=1)
    assert set(draws) == fam.classes["a"]
    for x in fam.classes["a"]:
        assert abs(draws.count(x) - 1000) < 3 * math.sqrt(3000 * (1 / 3) * (2 / 3))


def test_decode_is_seeded(worked_model):
    assert decode_many(worked_model, "C1", 20, 5) == decode_many(worked_model, "C1", 20, 5)


def test_enumerate_class(worked_model, worked_family):
    assert set(enumerate_class(worked_model, "C3")) == bitset("0111", "1001")
    union = [x for label in worked_model.labels for x in enumerate_class(worked_model, label)]
    assert len(union) == len(set(union)) and set(union) == worked_family.union


def test_enumerate_padded_class():
    fam = SubsetFamily(Universe.full(3), {"a": bitset("000", "011", "101")})
    model = build_common_complete_model(fam)
    assert model.block("a").size == 4
    assert sorted(enumerate_class(model, "a")) == sorted(fam.classes["a"])


def test_compress_examples(worked_model):
    assert compress(P("1111"), worked_model) == CompressedCode("C2", (1,))
    assert compress(P("0010"), worked_model) == CompressedCode("C1", (0, 0))
    with pytest.raises(OutlierNotCompressible):
        compress(P("0000"), worked_model)


def test_compress_injective_per_class(worked_model, worked_family):
    for label, members in worked_family.classes.items():
        codes = [compress(x, worked_model).irrelevant_bits for x in members]
        assert len(set(codes)) == len(codes)
        assert all(len(c) == worked_model.block(label).n_irrelevant for c in codes)


def test_decompress_examples(worked_model, worked_family):
    assert decompress(CompressedCode("C1", (0, 0)), worked_model) == P("0010")
    assert decompress(CompressedCode("C2", (0,)), worked_model) == P("0110")
    for x in worked_family.union:
        assert decompress(compress(x, worked_model), worked_model) == x


def test_decompress_dummy_and_bad_length():
    fam = SubsetFamily(Universe.full(3), {"a": bitset("000", "011", "101")})
    model = build_common_complete_model(fam)
    with pytest.raises(DummyCode):
        decompress(CompressedCode("a", (1, 1)), model)
    with pytest.raises(BadCode):
        decompress(CompressedCode("a", (1,)), model)


@pytest.mark.parametrize("n", [0, 1, 7, 8, 9, 17])
def test_pack_round_trip(n):
    for bits in itertools.islice(itertools.product((0, 1), repeat=n), 64):
        data = pack_bits(bits)
        assert len(data) == (n + 7) // 8
        assert unpack_bits(data, n) == bits


def test_pack_is_msb_first():
    assert pack_bits((1, 0, 1)) == bytes([0b1010_0000])


def test_code_file_format(tmp_path):
    code = CompressedCode("C1", (1, 0, 1, 1, 0, 0, 1, 0, 1))
    data = encode_code(code)
    assert data == b"CMC1 C1 9\n" + bytes([0b1011_0010, 0b1000_0000])
    assert decode_code(data) == code
    write_code(code, tmp_path / "x.cmc")
    assert read_code(tmp_path / "x.cmc") == code
    with pytest.raises(BadCode):
        decode_code(b"CMC2 C1 9\n\x00\x00")
    with pytest.raises(BadCode):
        encode_code(CompressedCode("has space", (1,)))


# ---------------------------------------------------------------------------
# regression

XS = (0.0, 0.5, 1.0, 1.5, 2.0)
PAIRS = tuple(itertools.product((1.0, 2.0, 3.0), (0.25, 0.5, 0.75)))


def curve(a, b):
    return np.array([a * math.exp(b * x) for x in XS])


def test_regression_noiseless_recovers_pair():
    grid = RegressionGrid(PAIRS, XS, noise_sigma=0.1)
    for a, b in PAIRS:
        assert fit_regression(list(zip(XS, curve(a, b))), grid) == (a, b)


def test_regression_small_perturbation_keeps_curve():
    grid = RegressionGrid(PAIRS, XS, noise_sigma=0.1)
    gap = min(np.linalg.norm(curve(*p) - curve(*q)) for p, q in itertools.combinations(PAIRS, 2))
    rng = np.random.default_rng(3)
    for a, b in PAIRS:
        eps = rng.normal(size=len(XS))
        eps *= 0.45 * gap / np.linalg.norm(eps)
        assert fit_regression(list(zip(XS, curve(a, b) + eps)), grid) == (a, b)


def test_regression_outlier_floor():
    grid = RegressionGrid(PAIRS, XS, noise_sigma=0.1)
    floor = -50.0
    best = max(norm.logpdf(np.zeros(len(XS)), curve(a, b), 0.1).sum() for a, b in PAIRS)
    assert best < floor
    assert fit_regression([(x, 0.0) for x in XS], grid, floor=floor) is OUTLIER
    assert fit_regression([(x, 0.0) for x in XS], grid) == (1.0, 0.25)


def test_regression_errors():
    grid = RegressionGrid(PAIRS, XS, noise_sigma=0.1)
    with pytest.raises(EmptyInput):
        fit_regression([], grid)
    with pytest.raises(EmptyInput):
        RegressionGrid((), XS, 0.1)
