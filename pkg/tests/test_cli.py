import json

import pytest

from cmodel.cli import derive_rng, main

SUBSETS = {
    "n_bits": 4,
    "classes": {
        "C1": ["0010", "0101", "1000", "1100"],
        "C2": ["0110", "1111"],
        "C3": ["0111", "1001"],
    },
}


@pytest.fixture
def files(tmp_path):
    sub = tmp_path / "subsets.json"
    sub.write_text(json.dumps(SUBSETS))
    model = tmp_path / "model.json"
    assert main(["build", "--subsets", str(sub), "--output", str(model), "--no-pad"]) == 0
    return tmp_path, sub, model


def test_build_mapping_order(files):
    _, _, model = files
    data = json.loads(model.read_text())
    assert data["mapping"][:4] == ["0010", "0101", "1000", "1100"]


def test_classify_prints_class(files, capsys):
    tmp, _, model = files
    capsys.readouterr()
    out = tmp / "c.json"
    assert main(["classify", "--model", str(model), "--element", "0110", "--output", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "C2"
    assert json.loads(out.read_text())["class"] == "C2"
    main(["classify", "--model", str(model), "--element", "0000"])
    assert capsys.readouterr().out.strip() == "Outlier"


def test_count_bits(capsys, tmp_path):
    assert main(["count-bits", "square", "256"]) == 0
    assert capsys.readouterr().out.strip() == "24"
    out = tmp_path / "r.json"
    assert main(["count-bits", "rects", "100", "--n-rects", "10", "--color-depth", "24", "--output", str(out)]) == 0
    data = json.loads(out.read_text())
    assert (data["irrelevant"], data["total"]) == (486, 240000)
    assert data["version"].startswith("cmodel ")


def test_verify(files, capsys):
    tmp, sub, model = files
    assert main(["verify", "--model", str(model), "--subsets", str(sub), "--output", str(tmp / "v.json")]) == 0
    assert json.loads((tmp / "v.json").read_text())["passed"] is True


def test_compress_round_trip(files, capsys):
    tmp, _, model = files
    code = tmp / "x.cmc"
    assert main(["compress", "--model", str(model), "--element", "1111", "--output", str(code)]) == 0
    assert code.read_bytes() == b"CMC1 C2 1\n\x80"
    capsys.readouterr()
    assert main(["decompress", "--model", str(model), "--code", str(code)]) == 0
    assert capsys.readouterr().out.strip() == "1111"


def test_decode_reproducible(files, capsys):
    tmp, _, model = files
    outs = []
    for name in ("a.json", "b.json"):
        assert main(["decode", "--model", str(model), "--class", "C1", "--count", "20", "--output", str(tmp / name)]) == 0
        outs.append((tmp / name).read_bytes())
    assert outs[0] == outs[1]
    assert set(json.loads(outs[0])["elements"]) <= set(SUBSETS["classes"]["C1"])


def test_domain_error_exit_one_no_output(files, capsys):
    tmp, _, model = files
    capsys.readouterr()
    out = tmp / "never.cmc"
    assert main(["compress", "--model", str(model), "--element", "0000", "--output", str(out)]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("error [tasks]:") and "\n" not in err
    assert not out.exists()
    assert [p.name for p in tmp.iterdir() if p.name.startswith(".")] == []


def test_missing_file_exit_one(tmp_path, capsys):
    assert main(["classify", "--model", str(tmp_path / "nope.json"), "--element", "0"]) == 1


def test_usage_error_exit_two():
    with pytest.raises(SystemExit) as e:
        main(["classify", "--model"])
    assert e.value.code == 2


def test_rgflow_csv(tmp_path, capsys):
    spec = tmp_path / "flow.json"
    spec.write_text(json.dumps({"matrix": [[-1, 0], [0, 1]], "g0": [1, 1], "k0": 1, "k1": 0.5, "steps": 4}))
    out = tmp_path / "t.csv"
    assert main(["rgflow", "--spec", str(spec), "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# cmodel")
    assert lines[1] == "k,g_1,g_2,h_1,h_2"
    assert len(lines) == 2 + 5
    assert "Relevant" in capsys.readouterr().out

    spec.write_text(json.dumps({"matrix": [[-1, 0], [0, 1]], "k_dependence": "power:1", "g0": [1, 1], "k0": 1, "k1": 0.5, "steps": 4}))
    assert main(["rgflow", "--spec", str(spec), "--output", str(out)]) == 0


def test_gen_ising_deterministic(tmp_path):
    spec = tmp_path / "ising.json"
    spec.write_text(json.dumps({"side": 3, "beta": 0.4, "sweeps": 5, "count": 3}))
    for d in ("a", "b"):
        assert main(["gen-ising", "--spec", str(spec), "--output-dir", str(tmp_path / d), "--seed", "9"]) == 0
    for name in ("samples.txt", "manifest.json", "ising_0000.pbm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["boundary"] == "open" and len(manifest["samples"]) == 3


def test_gen_geometry(tmp_path):
    spec = tmp_path / "g.json"
    spec.write_text(json.dumps({"side": 3, "shapes": [{"x": 1, "y": 1, "edge": 1}]}))
    assert main(["gen-geometry", "--spec", str(spec), "--output-dir", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "bits.txt").read_text() == "000010000\n"
    spec.write_text(json.dumps({"side": 2, "depth": 3, "shapes": [{"x": [0, 0], "y": [0, 1], "color": [1, 0, 1]}]}))
    assert main(["gen-geometry", "--spec", str(spec), "--output-dir", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "image.ppm").exists()


def test_relevance_and_variability(tmp_path, files, capsys):
    _, _, model = files
    spec = tmp_path / "rel.json"
    spec.write_text(json.dumps({"n_bits": 4, "measurement": "unit_interval", "levels": [4, 3, 2, 1, 0]}))
    out = tmp_path / "rel_out.json"
    assert main(["relevance", "--spec", str(spec), "--output", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["coordinatization"] == "identity"
    assert data["coordinates"]["0"]["tags"]["0"] == "Irrelevant"
    assert main(["relevance", "--spec", str(spec), "--model", str(model)]) == 0

    stream = tmp_path / "s.txt"
    stream.write_text("0 0000\n1 0010\n2 0000\n3 0010\n")
    out = tmp_path / "var.json"
    assert main(["variability", "--stream", str(stream), "--output", str(out)]) == 0
    assert json.loads(out.read_text())["coordinates"]["2"]["flip_rate"] == 1.0
    assert main(["variability", "--stream", str(stream), "--model", str(model)]) == 0


def test_derive_rng_sites_independent():
    a = derive_rng(1, "decode").integers(0, 1 << 30, 4)
    b = derive_rng(1, "decode").integers(0, 1 << 30, 4)
    c = derive_rng(1, "gen-ising/0").integers(0, 1 << 30, 4)
    assert list(a) == list(b) and list(a) != list(c)
