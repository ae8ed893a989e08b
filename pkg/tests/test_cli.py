import json

import numpy as np
import pytest
from PIL import Image

from conftest import SMALL_DIMS
from palette_forge.cli import main
from palette_forge.histogram import HsvHistogram, entropy_bits, load_histogram, write_phst


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    out = json.loads(captured.out) if captured.out.strip() else None
    err = json.loads(captured.err) if captured.err.strip() else None
    return rc, out, err


def _write_png(path, rgb):
    Image.fromarray((np.asarray(rgb) * 255.0 + 0.5).astype(np.uint8)).save(path)
    return str(path)


def _solid(r, g, b, side=16):
    return np.full((side, side, 3), (r, g, b), dtype=np.float64)


def _sparse_phst(path, bins):
    hist = HsvHistogram.from_sparse(bins, SMALL_DIMS)
    write_phst(hist, path)
    return str(path)


def _palette_json(path, colors):
    path.write_text(json.dumps({"colors": colors}))
    return str(path)


# ---------------------------------------------------------------------------
# Parser-level behavior


def test_version_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "palette-forge 0.1.0" in capsys.readouterr().out


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["dist"])  # missing operands
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_data_errors_exit_one(tmp_path, capsys):
    rc, out, err = run(capsys, "decode", str(tmp_path / "missing.pcnd"))
    assert rc == 1
    assert out is None
    assert "error" in err


# ---------------------------------------------------------------------------
# hist / entropy / dist / oracle


def test_hist_writes_binary_histogram(tmp_path, capsys):
    img = _write_png(tmp_path / "red.png", _solid(1, 0, 0))
    out = tmp_path / "red.phst"
    rc, doc, _ = run(capsys, "hist", img, "-o", str(out))
    assert rc == 0
    assert doc["output"] == str(out)
    assert doc["nonzero_bins"] == 1
    assert doc["entropy_bits"] == 0.0
    hist = load_histogram(out)
    assert hist.mass.sum() == pytest.approx(1.0)


def test_hist_writes_json_histogram(tmp_path, capsys):
    img = _write_png(tmp_path / "b.png", _solid(0, 0, 1))
    out = tmp_path / "b.json"
    rc, doc, _ = run(capsys, "hist", img, "-o", str(out))
    assert rc == 0
    assert "bins" in json.loads(out.read_text())


def test_entropy_of_histogram_file(tmp_path, capsys):
    path = _sparse_phst(tmp_path / "h.phst", {0: 0.5, 3: 0.25, 9: 0.25})
    rc, doc, _ = run(capsys, "entropy", path)
    assert rc == 0
    assert doc["entropy_bits"] == pytest.approx(1.5, abs=1e-6)


def test_dist_emd_between_histogram_files(tmp_path, capsys):
    a = _sparse_phst(tmp_path / "a.phst", {0: 1.0})
    b = _sparse_phst(tmp_path / "b.phst", {0: 1.0})
    rc, doc, _ = run(capsys, "dist", a, b)
    assert rc == 0
    assert doc == {"distance": 0.0, "metric": "emd"}


def test_dist_emd_matches_oracle(tmp_path, capsys):
    rng = np.random.default_rng(3)
    mass = rng.random(4)
    mass /= mass.sum()
    a = _sparse_phst(tmp_path / "a.phst", {i: m for i, m in enumerate(mass)})
    b = _sparse_phst(tmp_path / "b.phst", {i + 30: m for i, m in enumerate(mass)})
    rc, doc, _ = run(capsys, "dist", a, b)
    rc2, doc2, _ = run(capsys, "oracle", a, b)
    assert rc == rc2 == 0
    assert doc["distance"] == pytest.approx(doc2["distance"], abs=1e-8)
    assert doc2["metric"] == "emd-oracle"


def test_dist_qc_is_symmetric(tmp_path, capsys):
    a = _sparse_phst(tmp_path / "a.phst", {0: 0.7, 5: 0.3})
    b = _sparse_phst(tmp_path / "b.phst", {2: 0.4, 11: 0.6})
    _, fwd, _ = run(capsys, "dist", a, b, "--metric", "qc")
    _, bwd, _ = run(capsys, "dist", b, a, "--metric", "qc")
    assert fwd["distance"] == bwd["distance"]
    assert fwd["distance"] > 0.0


def test_dist_accepts_palette_and_image_operands(tmp_path, capsys):
    img = _write_png(tmp_path / "red.png", _solid(1, 0, 0))
    pal = _palette_json(tmp_path / "pal.json", ["#FF0000"])
    rc, doc, _ = run(capsys, "dist", img, pal)
    assert rc == 0
    assert doc["distance"] == 0.0


def test_dist_rejects_mismatched_dims(tmp_path, capsys):
    img = _write_png(tmp_path / "x.png", _solid(0, 1, 0))
    small = _sparse_phst(tmp_path / "s.phst", {0: 1.0})
    rc, _, err = run(capsys, "dist", img, small)
    assert rc == 1
    assert "error" in err


# ---------------------------------------------------------------------------
# extract


def test_extract_median_cut_solid_color(tmp_path, capsys):
    img = _write_png(tmp_path / "teal.png", _solid(0, 0.5, 0.5))
    rc, doc, _ = run(capsys, "extract", img, "-k", "3")
    assert rc == 0
    assert doc["colors"] == ["#008080"]  # one distinct color, one swatch


def test_extract_kmeans_with_output(tmp_path, capsys):
    img = tmp_path / "mix.png"
    pixels = _solid(1, 0, 0)
    pixels[8:] = (0.0, 0.0, 1.0)
    _write_png(img, pixels)
    out = tmp_path / "pal.json"
    rc, doc, _ = run(
        capsys, "extract", str(img), "--method", "kmeans", "-k", "2",
        "--seed", "7", "-o", str(out),
    )
    assert rc == 0
    assert doc["output"] == str(out)
    saved = json.loads(out.read_text())
    assert sorted(saved["colors"]) == ["#0000FF", "#FF0000"]


# ---------------------------------------------------------------------------
# encode / decode


def test_encode_decode_histogram_condition(tmp_path, capsys):
    img = _write_png(tmp_path / "red.png", _solid(1, 0, 0))
    out = tmp_path / "c.pcnd"
    rc, doc, _ = run(capsys, "encode", img, "-o", str(out), "--aug", "histogram")
    assert rc == 0
    assert doc["aug_type"] == "histogram"
    assert doc["text_present"] is True
    assert doc["distance"] == 0.0
    rc, dec, _ = run(capsys, "decode", str(out))
    assert rc == 0
    assert dec["aug_type"] == "histogram"
    assert dec["nonzero_bins"] == 1


def test_encode_palette_condition_with_explicit_palette(tmp_path, capsys):
    img = _write_png(tmp_path / "red.png", _solid(1, 0, 0))
    pal = _palette_json(tmp_path / "pal.json", ["#FF0000"])
    out = tmp_path / "c.pcnd"
    rc, doc, _ = run(
        capsys, "encode", img, "-o", str(out), "--aug", "palette",
        "--palette", pal, "--no-text",
    )
    assert rc == 0
    assert doc["aug_type"] == "palette"
    assert doc["text_present"] is False
    assert doc["distance"] == 0.0  # the palette is exactly the image color


def test_encode_palette_condition_falls_back_to_median_cut(tmp_path, capsys):
    img = _write_png(tmp_path / "g.png", _solid(0, 1, 0))
    out = tmp_path / "c.pcnd"
    rc, doc, _ = run(capsys, "encode", img, "-o", str(out), "--aug", "palette")
    assert rc == 0
    assert doc["distance"] == 0.0


def test_encode_none_condition_drops_everything(tmp_path, capsys):
    img = _write_png(tmp_path / "g.png", _solid(0, 1, 0))
    out = tmp_path / "c.pcnd"
    rc, doc, _ = run(capsys, "encode", img, "-o", str(out), "--aug", "none")
    assert rc == 0
    assert doc["entropy"] == 0.0
    _, dec, _ = run(capsys, "decode", str(out))
    assert dec["nonzero_bins"] == 0


def test_encode_sampled_is_reproducible(tmp_path, capsys):
    img = _write_png(tmp_path / "g.png", _solid(0, 1, 0))
    rc, first, _ = run(capsys, "encode", img, "-o", str(tmp_path / "a.pcnd"), "--seed", "0")
    rc2, second, _ = run(capsys, "encode", img, "-o", str(tmp_path / "b.pcnd"), "--seed", "0")
    assert rc == rc2 == 0
    assert first["aug_type"] == second["aug_type"] == "palette"
    assert first["entropy"] == second["entropy"] == 0.0  # seed 0 also drops entropy
    assert (tmp_path / "a.pcnd").read_bytes() == (tmp_path / "b.pcnd").read_bytes()


def test_encode_drop_entropy_flag(tmp_path, capsys):
    img = _write_png(tmp_path / "g.png", _solid(0, 1, 0))
    out = tmp_path / "c.pcnd"
    _, doc, _ = run(capsys, "encode", img, "-o", str(out), "--aug", "histogram",
                    "--drop-entropy")
    assert doc["entropy"] == 0.0


# ---------------------------------------------------------------------------
# scan-corpus / select-rare


def _make_corpus(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    rng = np.random.default_rng(5)
    for i in range(6):
        _write_png(corpus / f"common_{i}.png", _solid(0.9, 0.1, 0.1, side=8))
    rare = np.full((8, 8, 3), (0.9, 0.1, 0.1))
    rare[:4] = (0.05, 0.95, 0.45)
    _write_png(corpus / "rare.png", rare)
    (corpus / "notes.txt").write_text("not an image")
    return corpus


def test_scan_corpus_and_select_rare(tmp_path, capsys):
    corpus = _make_corpus(tmp_path)
    stats_path = tmp_path / "stats.json"
    rc, doc, _ = run(capsys, "scan-corpus", str(corpus), "-o", str(stats_path), "--top", "2")
    assert rc == 0
    assert doc["image_count"] == 7
    assert doc["skipped"] == []  # the text file is filtered by suffix, not decoded
    assert len(doc["top_bins"]) == 2
    assert doc["top_share"] > 0.9

    # 510 of the 512 bins are empty and sort ahead of the sparsely used one,
    # so the rare set must span all but the dominant bin to capture it
    rc, sel, _ = run(
        capsys, "select-rare", str(corpus), "--stats", str(stats_path),
        "--count", "511", "--min-fraction", "0.25",
    )
    assert rc == 0
    assert sel["selected"] == [str(corpus / "rare.png")]
    assert sel["fractions"][str(corpus / "rare.png")] == pytest.approx(0.5)


def test_scan_corpus_thread_count_invariance(tmp_path, capsys):
    corpus = _make_corpus(tmp_path)
    out1 = tmp_path / "s1.json"
    out4 = tmp_path / "s4.json"
    rc1, doc1, _ = run(capsys, "scan-corpus", str(corpus), "-o", str(out1))
    rc4, doc4, _ = run(capsys, "--threads", "4", "scan-corpus", str(corpus), "-o", str(out4))
    assert rc1 == rc4 == 0
    assert out1.read_text() == out4.read_text()
    assert doc1["top_bins"] == doc4["top_bins"]


# ---------------------------------------------------------------------------
# eval / align-2d / ablate-report


def test_eval_end_to_end(tmp_path, capsys):
    refs = tmp_path / "refs"
    gen = tmp_path / "gen"
    refs.mkdir()
    gen.mkdir()
    _write_png(refs / "red.png", _solid(1, 0, 0))
    _write_png(gen / "red.png", _solid(1, 0, 0))
    cases = tmp_path / "cases.jsonl"
    cases.write_text(
        json.dumps(
            {
                "image": str(refs / "red.png"),
                "caption": "a red square",
                "palette": {"colors": ["#FF0000"]},
            }
        )
        + "\n"
        + json.dumps({"image": str(refs / "skip.png"), "caption": "no mention"})
        + "\n"
    )
    rc, doc, _ = run(capsys, "eval", "--cases", str(cases), "--generated", str(gen))
    assert rc == 0
    assert doc["case_count"] == 1
    assert doc["cases_total"] == 2
    assert doc["cases_filtered_out"] == 1
    assert doc["mean_distance"] == 0.0
    assert doc["failed"] == []


def test_align_2d_checkerboard(tmp_path, capsys):
    img = np.empty((16, 16, 3))
    for i in range(8):
        for j in range(8):
            color = (1.0, 0.0, 0.0) if (i + j) % 2 == 0 else (0.0, 0.0, 1.0)
            img[i * 2 : i * 2 + 2, j * 2 : j * 2 + 2] = color
    path = _write_png(tmp_path / "board.png", img)
    pal = _palette_json(tmp_path / "pal.json", ["#FF0000", "#0000FF"])
    out = tmp_path / "layout.png"
    rc, doc, _ = run(capsys, "align-2d", path, "--palette", pal, "-o", str(out),
                     "--size", "16")
    assert rc == 0
    expected = [[(i + j) % 2 for j in range(8)] for i in range(8)]
    assert doc["grid"] == expected
    rendered = np.asarray(Image.open(out).convert("RGB"))
    assert rendered.shape == (16, 16, 3)
    assert {tuple(px) for px in rendered.reshape(-1, 3)} == {(255, 0, 0), (0, 0, 255)}


def test_ablate_report(tmp_path, capsys):
    rows = tmp_path / "rows.jsonl"
    rows.write_text(
        json.dumps({"name": "full", "mean_distance": 0.12, "std_distance": 0.05})
        + "\n"
        + json.dumps({"name": "bare", "mean_distance": 0.19, "std_distance": 0.04})
        + "\n"
    )
    rc, doc, _ = run(capsys, "ablate-report", str(rows))
    assert rc == 0
    assert doc["best"] == "full"
    assert [r["name"] for r in doc["rows"]] == ["full", "bare"]

    bad = tmp_path / "bad.jsonl"
    bad.write_text(json.dumps({"name": "x"}) + "\n")
    rc, _, err = run(capsys, "ablate-report", str(bad))
    assert rc == 1
    assert "error" in err


# ---------------------------------------------------------------------------
# configuration


def test_config_file_changes_defaults(tmp_path, capsys):
    img = tmp_path / "mix.png"
    pixels = _solid(1, 0, 0)
    pixels[8:] = (0.0, 0.0, 1.0)
    _write_png(img, pixels)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"palette_size": 1}))
    rc, doc, _ = run(capsys, "--config", str(cfg), "extract", str(img))
    assert rc == 0
    assert len(doc["colors"]) == 1


def test_config_env_var_and_flag_precedence(tmp_path, capsys, monkeypatch):
    img = tmp_path / "mix.png"
    pixels = _solid(1, 0, 0)
    pixels[8:] = (0.0, 0.0, 1.0)
    _write_png(img, pixels)
    env_cfg = tmp_path / "env.json"
    env_cfg.write_text(json.dumps({"palette_size": 1}))
    flag_cfg = tmp_path / "flag.json"
    flag_cfg.write_text(json.dumps({"palette_size": 2}))
    monkeypatch.setenv("PALETTE_FORGE_CONFIG", str(env_cfg))

    rc, doc, _ = run(capsys, "extract", str(img))
    assert rc == 0
    assert len(doc["colors"]) == 1  # env config applies

    rc, doc, _ = run(capsys, "--config", str(flag_cfg), "extract", str(img))
    assert rc == 0
    assert len(doc["colors"]) == 2  # explicit flag wins over the env var


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"not_a_setting": 1}))
    img = _write_png(tmp_path / "r.png", _solid(1, 0, 0))
    rc, _, err = run(capsys, "--config", str(cfg), "entropy", img)
    assert rc == 1
    assert "not_a_setting" in err["error"]


def test_pretty_output_is_indented(tmp_path, capsys):
    path = _sparse_phst(tmp_path / "h.phst", {0: 1.0})
    rc = main(["--pretty", "entropy", str(path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.startswith("{\n")
