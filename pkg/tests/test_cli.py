import csv
import json
import math

import numpy as np
import pytest
from PIL import Image

from lapjitter import sidecar as sc
from lapjitter.cli import main
from lapjitter.jitter import MeasurementErrorModel, SinusoidSet, cdsm_average, subdivision_curves
from lapjitter.scenes import write_corpus

TAU = 3.54e-5
NOISELESS = "measurement:\n  relative_bound: 0.0\n"


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli_corpus")
    write_corpus(d, 3, 96, 128, seed=4)
    return d


@pytest.fixture(scope="module")
def small_cfg(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "small.yaml"
    path.write_text("crop:\n  width: 128\n  height: 96\nmaster_seed: 11\n")
    return path


def cfg_file(tmp_path, text, name="c.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ------------------------------------------------------------- synth

def test_synth_and_determinism(small_corpus, small_cfg, tmp_path):
    for out in ("a", "b"):
        assert main(["synth", "--input", str(small_corpus), "--output", str(tmp_path / out),
                     "--config", str(small_cfg)]) == 0
    a = (tmp_path / "a" / "manifest.json").read_bytes()
    assert a == (tmp_path / "b" / "manifest.json").read_bytes()
    assert len(json.loads(a)["entries"]) == 3


def test_synth_seed_override_changes_output(small_corpus, small_cfg, tmp_path):
    main(["synth", "--input", str(small_corpus), "--output", str(tmp_path / "a"), "--config", str(small_cfg)])
    main(["synth", "--input", str(small_corpus), "--output", str(tmp_path / "b"), "--config", str(small_cfg),
          "--seed", "12"])
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert mb["config"]["master_seed"] == 12
    assert ma["entries"][0]["seed"] != mb["entries"][0]["seed"]


def test_bad_config_exit_2(small_corpus, tmp_path, capsys):
    bad = cfg_file(tmp_path, "M: 6\ntau_s: -1.0\n")
    assert main(["synth", "--input", str(small_corpus), "--output", str(tmp_path / "o"),
                 "--config", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()
    assert main(["synth", "--input", str(small_corpus), "--output", str(tmp_path / "o"),
                 "--config", str(tmp_path / "absent.yaml")]) == 2


def test_missing_input_exit_3_without_output(tmp_path):
    assert main(["synth", "--input", str(tmp_path / "none"), "--output", str(tmp_path / "o")]) == 3
    assert not (tmp_path / "o").exists()


def test_empty_corpus_exit_3(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["synth", "--input", str(tmp_path / "empty"), "--output", str(tmp_path / "o")]) == 3


# ------------------------------------------------------------- degrade-one

def test_degrade_one_is_idempotent(small_corpus, small_cfg, tmp_path):
    src = sorted(small_corpus.iterdir())[0]
    for out in ("a", "b"):
        assert main(["degrade-one", "--input", str(src), "--output", str(tmp_path / out),
                     "--config", str(small_cfg), "--index", "2"]) == 0
    for name in ("degraded.png", "sidecar.lapj", "params.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    side = sc.read_sidecar(tmp_path / "a" / "sidecar.lapj")
    assert side.roll.shape == (6, 128) and side.height == 96
    assert main(["degrade-one", "--input", str(tmp_path / "x.png"), "--output", str(tmp_path / "c")]) == 3


# ------------------------------------------------------------- precorrect / eval

@pytest.fixture(scope="module")
def synthesized(small_corpus, small_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_synth")
    assert main(["synth", "--input", str(small_corpus), "--output", str(out), "--config", str(small_cfg)]) == 0
    return out


def test_precorrect_and_eval(synthesized, tmp_path):
    pc = tmp_path / "pc"
    assert main(["precorrect", "--input", str(synthesized / "manifest.json"), "--output", str(pc)]) == 0
    manifest = json.loads((pc / "manifest.json").read_text())
    assert manifest["margin"] == 16 and manifest["measurement"]["relative_bound"] == 0.2

    assert main(["eval", "--input", str(pc / "manifest.json"), "--output", str(tmp_path / "e0"),
                 "--variant", "precorrected"]) == 0
    assert main(["eval", "--input", str(pc / "manifest.json"), "--output", str(tmp_path / "e16"),
                 "--variant", "precorrected", "--margin", "16"]) == 0
    s0 = json.loads((tmp_path / "e0" / "summary_precorrected.json").read_text())
    s16 = json.loads((tmp_path / "e16" / "summary_precorrected.json").read_text())
    assert s16["means"]["psnr_db"] >= s0["means"]["psnr_db"]
    rows = read_csv(tmp_path / "e16" / "metrics_precorrected.csv")
    assert rows[0][:4] == ["index", "clean_path", "test_path", "psnr_db"]
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    assert all(r[7] == "16:16:64:96" for r in rows[1:])


def test_eval_is_bit_exact_across_runs(synthesized, tmp_path):
    for out in ("a", "b"):
        assert main(["eval", "--input", str(synthesized / "manifest.json"), "--output", str(tmp_path / out)]) == 0
    for name in ("metrics_degraded.csv", "summary_degraded.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_eval_identical_pair_row(synthesized, tmp_path):
    manifest = json.loads((synthesized / "manifest.json").read_text())
    first = manifest["entries"][0]
    checksums = dict(first["checksums"], degraded=first["checksums"]["clean"])
    entry = dict(first, degraded_path=first["clean_path"], checksums=checksums)
    (synthesized / "identical.json").write_text(json.dumps({"entries": [entry]}))
    assert main(["eval", "--input", str(synthesized / "identical.json"), "--output", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "metrics_degraded.csv")[1]
    assert row[3] == "inf" and float(row[4]) == 1.0 and float(row[5]) == 0.0
    assert json.loads((tmp_path / "summary_degraded.json").read_text())["means"]["psnr_db"] == "inf"


def test_eval_missing_file_nonzero_exit(synthesized, tmp_path):
    manifest = json.loads((synthesized / "manifest.json").read_text())
    entries = [dict(manifest["entries"][0], degraded_path="gone.png"), manifest["entries"][1]]
    (synthesized / "partial.json").write_text(json.dumps({"entries": entries}))
    assert main(["eval", "--input", str(synthesized / "partial.json"), "--output", str(tmp_path)]) == 4
    rows = read_csv(tmp_path / "metrics_degraded.csv")
    assert rows[1][-1] != "" and rows[2][-1] == ""


def test_precorrect_integrity_failure_exit_4(synthesized, tmp_path):
    manifest = json.loads((synthesized / "manifest.json").read_text())
    entry = manifest["entries"][0]
    work = tmp_path / "w"
    (work / "sidecars").mkdir(parents=True)
    for key in ("clean_path", "degraded_path"):
        (work / entry[key]).parent.mkdir(parents=True, exist_ok=True)
        (work / entry[key]).write_bytes((synthesized / entry[key]).read_bytes())
    (work / entry["sidecar_path"]).write_bytes(b"LAPJ" + b"\x00" * 10)
    (work / "manifest.json").write_text(json.dumps(dict(manifest, entries=[entry])))
    assert main(["precorrect", "--input", str(work / "manifest.json"), "--output", str(tmp_path / "o")]) == 4
    assert main(["precorrect", "--input", str(tmp_path / "nope.json"), "--output", str(tmp_path / "o2")]) == 3


# ------------------------------------------------------------- flow-viz

def flow_png(tmp_path, roll, pitch, height=8, config=NOISELESS):
    side = tmp_path / "f.lapj"
    sc.write_sidecar(side, roll, pitch, height)
    out = tmp_path / "flow.png"
    args = ["flow-viz", "--input", str(side), "--output", str(out)]
    if config is not None:
        args += ["--config", str(cfg_file(tmp_path, config))]
    assert main(args) == 0
    return np.asarray(Image.open(out))


def test_flow_viz_zero_field_is_white(tmp_path):
    img = flow_png(tmp_path, np.zeros((6, 20)), np.zeros((6, 20)))
    assert img.shape == (8, 20, 3) and np.all(img == 255)


def test_flow_viz_constant_field_is_uniform_hue(tmp_path):
    img = flow_png(tmp_path, np.ones((1, 20)), np.zeros((1, 20)))
    assert np.all(img == img[0, 0]) and len(set(img[0, 0].tolist())) > 1


def test_flow_viz_roll_only_sinusoid(tmp_path):
    roll = subdivision_curves(SinusoidSet.from_arrays([4.0], [1000.0], [0.3]), 64, TAU, 6)
    img = flow_png(tmp_path, roll, np.zeros_like(roll), height=12, config=None)
    assert all(np.array_equal(img[r], img[0]) for r in range(12))
    assert len({tuple(px) for px in img[0]}) > 1


def test_flow_viz_from_manifest_and_corrupt_sidecar(synthesized, tmp_path):
    assert main(["flow-viz", "--input", str(synthesized / "manifest.json"), "--index", "1",
                 "--output", str(tmp_path / "m.png")]) == 0
    assert Image.open(tmp_path / "m.png").size == (128, 96)
    (tmp_path / "bad.lapj").write_bytes(b"JUNKJUNKJUNKJUNKJUNKJUNK")
    assert main(["flow-viz", "--input", str(tmp_path / "bad.lapj"), "--output", str(tmp_path / "b.png")]) == 4


# ------------------------------------------------------------- curve-plot

def curve_csv(tmp_path, roll, pitch, config=None):
    side = tmp_path / "c.lapj"
    sc.write_sidecar(side, roll, pitch, 8)
    args = ["curve-plot", "--input", str(side), "--output", str(tmp_path / "curves.png")]
    if config is not None:
        args += ["--config", str(cfg_file(tmp_path, config))]
    assert main(args) == 0
    assert Image.open(tmp_path / "curves.png").format == "PNG"
    rows = read_csv(tmp_path / "curves.csv")
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def test_curve_plot_zero_curve(tmp_path):
    header, data = curve_csv(tmp_path, np.zeros((6, 30)), np.zeros((6, 30)))
    assert header[:5] == ["column", "roll_ideal", "roll_cdsm_ideal", "roll_noisy", "roll_cdsm_noisy"]
    assert data[:, 0].tolist() == list(range(1, 31))
    assert not data[:, 1:].any()


def test_curve_plot_matches_jitter_model_bit_exactly(tmp_path):
    s = SinusoidSet.from_arrays([4.0], [1000.0], [0.7])
    roll = subdivision_curves(s, 64, TAU, 6)
    header, data = curve_csv(tmp_path, roll, np.zeros_like(roll), config=NOISELESS)
    col = {name: data[:, i] for i, name in enumerate(header)}
    assert np.array_equal(col["roll_ideal"], roll[0])
    assert np.array_equal(col["roll_cdsm_ideal"], cdsm_average(s, 64, TAU, 6))
    assert np.array_equal(col["roll_noisy"], roll[0])


def test_curve_plot_cdsm_smooths_noise(tmp_path):
    roll = np.full((6, 2000), 4.0)
    header, data = curve_csv(tmp_path, roll, roll / 4)
    col = {name: data[:, i] for i, name in enumerate(header)}
    raw = np.max(np.abs(col["roll_noisy"] - col["roll_ideal"]))
    smooth = np.max(np.abs(col["roll_cdsm_noisy"] - col["roll_cdsm_ideal"]))
    assert smooth < raw
    assert math.isclose(raw, 0.8, rel_tol=0.01)


def test_cli_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
