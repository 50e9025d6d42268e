import json
import math

import pytest

from murmurscope.cli import main
from murmurscope.shapes import Diagnosis
from murmurscope.signal import write_wav
from murmurscope.synth import generate


@pytest.fixture(scope="module")
def as_wav(tmp_path_factory):
    d = tmp_path_factory.mktemp("wavs")
    case = generate(Diagnosis.AS, snr_db=math.inf, seed=31)
    path = d / "demo_as.wav"
    write_wav(path, case.waveform)
    return path


def test_analyze_writes_report_and_diagram(as_wav, tmp_path):
    code = main(["--out-dir", str(tmp_path), "analyze", str(as_wav)])
    assert code == 0
    report = json.loads((tmp_path / "demo_as_w0.json").read_text())
    assert report["resolved"] == "AS"
    assert report["schema_version"] == 1
    assert (tmp_path / "demo_as_w0.svg").read_text().startswith("<?xml")


def test_analyze_explain_flags(as_wav, tmp_path):
    code = main([
        "--out-dir", str(tmp_path), "analyze", str(as_wav),
        "--explain", "contrastive,counterfactual:MS",
    ])
    assert code == 0
    assert (tmp_path / "demo_as_w0_contrastive.svg").exists()
    assert (tmp_path / "demo_as_w0_counterfactual_MS.svg").exists()


def test_analyze_with_mask_override(as_wav, tmp_path, config):
    case = generate(Diagnosis.AS, snr_db=math.inf, seed=31)
    n_grid = int(math.floor(1.0 * config.signal.grid_hz))
    t1, tL = case.true_params.tau[0], case.true_params.tau[-1]
    bits = [1 if t1 <= i / config.signal.grid_hz < tL else 0 for i in range(n_grid)]
    mask_path = tmp_path / "mask.json"
    mask_path.write_text(json.dumps(bits))
    code = main(["--out-dir", str(tmp_path), "analyze", str(as_wav), "--mask", str(mask_path)])
    assert code == 0
    report = json.loads((tmp_path / "demo_as_w0.json").read_text())
    assert report["resolved"] == "AS"


def test_analyze_unreadable_input_exits_2(tmp_path):
    assert main(["--out-dir", str(tmp_path), "analyze", str(tmp_path / "missing.wav")]) == 2


def test_analyze_garbage_input_exits_2(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not audio")
    assert main(["--out-dir", str(tmp_path), "analyze", str(bad)]) == 2


def test_unknown_command_exits_2(tmp_path):
    assert main(["frobnicate"]) == 2


def test_bad_config_exits_2(as_wav, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"signal": {"bogus": 1}}))
    assert main(["--config", str(cfg), "analyze", str(as_wav)]) == 2


def test_synth_writes_corpus(tmp_path):
    code = main(["--out-dir", str(tmp_path), "--seed", "3", "synth", "--per-class", "2", "--snr", "20"])
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["count"] == 10
    for entry in manifest["cases"]:
        assert (tmp_path / entry["wav"]).exists()
        assert (tmp_path / entry["truth"]).exists()


def test_evaluate_deterministic_outputs(tmp_path):
    corpus = tmp_path / "corpus"
    assert main(["--out-dir", str(corpus), "--seed", "5", "synth", "--per-class", "2", "--snr", "inf"]) == 0
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    assert main(["--out-dir", str(out1), "evaluate", str(corpus)]) == 0
    assert main(["--out-dir", str(out2), "evaluate", str(corpus)]) == 0
    for name in ("metrics.csv", "confusion.csv", "cases.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    svgs1 = sorted((out1 / "svg").iterdir())
    svgs2 = sorted((out2 / "svg").iterdir())
    assert [p.name for p in svgs1] == [p.name for p in svgs2]
    for a, b in zip(svgs1, svgs2):
        assert a.read_bytes() == b.read_bytes()


def test_evaluate_missing_manifest_exits_2(tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    assert main(["--out-dir", str(tmp_path), "evaluate", str(empty)]) == 2


def test_store_and_retrieve_round_trip(as_wav, tmp_path):
    assert main(["--out-dir", str(tmp_path), "analyze", str(as_wav)]) == 0
    report_path = tmp_path / "demo_as_w0.json"
    store_path = tmp_path / "cases.jsonl"
    assert main(["store", str(report_path), "--store", str(store_path)]) == 0
    assert main(["retrieve", "AS", "-k", "1", "--store", str(store_path)]) == 0
    record = json.loads(store_path.read_text().splitlines()[0])
    assert record["resolved"] == "AS"
    assert record["id"] == "case-000001"


def test_render_from_saved_report(as_wav, tmp_path):
    assert main(["--out-dir", str(tmp_path), "analyze", str(as_wav)]) == 0
    report_path = tmp_path / "demo_as_w0.json"
    out_svg = tmp_path / "again.svg"
    assert main(["render", str(report_path), "--kind", "contrastive", "-o", str(out_svg)]) == 0
    assert out_svg.read_text().startswith("<?xml")
    # counterfactual needs a target
    assert main(["render", str(report_path), "--kind", "counterfactual"]) == 2
    assert main(["render", str(report_path), "--kind", "counterfactual", "--target", "MR",
                 "-o", str(tmp_path / "cf.svg")]) == 0


def test_config_override_via_set(as_wav, tmp_path):
    code = main([
        "--set", "signal.grid_hz=100", "--out-dir", str(tmp_path),
        "analyze", str(as_wav),
    ])
    assert code == 0
    report = json.loads((tmp_path / "demo_as_w0.json").read_text())
    assert report["envelope"]["grid_hz"] == 100.0


def test_short_recording_is_not_an_error(tmp_path):
    from murmurscope.signal import Waveform
    import numpy as np

    path = tmp_path / "short.wav"
    write_wav(path, Waveform(samples=np.zeros(4000), sample_rate_hz=8000))
    assert main(["--out-dir", str(tmp_path), "analyze", str(path)]) == 0
    assert not (tmp_path / "short_w0.json").exists()
