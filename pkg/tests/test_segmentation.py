import json

import numpy as np
import pytest

from murmurscope.config import SegmentationConfig
from murmurscope.errors import AlignmentError, FormatError
from murmurscope.metrics import dice
from murmurscope.segmentation import (
    Mask,
    exclusion_bits,
    load_mask,
    longest_segment,
    mask_to_json,
    runs,
    segment_murmur,
    threshold_mask,
)
from murmurscope.shapes import Diagnosis
from murmurscope.signal import Envelope, HeartEvents, detect_s1_s2, envelope
from murmurscope.synth import generate


def _analyzed(case, config):
    env = envelope(case.waveform, config.signal.rms_window_ms, config.signal.grid_hz)
    ev = detect_s1_s2(env, config.signal)
    return env, ev


def test_synthetic_diamond_mask_overlaps_truth(config):
    case = generate(Diagnosis.AS, snr_db=float("inf"), seed=11, sig_cfg=config.signal)
    env, ev = _analyzed(case, config)
    mask = segment_murmur(env, ev, config.segmentation)
    assert dice(case.true_mask, mask) >= 0.9


def test_normal_case_yields_empty_mask(config):
    case = generate(Diagnosis.N, snr_db=float("inf"), seed=11, sig_cfg=config.signal)
    env, ev = _analyzed(case, config)
    mask = segment_murmur(env, ev, config.segmentation)
    assert not mask.bits.any()


def test_two_bursts_make_two_runs():
    t = np.arange(0, 1.0, 0.005)
    v = np.zeros_like(t)
    v[(t >= 0.2) & (t < 0.35)] = 0.5
    v[(t >= 0.6) & (t < 0.8)] = 0.4
    v += 0.01
    env = Envelope(values=v / v.max(), grid_hz=200.0)
    mask = segment_murmur(env, HeartEvents(), SegmentationConfig())
    assert len(runs(mask.bits)) == 2


def test_longest_segment_picks_longer_run():
    bits = np.zeros(200, dtype=bool)
    bits[10:40] = True  # 30 steps
    bits[60:140] = True  # 80 steps
    seg = longest_segment(Mask(bits=bits, grid_hz=100.0))
    assert seg.start_s == pytest.approx(0.60)
    assert seg.end_s == pytest.approx(1.40)


def test_longest_segment_tie_breaks_earliest():
    bits = np.zeros(200, dtype=bool)
    bits[20:50] = True
    bits[60:90] = True
    seg = longest_segment(Mask(bits=bits, grid_hz=100.0))
    assert seg.start_s == pytest.approx(0.20)


def test_longest_segment_empty_mask():
    assert longest_segment(Mask(bits=np.zeros(50, dtype=bool), grid_hz=100.0)) is None


def test_load_mask_bare_array(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("[0,0,1,1,0]")
    m = load_mask(path, grid_hz=100.0)
    seg = longest_segment(m)
    assert seg.start_s == pytest.approx(0.02)
    assert seg.end_s == pytest.approx(0.04)


def test_load_mask_bare_array_needs_grid(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("[0,1]")
    with pytest.raises(AlignmentError):
        load_mask(path)


def test_load_mask_run_length_equals_bits(tmp_path):
    explicit = tmp_path / "bits.json"
    explicit.write_text(json.dumps([0] * 20 + [1] * 20 + [0] * 60))
    rle = tmp_path / "rle.json"
    rle.write_text(json.dumps({"runs": [[20, 40]], "len": 100, "grid_hz": 100.0}))
    a = load_mask(explicit, grid_hz=100.0)
    b = load_mask(rle)
    np.testing.assert_array_equal(a.bits, b.bits)


def test_load_mask_round_trip(tmp_path):
    bits = np.zeros(120, dtype=bool)
    bits[30:70] = True
    m = Mask(bits=bits, grid_hz=200.0)
    path = tmp_path / "rt.json"
    path.write_text(json.dumps(mask_to_json(m)))
    back = load_mask(path)
    np.testing.assert_array_equal(back.bits, m.bits)
    assert back.grid_hz == m.grid_hz


def test_load_mask_length_mismatch(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("[0,1,1]")
    with pytest.raises(AlignmentError):
        load_mask(path, grid_hz=100.0, expected_len=100)


def test_load_mask_grid_mismatch(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"runs": [[1, 2]], "len": 10, "grid_hz": 50.0}))
    with pytest.raises(AlignmentError):
        load_mask(path, grid_hz=100.0)


def test_load_mask_rejects_non_binary(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("[0, 2, 1]")
    with pytest.raises(FormatError):
        load_mask(path, grid_hz=100.0)


@pytest.mark.parametrize("y", [Diagnosis.AS, Diagnosis.MS])
@pytest.mark.parametrize("snr", [float("inf"), 20.0])
def test_mask_never_overlaps_event_exclusions(config, y, snr):
    for seed in range(4):
        case = generate(y, snr_db=snr, seed=30 + seed, sig_cfg=config.signal)
        env, ev = _analyzed(case, config)
        mask = segment_murmur(env, ev, config.segmentation)
        excl = exclusion_bits(env, ev, config.segmentation.exclusion_halfwidth_ms)
        assert not (mask.bits & excl).any()


def test_threshold_monotone_in_factor(config):
    case = generate(Diagnosis.MVP, snr_db=20.0, seed=13, sig_cfg=config.signal)
    env, ev = _analyzed(case, config)
    prev = None
    for factor in (1.0, 1.5, 2.0, 3.0, 5.0):
        cfg = SegmentationConfig(threshold_factor=factor)
        bits = threshold_mask(env, ev, cfg).bits
        if prev is not None:
            assert not (bits & ~prev).any()  # raising the factor never adds points
        prev = bits


def test_dice_self_consistency(config):
    case = generate(Diagnosis.MR, snr_db=20.0, seed=2, sig_cfg=config.signal)
    env, ev = _analyzed(case, config)
    mask = segment_murmur(env, ev, config.segmentation)
    assert mask.bits.any()
    assert dice(mask, mask) == 1.0
