"""Acceptance criteria, one test per criterion, each printing a PASS line.

Criteria run against deterministic synthetic corpora (50 cases per class,
seed 7): a noiseless corpus for exact-recovery bounds and a 20 dB corpus
for the noisy analogues.
"""

import math

import numpy as np
import pytest

from murmurscope import analyze
from murmurscope.cli import main as cli_main
from murmurscope.metrics import dice, segment_param_mse
from murmurscope.segmentation import Mask, Segment
from murmurscope.shapes import DIAGNOSES, Diagnosis
from murmurscope.synth import generate

TOL_EXACT = 1e-12
NEST_TOL = 1e-9


def _report(n, ok, detail):
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


def test_criterion_1_noiseless_recovery(clean_eval):
    result, outcomes, elapsed = clean_eval
    tau_errs = [o.tau_err_max_s for o in outcomes if o.tau_err_max_s is not None]
    slope_errs = [o.slope_rel_err_max for o in outcomes if o.slope_rel_err_max is not None]
    ok = (
        result.accuracy == 1.0
        and result.mean_dice >= 0.95
        and max(tau_errs) <= 0.010
        and max(slope_errs) <= 0.05
        and elapsed < 60.0
    )
    _report(1, ok, (
        f"accuracy={result.accuracy:.4f} mean_dice={result.mean_dice:.4f} "
        f"tau_max={max(tau_errs)*1e3:.2f}ms slope_max={max(slope_errs)*100:.2f}% "
        f"runtime={elapsed:.1f}s"
    ))


def test_criterion_2_noisy_recovery(noisy_eval):
    result, outcomes = noisy_eval
    ok = result.accuracy >= 0.90 and result.mean_dice >= 0.80
    _report(2, ok, f"accuracy={result.accuracy:.4f} mean_dice={result.mean_dice:.4f} (20 dB)")


def test_criterion_3_redundant_parameter_collapse(config):
    case = generate(Diagnosis.MVP, snr_db=math.inf, seed=123, sig_cfg=config.signal)
    p = case.true_params
    assert p.tau[2] == pytest.approx(2 * p.tau[1] - p.tau[0])  # plateau-identity click
    rep = analyze(case.waveform, config)
    ms, mvp = rep.fits[Diagnosis.MS], rep.fits[Diagnosis.MVP]
    rel = abs(ms.lack_of_fit - mvp.lack_of_fit) / max(ms.lack_of_fit, mvp.lack_of_fit, 1e-300)
    tau4_gap = abs(ms.params.tau[3] - ms.params.tau[4])
    ok = rel <= 0.05 and tau4_gap <= 0.010 and rep.resolved is Diagnosis.MVP
    _report(3, ok, (
        f"d_MS vs d_MVP rel diff={rel:.4f}, tau4 to segment end={tau4_gap*1e3:.2f}ms, "
        f"resolved={rep.resolved.value}"
    ))


def test_criterion_4_nesting_monotonicity(clean_eval, noisy_eval):
    violations = 0
    total = 0
    for outcomes in (clean_eval[1], noisy_eval[1]):
        for o in outcomes:
            total += 1
            if o.lack_of_fit[Diagnosis.AS] > o.lack_of_fit[Diagnosis.MR] + NEST_TOL:
                violations += 1
            if o.lack_of_fit[Diagnosis.MS] > o.lack_of_fit[Diagnosis.MVP] + NEST_TOL:
                violations += 1
    _report(4, violations == 0, f"{violations} nesting violations over {total} cases")


def test_criterion_5_optimization_never_worsens(clean_eval, noisy_eval):
    violations = 0
    total = 0
    for outcomes in (clean_eval[1], noisy_eval[1]):
        for o in outcomes:
            for y in DIAGNOSES:
                total += 1
                if o.lack_of_fit[y] > o.init_lack_of_fit[y] + TOL_EXACT:
                    violations += 1
    _report(5, violations == 0, f"{violations} of {total} fits worsened their objective")


def test_criterion_6_metric_unit_exactness():
    d1 = dice(Mask(bits=np.array([1, 1, 0, 0], dtype=bool), grid_hz=100.0),
              Mask(bits=np.array([0, 1, 1, 0], dtype=bool), grid_hz=100.0))
    m = Mask(bits=np.array([0, 1, 1, 1], dtype=bool), grid_hz=100.0)
    d2 = dice(m, m)
    s = segment_param_mse(Segment(0.30, 0.60), Segment(0.31, 0.61))
    ok = abs(d1 - 0.5) <= TOL_EXACT and abs(d2 - 1.0) <= TOL_EXACT and abs(s - 2e-4) <= TOL_EXACT
    _report(6, ok, f"dice={d1!r}, self-dice={d2!r}, segment mse={s!r}")


def test_criterion_7_shape_algebra_suite():
    import test_shape_properties as props

    for y in DIAGNOSES:
        props.test_random_params_are_valid(y)
    for y in (Diagnosis.AS, Diagnosis.MR, Diagnosis.MVP, Diagnosis.MS):
        props.test_zero_outside_segment(y)
        props.test_piecewise_linearity(y)
    props.test_diamond_with_zero_slopes_is_plateau()
    props.test_collapsed_tail_equals_click_plateau()
    props.test_click_plateau_identity()
    _report(7, True, "1000 randomized draws per family, zero failures")


def test_criterion_8_evaluate_is_deterministic(tmp_path):
    corpus = tmp_path / "corpus"
    assert cli_main(["--out-dir", str(corpus), "--seed", "11", "synth",
                     "--per-class", "3", "--snr", "20"]) == 0
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli_main(["--out-dir", str(out1), "evaluate", str(corpus)]) == 0
    assert cli_main(["--out-dir", str(out2), "evaluate", str(corpus)]) == 0
    same = True
    for name in ("metrics.csv", "confusion.csv", "cases.csv"):
        same &= (out1 / name).read_bytes() == (out2 / name).read_bytes()
    svgs1 = sorted(p.name for p in (out1 / "svg").iterdir())
    svgs2 = sorted(p.name for p in (out2 / "svg").iterdir())
    same &= svgs1 == svgs2
    for name in svgs1:
        same &= (out1 / "svg" / name).read_bytes() == (out2 / "svg" / name).read_bytes()
    _report(8, same, f"two runs byte-identical over {3 + len(svgs1)} output files")


def test_criterion_9_phase_gate_soundness(clean_eval, noisy_eval):
    violations = 0
    total = 0
    for outcomes in (clean_eval[1], noisy_eval[1]):
        for o in outcomes:
            total += 1
            if o.resolved is Diagnosis.MS and o.phase == "systolic":
                violations += 1
            if o.resolved in (Diagnosis.AS, Diagnosis.MR, Diagnosis.MVP) and o.phase == "diastolic":
                violations += 1
    _report(9, violations == 0, f"{violations} phase-gate violations over {total} reports")
