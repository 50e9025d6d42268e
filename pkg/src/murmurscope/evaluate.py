"""Corpus-level evaluation: run the pipeline over generated cases and
aggregate prediction and explanation-faithfulness metrics.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import Config
from .errors import FormatError, ValidationError
from .metrics import EvalResult, classify_metrics, dice, segment_param_mse, shape_fit_mse, shape_param_mse
from .pipeline import CaseReport, analyze
from .segmentation import Mask, Segment, mask_to_json
from .shapes import DIAGNOSES, Diagnosis, ShapeParams, params_from_json, params_to_json
from .signal import read_wav, write_wav
from .synth import SyntheticCase


def write_corpus(cases: list[tuple[str, SyntheticCase]], manifest: dict, out_dir: str | Path) -> Path:
    """Write WAV + ground-truth JSON per case plus a manifest; returns manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = {e["id"]: e for e in manifest["cases"]}
    for case_id, case in cases:
        wav_name = f"{case_id}.wav"
        truth_name = f"{case_id}.truth.json"
        write_wav(out / wav_name, case.waveform)
        truth = {
            "id": case_id,
            "diagnosis": case.true_diagnosis.value,
            "phase": case.true_phase.value,
            "seed": case.seed,
            "snr_db": None if case.snr_db == math.inf else case.snr_db,
            "measured_snr_db": None if case.measured_snr_db == math.inf else case.measured_snr_db,
            "s1_time_s": case.s1_time_s,
            "s2_time_s": case.s2_time_s,
            "params": params_to_json(case.true_diagnosis, case.true_params)
            if case.true_params is not None
            else None,
            "mask": mask_to_json(case.true_mask),
            "envelope": {
                "values": [float(v) for v in case.true_envelope.values],
                "grid_hz": case.true_envelope.grid_hz,
                "t0_s": case.true_envelope.t0_s,
            },
        }
        (out / truth_name).write_text(json.dumps(truth))
        entries[case_id]["wav"] = wav_name
        entries[case_id]["truth"] = truth_name
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=1))
    return manifest_path


def load_manifest(corpus_dir: str | Path) -> dict:
    path = Path(corpus_dir) / "manifest.json"
    if not path.exists():
        raise FormatError(f"no manifest.json in {corpus_dir}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid manifest JSON: {exc}") from exc


@dataclass
class CaseOutcome:
    """Per-case evaluation row."""

    case_id: str
    true_diagnosis: Diagnosis
    resolved: Diagnosis
    phase: str
    correct: bool
    dice: float
    seg_mse: float | None
    missed_segment: bool
    shape_param_mse: float | None
    shape_fit_mse: float | None
    tau_err_max_s: float | None
    slope_rel_err_max: float | None
    lack_of_fit: dict[Diagnosis, float]
    init_lack_of_fit: dict[Diagnosis, float]


_SLOPE_INDICES = {
    Diagnosis.AS: (1, 2),
    Diagnosis.MVP: (1,),
    Diagnosis.MS: (1, 2),
    Diagnosis.MR: (),
    Diagnosis.N: (),
}


def _recovery_errors(true_p: ShapeParams, fit_p: ShapeParams, y: Diagnosis):
    """Max interior-breakpoint error (s) and max relative slope error."""
    tau_err = None
    if len(true_p.tau) > 2:
        interior_true = np.asarray(true_p.tau[1:-1])
        interior_fit = np.asarray(fit_p.tau[1:-1])
        tau_err = float(np.max(np.abs(interior_true - interior_fit)))
    slope_err = None
    idxs = _SLOPE_INDICES[y]
    if idxs:
        errs = [abs(fit_p.pi[i] - true_p.pi[i]) / abs(true_p.pi[i]) for i in idxs]
        slope_err = float(max(errs))
    return tau_err, slope_err


def evaluate_case(case_id: str, wav_path: str | Path, truth: dict, cfg: Config) -> tuple[CaseOutcome, CaseReport]:
    w = read_wav(wav_path)
    report = analyze(w, cfg, instance_id=case_id, source_path=str(wav_path))

    true_y = Diagnosis(truth["diagnosis"])
    true_mask_rec = truth["mask"]
    bits = np.zeros(int(true_mask_rec["len"]), dtype=bool)
    for a, b in true_mask_rec["runs"]:
        bits[int(a):int(b)] = True
    true_mask = Mask(bits=bits, grid_hz=float(true_mask_rec["grid_hz"]), t0_s=0.0)
    if len(true_mask.bits) != len(report.mask.bits):
        raise ValidationError(
            f"{case_id}: truth grid ({len(true_mask.bits)}) does not match analysis grid "
            f"({len(report.mask.bits)}); evaluate with the grid the corpus was generated at"
        )

    d = dice(true_mask, report.mask)
    pred_seg = report.segment
    has_murmur = truth["params"] is not None

    seg_mse = None
    missed = False
    sp_mse = None
    sf_mse = None
    tau_err = None
    slope_err = None
    if has_murmur:
        _, true_params = params_from_json(truth["params"])
        true_seg = Segment(start_s=true_params.tau[0], end_s=true_params.tau[-1])
        if pred_seg is None:
            missed = True
        else:
            seg_mse = segment_param_mse(true_seg, pred_seg)
            fit = report.fits[true_y]
            sp_mse = shape_param_mse(true_params, fit.params)
            tau_err, slope_err = _recovery_errors(true_params, fit.params, true_y)
        true_env = np.asarray(truth["envelope"]["values"], dtype=np.float64)
        sf_mse = shape_fit_mse(true_env, report.fits[report.resolved].shape.values, true_mask)

    outcome = CaseOutcome(
        case_id=case_id,
        true_diagnosis=true_y,
        resolved=report.resolved,
        phase=report.phase.value,
        correct=report.resolved is true_y,
        dice=d,
        seg_mse=seg_mse,
        missed_segment=missed,
        shape_param_mse=sp_mse,
        shape_fit_mse=sf_mse,
        tau_err_max_s=tau_err,
        slope_rel_err_max=slope_err,
        lack_of_fit={y: report.fits[y].lack_of_fit for y in DIAGNOSES},
        init_lack_of_fit={y: report.fits[y].init_lack_of_fit for y in DIAGNOSES},
    )
    return outcome, report


def _worker(args):
    case_id, wav_path, truth, cfg, keep_report = args
    outcome, report = evaluate_case(case_id, wav_path, truth, cfg)
    return outcome, (report if keep_report else None)


def evaluate_corpus(
    corpus_dir: str | Path,
    cfg: Config | None = None,
    workers: int = 1,
    keep_reports: bool = False,
) -> tuple[EvalResult, list[CaseOutcome], list[CaseReport] | None]:
    """Run the full pipeline over every manifest case and aggregate metrics.

    Results come back in manifest order regardless of worker count, so
    repeated runs are deterministic.
    """
    cfg = cfg or Config()
    corpus = Path(corpus_dir)
    manifest = load_manifest(corpus)
    jobs = []
    for entry in manifest["cases"]:
        truth = json.loads((corpus / entry["truth"]).read_text())
        jobs.append((entry["id"], corpus / entry["wav"], truth, cfg, keep_reports))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(_worker, jobs))
    else:
        pairs = [_worker(job) for job in jobs]
    outcomes = [o for o, _ in pairs]
    reports = [r for _, r in pairs] if keep_reports else None

    result = classify_metrics([(o.true_diagnosis, o.resolved) for o in outcomes])
    result.mean_dice = float(np.mean([o.dice for o in outcomes]))
    seg_mses = [o.seg_mse for o in outcomes if o.seg_mse is not None]
    result.mean_param_mse = float(np.mean(seg_mses)) if seg_mses else None
    sp = [o.shape_param_mse for o in outcomes if o.shape_param_mse is not None]
    result.mean_shape_param_mse = float(np.mean(sp)) if sp else None
    sf = [o.shape_fit_mse for o in outcomes if o.shape_fit_mse is not None]
    result.mean_shape_fit_mse = float(np.mean(sf)) if sf else None
    result.n_missed_segments = sum(1 for o in outcomes if o.missed_segment)
    return result, outcomes, reports


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_cases_csv(outcomes: list[CaseOutcome], path: str | Path) -> None:
    cols = [
        "case_id", "true", "resolved", "phase", "correct", "dice", "seg_mse",
        "missed_segment", "shape_param_mse", "shape_fit_mse",
        "tau_err_max_s", "slope_rel_err_max",
    ] + [f"d_{y.value}" for y in DIAGNOSES] + [f"d_init_{y.value}" for y in DIAGNOSES]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for o in outcomes:
            row = [
                o.case_id, o.true_diagnosis.value, o.resolved.value, o.phase,
                o.correct, o.dice, o.seg_mse, o.missed_segment,
                o.shape_param_mse, o.shape_fit_mse, o.tau_err_max_s, o.slope_rel_err_max,
            ]
            row += [o.lack_of_fit[y] for y in DIAGNOSES]
            row += [o.init_lack_of_fit[y] for y in DIAGNOSES]
            writer.writerow([_fmt(v) for v in row])
