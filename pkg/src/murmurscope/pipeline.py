"""End-to-end analysis of one instance: envelope -> events -> segment ->
five fitted hypotheses -> ranking -> resolved diagnosis, bundled in a
serializable CaseReport.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .hypothesis import (
    FittedHypothesis,
    HypothesisRanking,
    embed_click_in_crescendo_tail,
    embed_plateau_in_click,
    embed_plateau_in_diamond,
    fit_shape,
    init_params,
    rank_hypotheses,
)
from .segmentation import (
    Mask,
    Segment,
    background_rms,
    longest_segment,
    mask_to_json,
    restrict_to_segment,
    segment_murmur,
    shrink_runs,
    trim_steps,
)
from .shapes import DIAGNOSES, Diagnosis, ShapeParams, eval_shape_series, params_from_json, params_to_json
from .signal import Envelope, HeartEvents, Phase, Waveform, classify_phase, detect_s1_s2, envelope

SCHEMA_VERSION = 1
WAVEFORM_PREVIEW_MAX = 2000


@dataclass
class CaseReport:
    """Complete analysis of one fixed-length instance."""

    instance_id: str
    source_path: str
    offset_s: float
    envelope: Envelope
    mask: Mask
    events: HeartEvents
    phase: Phase
    fits: dict[Diagnosis, FittedHypothesis]
    ranking: HypothesisRanking
    resolved: Diagnosis
    timings_ms: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    waveform_preview: tuple[np.ndarray, float] | None = None  # (samples, rate)
    schema_version: int = SCHEMA_VERSION

    @property
    def segment(self) -> Segment | None:
        return longest_segment(self.mask)


def _decimate_preview(w: Waveform) -> tuple[np.ndarray, float]:
    step = max(1, int(np.ceil(len(w.samples) / WAVEFORM_PREVIEW_MAX)))
    return w.samples[::step].copy(), w.sample_rate_hz / step


def analyze(
    w: Waveform,
    cfg: Config | None = None,
    instance_id: str = "instance",
    source_path: str = "",
    offset_s: float = 0.0,
    mask_override: Mask | None = None,
) -> CaseReport:
    """Run the full pipeline on one instance."""
    cfg = cfg or Config()
    warnings_log: list[str] = []
    timings: dict[str, float] = {}

    def clock(name, start):
        timings[name] = (time.perf_counter() - start) * 1e3

    t0 = time.perf_counter()
    env = envelope(w, cfg.signal.rms_window_ms, cfg.signal.grid_hz)
    clock("envelope", t0)

    t0 = time.perf_counter()
    events = detect_s1_s2(env, cfg.signal)
    clock("events", t0)

    t0 = time.perf_counter()
    if mask_override is not None:
        if len(mask_override.bits) != len(env.values):
            raise ValueError(
                f"supplied mask length {len(mask_override.bits)} does not match "
                f"envelope length {len(env.values)}"
            )
        raw_mask = mask_override
    else:
        raw_mask = segment_murmur(env, events, cfg.segmentation)
    seg = longest_segment(raw_mask)
    clock("segmentation", t0)

    t0 = time.perf_counter()
    if seg is not None:
        mask = restrict_to_segment(raw_mask, seg)
        phase = classify_phase(seg, events)
        fit_seg = seg
        fit_mask = shrink_runs(mask, trim_steps(env.grid_hz, cfg.segmentation.edge_trim_halfwidth_ms) + 1)
    else:
        # keep five well-defined fits for the report: score murmur families
        # over the whole instance, then let the no-segment gate resolve N
        mask = raw_mask
        phase = Phase.Unknown
        fit_seg = Segment(env.t0_s, env.t0_s + env.duration_s)
        fit_mask = Mask(bits=np.ones(len(env.values), dtype=bool), grid_hz=env.grid_hz, t0_s=env.t0_s)
    clock("phase", t0)

    t0 = time.perf_counter()
    fits: dict[Diagnosis, FittedHypothesis] = {}
    hyp_cfg = cfg.hypothesis
    fits[Diagnosis.N] = fit_shape(Diagnosis.N, env, fit_seg, None, hyp_cfg, mask=fit_mask)
    fits[Diagnosis.MR] = fit_shape(
        Diagnosis.MR, env, fit_seg, init_params(Diagnosis.MR, env, fit_seg, cfg.priors),
        hyp_cfg, mask=fit_mask,
    )
    fits[Diagnosis.AS] = fit_shape(
        Diagnosis.AS, env, fit_seg, init_params(Diagnosis.AS, env, fit_seg, cfg.priors),
        hyp_cfg, mask=fit_mask,
        warm_starts=((embed_plateau_in_diamond(fits[Diagnosis.MR], fit_seg), fits[Diagnosis.MR].n_eff_params),),
    )
    fits[Diagnosis.MVP] = fit_shape(
        Diagnosis.MVP, env, fit_seg, init_params(Diagnosis.MVP, env, fit_seg, cfg.priors),
        hyp_cfg, mask=fit_mask,
        warm_starts=((embed_plateau_in_click(fits[Diagnosis.MR], fit_seg), fits[Diagnosis.MR].n_eff_params),),
    )
    ms_init = init_params(Diagnosis.MS, env, fit_seg, cfg.priors)
    mvp_fit = fits[Diagnosis.MVP]
    mvp_params = mvp_fit.params
    # second warm start: click geometry from the fitted click-plateau family,
    # crescendo onset from the prior-based init
    ms_hybrid = ShapeParams(
        tau=(
            mvp_params.tau[0], mvp_params.tau[1],
            min(mvp_params.tau[2], ms_init.tau[3]),
            ms_init.tau[3], mvp_params.tau[3],
        ),
        pi=(mvp_params.pi[0], mvp_params.pi[1], ms_init.pi[2]),
    )
    fits[Diagnosis.MS] = fit_shape(
        Diagnosis.MS, env, fit_seg, ms_init,
        hyp_cfg, mask=fit_mask,
        warm_starts=(
            (embed_click_in_crescendo_tail(mvp_fit, fit_seg), mvp_fit.n_eff_params),
            (ms_hybrid, None),
        ),
    )
    clock("fits", t0)

    t0 = time.perf_counter()
    if seg is not None and mask.bits.any():
        in_seg_rms = float(np.sqrt(np.mean(env.values[mask.bits] ** 2)))
    else:
        in_seg_rms = None
    ranking = rank_hypotheses(
        fits, phase, hyp_cfg,
        segment_present=seg is not None,
        in_segment_rms=in_seg_rms,
        background_rms=background_rms(env),
    )
    warnings_log.extend(ranking.notes)
    for f in fits.values():
        if not f.converged:
            warnings_log.append(f"{f.diagnosis.value}: optimizer stopped before convergence")
    clock("ranking", t0)

    return CaseReport(
        instance_id=instance_id,
        source_path=source_path,
        offset_s=offset_s,
        envelope=env,
        mask=mask,
        events=events,
        phase=phase,
        fits=fits,
        ranking=ranking,
        resolved=ranking.resolved,
        timings_ms=timings,
        warnings=warnings_log,
        waveform_preview=_decimate_preview(w),
    )


def _fit_to_json(f: FittedHypothesis) -> dict:
    return {
        "diagnosis": f.diagnosis.value,
        "init_params": params_to_json(f.diagnosis, f.init_params),
        "params": params_to_json(f.diagnosis, f.params),
        "lack_of_fit": f.lack_of_fit,
        "init_lack_of_fit": f.init_lack_of_fit,
        "phase_compatible": f.phase_compatible,
        "n_free_params": f.n_free_params,
        "n_eff_params": f.n_eff_params,
        "converged": f.converged,
    }


def report_to_json(report: CaseReport) -> dict:
    env = report.envelope
    obj = {
        "schema_version": report.schema_version,
        "instance_id": report.instance_id,
        "source_path": report.source_path,
        "offset_s": report.offset_s,
        "envelope": {
            "values": [round(float(v), 9) for v in env.values],
            "grid_hz": env.grid_hz,
            "t0_s": env.t0_s,
        },
        "mask": mask_to_json(report.mask),
        "events": {
            "s1_time_s": report.events.s1_time_s,
            "s2_time_s": report.events.s2_time_s,
            "systole_interval": list(report.events.systole_interval) if report.events.systole_interval else None,
            "diastole_interval": list(report.events.diastole_interval) if report.events.diastole_interval else None,
        },
        "phase": report.phase.value,
        "fits": {y.value: _fit_to_json(report.fits[y]) for y in DIAGNOSES},
        "ranking": {
            "order": [f.diagnosis.value for f in report.ranking.order],
            "scores": {y.value: report.ranking.scores[y] for y in DIAGNOSES},
            "notes": report.ranking.notes,
        },
        "resolved": report.resolved.value,
        "timings_ms": {k: round(v, 3) for k, v in report.timings_ms.items()},
        "warnings": report.warnings,
    }
    if report.waveform_preview is not None:
        samples, rate = report.waveform_preview
        obj["waveform_preview"] = {
            "samples": [round(float(v), 6) for v in samples],
            "rate_hz": rate,
        }
    return obj


def report_from_json(obj: dict) -> CaseReport:
    env = Envelope(
        values=np.asarray(obj["envelope"]["values"], dtype=np.float64),
        grid_hz=float(obj["envelope"]["grid_hz"]),
        t0_s=float(obj["envelope"]["t0_s"]),
    )
    mrec = obj["mask"]
    bits = np.zeros(int(mrec["len"]), dtype=bool)
    for a, b in mrec["runs"]:
        bits[int(a):int(b)] = True
    mask = Mask(bits=bits, grid_hz=float(mrec["grid_hz"]), t0_s=float(mrec.get("t0_s", 0.0)))
    ev = obj["events"]
    events = HeartEvents(
        s1_time_s=ev["s1_time_s"],
        s2_time_s=ev["s2_time_s"],
        systole_interval=tuple(ev["systole_interval"]) if ev["systole_interval"] else None,
        diastole_interval=tuple(ev["diastole_interval"]) if ev["diastole_interval"] else None,
    )
    grid = env.times()
    fits: dict[Diagnosis, FittedHypothesis] = {}
    for name, frec in obj["fits"].items():
        y = Diagnosis(name)
        _, init_p = params_from_json(frec["init_params"])
        _, p = params_from_json(frec["params"])
        fits[y] = FittedHypothesis(
            diagnosis=y,
            init_params=init_p,
            params=p,
            shape=eval_shape_series(y, p, grid),
            lack_of_fit=float(frec["lack_of_fit"]),
            init_lack_of_fit=float(frec.get("init_lack_of_fit", 0.0)),
            phase_compatible=bool(frec["phase_compatible"]),
            n_free_params=int(frec["n_free_params"]),
            n_eff_params=int(frec.get("n_eff_params", frec["n_free_params"])),
            converged=bool(frec.get("converged", True)),
        )
    ranking = HypothesisRanking(
        order=[fits[Diagnosis(name)] for name in obj["ranking"]["order"]],
        resolved=Diagnosis(obj["resolved"]),
        scores={Diagnosis(k): float(v) for k, v in obj["ranking"]["scores"].items()},
        notes=list(obj["ranking"].get("notes", [])),
    )
    preview = None
    if "waveform_preview" in obj:
        preview = (
            np.asarray(obj["waveform_preview"]["samples"], dtype=np.float64),
            float(obj["waveform_preview"]["rate_hz"]),
        )
    return CaseReport(
        instance_id=obj["instance_id"],
        source_path=obj["source_path"],
        offset_s=float(obj["offset_s"]),
        envelope=env,
        mask=mask,
        events=events,
        phase=Phase(obj["phase"]),
        fits=fits,
        ranking=ranking,
        resolved=Diagnosis(obj["resolved"]),
        timings_ms=dict(obj.get("timings_ms", {})),
        warnings=list(obj.get("warnings", [])),
        waveform_preview=preview,
        schema_version=int(obj["schema_version"]),
    )
