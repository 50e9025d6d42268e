"""Abductive diagnosis of cardiac valvular disease from phonocardiograms.

The pipeline extracts an amplitude envelope from a heart-sound recording,
locates the murmur segment and the S1/S2 events, fits every diagnosis
family's piecewise-linear murmur shape to the segment, ranks the
hypotheses by goodness of fit gated by heart phase, and renders
murmur-diagram explanations.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .config import Config, PriorsConfig, load_config, load_priors
from .explain import CaseRecord, CaseStore, Explanation, ExplanationKind, abductive, contrastive, counterfactual
from .hypothesis import (
    FittedHypothesis,
    HypothesisRanking,
    fit_shape,
    init_params,
    lack_of_fit,
    rank_hypotheses,
    resolve_diagnosis,
)
from .metrics import EvalResult, classify_metrics, dice, segment_param_mse, shape_fit_mse, shape_param_mse
from .pipeline import CaseReport, analyze, report_from_json, report_to_json
from .render import DiagramStyle, render_abductive, render_contrastive, render_counterfactual
from .segmentation import Mask, Segment, load_mask, longest_segment, segment_murmur
from .shapes import (
    DIAGNOSES,
    Diagnosis,
    ShapeParams,
    ShapeSeries,
    eval_shape,
    eval_shape_series,
    param_count,
    validate_params,
)
from .signal import Envelope, HeartEvents, Phase, Waveform, classify_phase, detect_s1_s2, envelope, read_wav, window, write_wav
from .synth import SyntheticCase, generate, generate_corpus

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Config", "PriorsConfig", "load_config", "load_priors",
    "CaseRecord", "CaseStore", "Explanation", "ExplanationKind",
    "abductive", "contrastive", "counterfactual",
    "FittedHypothesis", "HypothesisRanking",
    "fit_shape", "init_params", "lack_of_fit", "rank_hypotheses", "resolve_diagnosis",
    "EvalResult", "classify_metrics", "dice", "segment_param_mse", "shape_fit_mse", "shape_param_mse",
    "CaseReport", "analyze", "report_from_json", "report_to_json",
    "DiagramStyle", "render_abductive", "render_contrastive", "render_counterfactual",
    "Mask", "Segment", "load_mask", "longest_segment", "segment_murmur",
    "DIAGNOSES", "Diagnosis", "ShapeParams", "ShapeSeries",
    "eval_shape", "eval_shape_series", "param_count", "validate_params",
    "Envelope", "HeartEvents", "Phase", "Waveform",
    "classify_phase", "detect_s1_s2", "envelope", "read_wav", "window", "write_wav",
    "SyntheticCase", "generate", "generate_corpus",
    "__version__",
]
