"""Configuration for the analysis pipeline.

A single JSON file configures every stage; any key can also be overridden
from the command line with repeated ``--set section.key=value`` flags.
Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError


@dataclass
class SignalConfig:
    rms_window_ms: float = 10.0
    grid_hz: float = 200.0
    peak_min_prominence: float = 0.4  # fraction of envelope max
    min_peak_separation_s: float = 0.2
    systole_max_s: float = 0.45  # inter-peak gaps longer than this are diastole


@dataclass
class SegmentationConfig:
    threshold_factor: float = 2.0  # multiple of background RMS
    exclusion_halfwidth_ms: float = 60.0  # blanked around each S1/S2 event
    min_duration_ms: float = 50.0
    max_gap_ms: float = 40.0
    # Absolute floor on the threshold (peak-normalized units); keeps clean
    # recordings from marking every nonzero sample as murmur.
    min_threshold: float = 0.02
    # The RMS window smears every murmur boundary by half a window; run edges
    # are trimmed back across that shoulder. Match signal.rms_window_ms / 2.
    edge_trim_halfwidth_ms: float = 5.0


@dataclass
class HypothesisConfig:
    optimizer: str = "nelder-mead"  # or "lbfgs"
    max_iters: int = 500
    obj_tol: float = 1e-10
    parsimony_rho: float = 0.05  # relative fit difference treated as a tie
    softmax_temperature: float = 0.0  # 0 -> median of compatible fits
    free_endpoints: bool = False
    n_gate_factor: float = 1.5  # in-segment RMS below this multiple of background -> N
    blend_weight: float = 0.5
    # Significance level for the nested-model F-test inside fit_shape: a
    # richer family keeps its own optimum only when the extra parameters
    # buy an improvement significant at this level; otherwise the fit
    # collapses to the embedded simpler solution.
    collapse_alpha: float = 0.01


@dataclass
class RenderConfig:
    width_px: int = 880
    height_px: int = 260
    systolic_fill: str = "#d62728"
    diastolic_fill: str = "#8c1515"
    s1s2_fill: str = "#30302e"
    trace_stroke: str = "#9aa0a6"
    show_envelope: bool = True
    background: str = "#ffffff"


@dataclass
class PriorsConfig:
    """Data-driven initialization medians for the diastolic murmur family."""

    ms_median_dtau12_s: float = 0.06
    ms_median_dtau4L_s: float = 0.10


@dataclass
class Config:
    signal: SignalConfig = field(default_factory=SignalConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    hypothesis: HypothesisConfig = field(default_factory=HypothesisConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    priors: PriorsConfig = field(default_factory=PriorsConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if self.signal.rms_window_ms <= 0:
            raise ValidationError("signal.rms_window_ms must be positive")
        if self.signal.grid_hz <= 0:
            raise ValidationError("signal.grid_hz must be positive")
        if self.segmentation.threshold_factor <= 0:
            raise ValidationError("segmentation.threshold_factor must be positive")
        if self.hypothesis.max_iters < 1:
            raise ValidationError("hypothesis.max_iters must be >= 1")
        if not 0.0 <= self.hypothesis.blend_weight <= 1.0:
            raise ValidationError("hypothesis.blend_weight must be in [0, 1]")
        if self.hypothesis.optimizer not in ("nelder-mead", "lbfgs"):
            raise ValidationError(f"unknown optimizer {self.hypothesis.optimizer!r}")
        if self.priors.ms_median_dtau12_s <= 0 or self.priors.ms_median_dtau4L_s <= 0:
            raise ValidationError("priors medians must be positive")


_SECTIONS = ("signal", "segmentation", "hypothesis", "render", "priors")


def _coerce(value, target_type, key):
    if target_type is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
        raise ValidationError(f"{key}: cannot interpret {value!r} as boolean")
    try:
        return target_type(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{key}: {exc}") from exc


def _apply_section(section_cfg, section_name: str, values: dict) -> None:
    fields = {f.name: f for f in dataclasses.fields(section_cfg)}
    for key, value in values.items():
        if key not in fields:
            raise ValidationError(f"unknown config key {section_name}.{key}")
        target_type = fields[key].type
        if isinstance(target_type, str):  # from __future__ annotations
            target_type = {"float": float, "int": int, "str": str, "bool": bool}[target_type]
        setattr(section_cfg, key, _coerce(value, target_type, f"{section_name}.{key}"))


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> Config:
    """Build a Config from an optional JSON file plus ``section.key=value`` overrides."""
    cfg = Config()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config file must contain a JSON object")
        for section, values in data.items():
            if section not in _SECTIONS:
                raise ValidationError(f"unknown config section {section!r}")
            if not isinstance(values, dict):
                raise ValidationError(f"config section {section!r} must be an object")
            _apply_section(getattr(cfg, section), section, values)
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError(f"override {item!r} must look like section.key=value")
        dotted, value = item.split("=", 1)
        if dotted.count(".") != 1:
            raise ValidationError(f"override key {dotted!r} must look like section.key")
        section, key = dotted.split(".")
        if section not in _SECTIONS:
            raise ValidationError(f"unknown config section {section!r}")
        _apply_section(getattr(cfg, section), section, {key: value})
    cfg.validate()
    return cfg


def load_priors(path: str | Path) -> PriorsConfig:
    """Read an initialization-priors file: {"ms_median_dtau12_s": ..., "ms_median_dtau4L_s": ...}."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read priors file {path}: {exc}") from exc
    priors = PriorsConfig()
    if not isinstance(data, dict):
        raise ValidationError("priors file must contain a JSON object")
    _apply_section(priors, "priors", data)
    if priors.ms_median_dtau12_s <= 0 or priors.ms_median_dtau4L_s <= 0:
        raise ValidationError("priors medians must be positive")
    return priors
