"""Murmur-diagram SVG rendering.

Follows the clinical drawing conventions: the sound trace with amplitude
over time, S1/S2 drawn as tall dark rectangles, and the murmur shape as a
filled red region between them (dark red when diastolic). Output is
self-contained SVG 1.1 with deterministic formatting, so identical inputs
render byte-identical documents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RenderConfig
from .pipeline import CaseReport
from .segmentation import runs
from .shapes import Diagnosis, eval_shape
from .signal import Phase

S1S2_HALFWIDTH_S = 0.03
RAISE_FILL = "#3b7ea1"
LOWER_FILL = "#d99100"

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 46, 12, 26, 20


@dataclass
class DiagramStyle:
    width_px: int = 880
    height_px: int = 260
    systolic_fill: str = "#d62728"
    diastolic_fill: str = "#8c1515"
    s1s2_fill: str = "#30302e"
    trace_stroke: str = "#9aa0a6"
    show_envelope: bool = True
    background: str = "#ffffff"

    @classmethod
    def from_config(cls, cfg: RenderConfig) -> "DiagramStyle":
        return cls(
            width_px=cfg.width_px,
            height_px=cfg.height_px,
            systolic_fill=cfg.systolic_fill,
            diastolic_fill=cfg.diastolic_fill,
            s1s2_fill=cfg.s1s2_fill,
            trace_stroke=cfg.trace_stroke,
            show_envelope=cfg.show_envelope,
            background=cfg.background,
        )


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


class _Scale:
    """Affine mapping from (time, amplitude) to pixel coordinates."""

    def __init__(self, t_lo, t_hi, a_lo, a_hi, width, height, y_off=0.0):
        self.t_lo, self.t_hi = t_lo, t_hi
        self.a_lo, self.a_hi = a_lo, a_hi
        self.x0, self.x1 = _MARGIN_L, width - _MARGIN_R
        self.y0, self.y1 = y_off + height - _MARGIN_B, y_off + _MARGIN_T

    def x(self, t: float) -> float:
        return self.x0 + (t - self.t_lo) / (self.t_hi - self.t_lo) * (self.x1 - self.x0)

    def y(self, a: float) -> float:
        return self.y0 + (a - self.a_lo) / (self.a_hi - self.a_lo) * (self.y1 - self.y0)


def _polyline(points, stroke, width="1.2", dasharray=None) -> str:
    pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
    dash = f' stroke-dasharray="{dasharray}"' if dasharray else ""
    return f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>'


def _polygon(points, fill, opacity="0.85") -> str:
    pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
    return f'<polygon points="{pts}" fill="{fill}" fill-opacity="{opacity}" stroke="none"/>'


def _rect(x, y, w, h, fill, opacity="1.0") -> str:
    return (
        f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
        f'fill="{fill}" fill-opacity="{opacity}"/>'
    )


def _text(x, y, s, size=12, fill="#202020", anchor="start") -> str:
    return (
        f'<text x="{_f(x)}" y="{_f(y)}" font-family="monospace" font-size="{size}" '
        f'fill="{fill}" text-anchor="{anchor}">{s}</text>'
    )


def _document(width: int, height: int, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    return head + "\n" + "\n".join(body) + "\n</svg>\n"


def _event_bands(sc: _Scale, report: CaseReport, style: DiagramStyle) -> list[str]:
    parts = []
    for label, t in (("S1", report.events.s1_time_s), ("S2", report.events.s2_time_s)):
        if t is None:
            continue
        x0 = sc.x(max(t - S1S2_HALFWIDTH_S, sc.t_lo))
        x1 = sc.x(min(t + S1S2_HALFWIDTH_S, sc.t_hi))
        parts.append(_rect(x0, sc.y1, x1 - x0, sc.y0 - sc.y1, style.s1s2_fill, opacity="0.9"))
        parts.append(_text((x0 + x1) / 2, sc.y1 - 4, label, size=10, anchor="middle"))
    return parts


def shape_polygon_points(report: CaseReport, fit, sc: _Scale):
    """Vertices of the murmur shape fill; x-extent is exactly [tau1, tauL] scaled."""
    p = fit.params
    if not p.tau:
        return []
    t1, tL = p.tau[0], p.tau[-1]
    t = report.envelope.times()
    inner = (t > t1) & (t < tL)
    pts = [(sc.x(t1), sc.y(0.0)), (sc.x(t1), sc.y(eval_shape(fit.diagnosis, p, t1)))]
    pts += [(sc.x(ti), sc.y(vi)) for ti, vi in zip(t[inner], fit.shape.values[inner])]
    end_val = eval_shape(fit.diagnosis, p, tL - 1e-9)
    pts.append((sc.x(tL), sc.y(end_val)))
    pts.append((sc.x(tL), sc.y(0.0)))
    return pts


def _fit_fill(report: CaseReport, style: DiagramStyle) -> str:
    return style.diastolic_fill if report.phase is Phase.Diastolic else style.systolic_fill


def render_abductive(report: CaseReport, style: DiagramStyle | None = None) -> str:
    """One diagram: trace, envelope, S1/S2 bands and the winning shape fill."""
    style = style or DiagramStyle()
    env = report.envelope
    t_lo, t_hi = env.t0_s, env.t0_s + env.duration_s
    sc = _Scale(t_lo, t_hi, -1.1, 1.1, style.width_px, style.height_px)
    body = [_rect(0, 0, style.width_px, style.height_px, style.background)]
    body += _event_bands(sc, report, style)

    if report.waveform_preview is not None:
        samples, rate = report.waveform_preview
        tw = env.t0_s + np.arange(len(samples)) / rate
        body.append(_polyline(
            ((sc.x(t), sc.y(v)) for t, v in zip(tw, samples)), style.trace_stroke, width="0.8"
        ))
    if style.show_envelope:
        body.append(_polyline(
            ((sc.x(t), sc.y(v)) for t, v in zip(env.times(), env.values)), "#1a1a1a"
        ))

    best = report.fits[report.resolved]
    if report.resolved is not Diagnosis.N:
        pts = shape_polygon_points(report, best, sc)
        if pts:
            body.append(_polygon(pts, _fit_fill(report, style)))
        label = f"{report.resolved.value} ({report.phase.value})  d={best.lack_of_fit:.3g}"
    else:
        label = "N (no murmur)"
    body.append(_text(_MARGIN_L, 16, label))
    body.append(_polyline([(sc.x(t_lo), sc.y(0)), (sc.x(t_hi), sc.y(0))], "#cccccc", width="0.5"))
    return _document(style.width_px, style.height_px, body)


def render_contrastive(report: CaseReport, style: DiagramStyle | None = None) -> str:
    """One panel per hypothesis (ranking order) with fit quality annotations."""
    style = style or DiagramStyle()
    env = report.envelope
    t_lo, t_hi = env.t0_s, env.t0_s + env.duration_s
    panel_h = style.height_px
    total_h = panel_h * len(report.ranking.order)
    body = [_rect(0, 0, style.width_px, total_h, style.background)]
    for i, fit in enumerate(report.ranking.order):
        y_off = i * panel_h
        sc = _Scale(t_lo, t_hi, -0.05, 1.1, style.width_px, panel_h, y_off=y_off)
        body += _event_bands(sc, report, style)
        body.append(_polyline(
            ((sc.x(t), sc.y(v)) for t, v in zip(env.times(), env.values)), "#1a1a1a"
        ))
        if fit.diagnosis is not Diagnosis.N:
            pts = shape_polygon_points(report, fit, sc)
            if pts:
                body.append(_polygon(pts, _fit_fill(report, style), opacity="0.6"))
        marker = " *" if fit.diagnosis is report.resolved else ""
        body.append(_text(_MARGIN_L, y_off + 16, f"{fit.diagnosis.value}{marker}  d={fit.lack_of_fit:.3g}"))
        if not fit.phase_compatible:
            body.append(_rect(_MARGIN_L, y_off + _MARGIN_T, style.width_px - _MARGIN_L - _MARGIN_R,
                              panel_h - _MARGIN_T - _MARGIN_B, "#888888", opacity="0.25"))
            body.append(_text(style.width_px - _MARGIN_R, y_off + 16,
                              "phase incompatible", fill="#b00000", anchor="end"))
    return _document(style.width_px, total_h, body)


def render_counterfactual(expl, style: DiagramStyle | None = None) -> str:
    """Envelope with signed shading: where amplitude should be higher or lower."""
    style = style or DiagramStyle()
    payload = expl.payload
    values = np.asarray(payload["envelope"], dtype=np.float64)
    delta = np.asarray(payload["delta"], dtype=np.float64)
    grid_hz = float(payload["grid_hz"])
    t0 = float(payload["t0_s"])
    t = t0 + np.arange(len(values)) / grid_hz
    t_lo, t_hi = t0, t0 + len(values) / grid_hz
    sc = _Scale(t_lo, t_hi, -0.05, 1.1, style.width_px, style.height_px)
    body = [_rect(0, 0, style.width_px, style.height_px, style.background)]
    body.append(_polyline(((sc.x(ti), sc.y(v)) for ti, v in zip(t, values)), "#1a1a1a"))

    target = values + delta
    for sign, fill in ((1, RAISE_FILL), (-1, LOWER_FILL)):
        signed = (delta * sign) > 1e-12
        for a, b in runs(signed):
            seg_t = t[a:b]
            top = target[a:b] if sign > 0 else values[a:b]
            bot = values[a:b] if sign > 0 else target[a:b]
            pts = [(sc.x(ti), sc.y(v)) for ti, v in zip(seg_t, top)]
            pts += [(sc.x(ti), sc.y(v)) for ti, v in zip(seg_t[::-1], bot[::-1])]
            if len(pts) >= 3:
                body.append(_polygon(pts, fill, opacity="0.55"))
    body.append(_polyline(((sc.x(ti), sc.y(v)) for ti, v in zip(t, target)),
                          "#444444", width="1.0", dasharray="4,3"))
    body.append(_text(_MARGIN_L, 16,
                      f"counterfactual: {payload['resolved']} -&gt; {payload['target']}"))
    body.append(_text(style.width_px - _MARGIN_R, 16,
                      "shaded: higher (blue) / lower (orange)", size=10, anchor="end"))
    return _document(style.width_px, style.height_px, body)
