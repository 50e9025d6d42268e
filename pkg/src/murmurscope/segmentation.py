"""Deterministic murmur segmentation on the amplitude envelope.

Marks grid points that rise clearly above the background level, blanks
the S1/S2 neighborhoods so valve sounds are never mistaken for murmurs,
and cleans the mask morphologically. When several candidate runs remain,
the longest one is taken as the murmur segment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SegmentationConfig
from .errors import AlignmentError, FormatError
from .signal import Envelope, HeartEvents


@dataclass
class Mask:
    """Boolean murmur mask aligned to an envelope grid."""

    bits: np.ndarray
    grid_hz: float
    t0_s: float = 0.0

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)


@dataclass(frozen=True)
class Segment:
    """Candidate murmur interval [start_s, end_s)."""

    start_s: float
    end_s: float

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def midpoint_s(self) -> float:
        return 0.5 * (self.start_s + self.end_s)


def runs(bits: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous true runs as half-open (start, end) index pairs."""
    bits = np.asarray(bits, dtype=bool)
    if bits.size == 0:
        return []
    padded = np.concatenate(([False], bits, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[0::2], edges[1::2]))


def background_rms(e: Envelope) -> float:
    """RMS of the lowest-quartile envelope values (quiet-floor estimate)."""
    v = np.sort(e.values)
    q = v[: max(1, len(v) // 4)]
    return float(np.sqrt(np.mean(q * q)))


def exclusion_bits(e: Envelope, ev: HeartEvents, halfwidth_ms: float) -> np.ndarray:
    """True where the grid lies within +-halfwidth of a detected S1/S2 event."""
    t = e.times()
    out = np.zeros(len(t), dtype=bool)
    half = halfwidth_ms * 1e-3
    for event in (ev.s1_time_s, ev.s2_time_s):
        if event is not None:
            out |= np.abs(t - event) <= half
    return out


def threshold_mask(e: Envelope, ev: HeartEvents, config: SegmentationConfig | None = None) -> Mask:
    """Pre-morphology mask: envelope above threshold, S1/S2 neighborhoods blanked.

    The threshold is ``threshold_factor`` times the background RMS, floored
    at ``min_threshold`` so noise-free recordings do not mark every nonzero
    point. Pointwise anti-monotone in the threshold factor.
    """
    cfg = config or SegmentationConfig()
    thr = max(cfg.threshold_factor * background_rms(e), cfg.min_threshold)
    bits = e.values > thr
    bits &= ~exclusion_bits(e, ev, cfg.exclusion_halfwidth_ms)
    return Mask(bits=bits, grid_hz=e.grid_hz, t0_s=e.t0_s)


def trim_steps(grid_hz: float, halfwidth_ms: float) -> int:
    """Grid steps covered by the RMS window's half-width boundary smear."""
    return max(int(round(halfwidth_ms * 1e-3 * grid_hz)), 1)


def segment_murmur(e: Envelope, ev: HeartEvents, config: SegmentationConfig | None = None) -> Mask:
    """Threshold, then drop short runs, fill short gaps, trim smeared edges,
    and re-blank the event neighborhoods.

    The envelope's RMS window smears each true murmur boundary outward by
    about half a window, so every surviving run is pulled in by the
    corresponding number of grid steps per side.
    """
    cfg = config or SegmentationConfig()
    mask = threshold_mask(e, ev, cfg)
    bits = mask.bits
    min_len = int(round(cfg.min_duration_ms * 1e-3 * e.grid_hz))
    for start, end in runs(bits):
        if end - start < min_len:
            bits[start:end] = False
    max_gap = int(round(cfg.max_gap_ms * 1e-3 * e.grid_hz))
    kept = runs(bits)
    for (_, prev_end), (next_start, _) in zip(kept, kept[1:]):
        if next_start - prev_end <= max_gap:
            bits[prev_end:next_start] = True
    k = trim_steps(e.grid_hz, cfg.edge_trim_halfwidth_ms)
    for start, end in runs(bits):
        if end - start >= 2 * k + 3:
            bits[start : start + k] = False
            bits[end - k : end] = False
    bits &= ~exclusion_bits(e, ev, cfg.exclusion_halfwidth_ms)
    return Mask(bits=bits, grid_hz=e.grid_hz, t0_s=e.t0_s)


def longest_segment(m: Mask) -> Segment | None:
    """Longest true run in seconds; ties go to the earliest run; None if empty."""
    best = None
    for start, end in runs(m.bits):
        if best is None or end - start > best[1] - best[0]:
            best = (start, end)
    if best is None:
        return None
    return Segment(start_s=m.t0_s + best[0] / m.grid_hz, end_s=m.t0_s + best[1] / m.grid_hz)


def restrict_to_segment(m: Mask, seg: Segment) -> Mask:
    """Mask with only the bits inside the given segment retained."""
    t = m.t0_s + np.arange(len(m.bits)) / m.grid_hz
    keep = (t >= seg.start_s) & (t < seg.end_s)
    return Mask(bits=m.bits & keep, grid_hz=m.grid_hz, t0_s=m.t0_s)


def shrink_runs(m: Mask, k: int, keep_at_least: int = 5) -> Mask:
    """Pull every run in by ``k`` steps per side (runs too short are kept whole).

    Used to build the fitting mask: the outermost in-mask points straddle
    the RMS window's boundary smear and would otherwise bias the fits.
    """
    bits = m.bits.copy()
    for start, end in runs(bits):
        if end - start >= 2 * k + keep_at_least:
            bits[start : start + k] = False
            bits[end - k : end] = False
    return Mask(bits=bits, grid_hz=m.grid_hz, t0_s=m.t0_s)


def mask_to_json(m: Mask) -> dict:
    """Run-length JSON form (compact and grid-tagged)."""
    return {
        "runs": [[int(a), int(b)] for a, b in runs(m.bits)],
        "len": int(len(m.bits)),
        "grid_hz": float(m.grid_hz),
        "t0_s": float(m.t0_s),
    }


def load_mask(path: str | Path, grid_hz: float | None = None, expected_len: int | None = None) -> Mask:
    """Load a mask from JSON: either a bare 0/1 array or a run-length record.

    A bare array carries no grid, so ``grid_hz`` must be supplied by the
    caller. Declared or expected lengths/grids that do not match raise
    AlignmentError.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read mask file {path}: {exc}") from exc

    if isinstance(data, list):
        if not all(v in (0, 1, True, False) for v in data):
            raise FormatError(f"{path}: mask array must contain only 0/1 values")
        if grid_hz is None:
            raise AlignmentError(f"{path}: bare mask array needs an explicit grid_hz")
        mask = Mask(bits=np.asarray(data, dtype=bool), grid_hz=grid_hz)
    elif isinstance(data, dict) and "runs" in data:
        try:
            n = int(data["len"])
            declared_grid = float(data.get("grid_hz", grid_hz if grid_hz is not None else 0.0))
            t0 = float(data.get("t0_s", 0.0))
            bits = np.zeros(n, dtype=bool)
            for a, b in data["runs"]:
                if not 0 <= int(a) <= int(b) <= n:
                    raise AlignmentError(f"{path}: run [{a}, {b}) outside mask of length {n}")
                bits[int(a) : int(b)] = True
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed run-length mask record: {exc}") from exc
        if declared_grid <= 0:
            raise AlignmentError(f"{path}: run-length mask needs a positive grid_hz")
        if grid_hz is not None and abs(declared_grid - grid_hz) > 1e-9:
            raise AlignmentError(
                f"{path}: mask grid {declared_grid} Hz does not match target grid {grid_hz} Hz"
            )
        mask = Mask(bits=bits, grid_hz=declared_grid, t0_s=t0)
    else:
        raise FormatError(f"{path}: expected a JSON 0/1 array or a run-length record")

    if expected_len is not None and len(mask.bits) != expected_len:
        raise AlignmentError(
            f"{path}: mask length {len(mask.bits)} does not match target length {expected_len}"
        )
    return mask
