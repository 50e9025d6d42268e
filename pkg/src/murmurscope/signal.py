"""Audio ingestion and heart-sound event detection.

Covers the front half of the pipeline: reading PCM WAV recordings,
slicing fixed-length instances, extracting the amplitude envelope,
locating the S1/S2 valve sounds and classifying systolic vs diastolic
timing for a murmur segment.
"""

from __future__ import annotations

import enum
import wave
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.signal

from .config import SignalConfig
from .errors import EmptyInputError, FormatError


@dataclass
class Waveform:
    """Mono displacement samples normalized to [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass
class Envelope:
    """Amplitude-over-time series on a uniform grid (non-negative values)."""

    values: np.ndarray
    grid_hz: float
    t0_s: float = 0.0

    def times(self) -> np.ndarray:
        return self.t0_s + np.arange(len(self.values)) / self.grid_hz

    @property
    def duration_s(self) -> float:
        return len(self.values) / self.grid_hz

    def index_at(self, t_s: float) -> int:
        """Nearest grid index, clipped to the valid range."""
        i = int(round((t_s - self.t0_s) * self.grid_hz))
        return min(max(i, 0), len(self.values) - 1)

    def value_at(self, t_s: float) -> float:
        return float(self.values[self.index_at(t_s)])


@dataclass
class HeartEvents:
    """Detected S1/S2 times and the phase intervals they bound."""

    s1_time_s: float | None = None
    s2_time_s: float | None = None
    systole_interval: tuple[float, float] | None = None
    diastole_interval: tuple[float, float] | None = None


class Phase(enum.Enum):
    Systolic = "systolic"
    Diastolic = "diastolic"
    Unknown = "unknown"


_FULL_SCALE_16 = 32768.0
_FULL_SCALE_8 = 128.0


def read_wav(path: str | Path) -> Waveform:
    """Read a PCM WAV file (8- or 16-bit) into a normalized Waveform.

    Multi-channel files are reduced to channel 0 with a warning.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except wave.Error as exc:
        raise FormatError(f"{path}: malformed WAV header ({exc})") from exc
    except EOFError as exc:
        raise FormatError(f"{path}: truncated WAV file") from exc

    if n_frames == 0 or len(raw) == 0:
        raise EmptyInputError(f"{path}: WAV file contains no samples")
    if sampwidth == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _FULL_SCALE_16
    elif sampwidth == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / _FULL_SCALE_8
    else:
        raise FormatError(f"{path}: unsupported sample width {sampwidth * 8} bit (PCM 8/16-bit only)")
    if n_channels > 1:
        warnings.warn(f"{path}: {n_channels} channels; using channel 0", stacklevel=2)
        data = data[::n_channels].copy()
    return Waveform(samples=data, sample_rate_hz=rate)


def write_wav(path: str | Path, w: Waveform) -> None:
    """Write a Waveform as 16-bit PCM WAV.

    Quantization is the exact inverse of read_wav's normalization, so
    samples that are already integer multiples of 1/32768 round-trip
    bit-exactly.
    """
    q = np.clip(np.round(w.samples * _FULL_SCALE_16), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(w.sample_rate_hz))
        wf.writeframes(q.tobytes())


def quantize_to_wav_grid(samples: np.ndarray) -> np.ndarray:
    """Snap float samples to the 16-bit grid used by write_wav/read_wav."""
    q = np.clip(np.round(np.asarray(samples, dtype=np.float64) * _FULL_SCALE_16), -32768, 32767)
    return q / _FULL_SCALE_16


def window(w: Waveform, length_s: float = 1.0, stride_s: float = 0.1) -> list[Waveform]:
    """Slice contiguous fixed-length instances; a trailing partial window is dropped."""
    length = int(round(length_s * w.sample_rate_hz))
    stride = int(round(stride_s * w.sample_rate_hz))
    if length < 1:
        raise ValueError("window length must cover at least one sample")
    if stride < 1:
        raise ValueError("stride must be positive")
    n = len(w.samples)
    if n < length:
        return []
    count = (n - length) // stride + 1
    return [
        Waveform(samples=w.samples[i * stride : i * stride + length], sample_rate_hz=w.sample_rate_hz)
        for i in range(count)
    ]


def moving_mean(x: np.ndarray, win_samples: int) -> np.ndarray:
    """Centered moving average; windows shrink at the edges instead of padding."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    win = max(int(win_samples), 1)
    half = win // 2
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def moving_rms(x: np.ndarray, win_samples: int) -> np.ndarray:
    """Centered moving RMS; windows shrink at the edges instead of padding."""
    x = np.asarray(x, dtype=np.float64)
    return np.sqrt(moving_mean(x * x, win_samples))


def envelope(w: Waveform, rms_window_ms: float = 25.0, out_grid_hz: float = 100.0) -> Envelope:
    """Amplitude envelope: moving RMS resampled to the analysis grid, peak-normalized.

    All-zero input yields an all-zero envelope (no normalization blow-up).
    """
    if rms_window_ms <= 0:
        raise ValueError("rms_window_ms must be positive")
    if out_grid_hz > w.sample_rate_hz:
        raise ValueError("analysis grid cannot be finer than the sample rate")
    win = max(int(round(rms_window_ms * 1e-3 * w.sample_rate_hz)), 1)
    rms = moving_rms(w.samples, win)
    n_out = int(np.floor(len(w.samples) / w.sample_rate_hz * out_grid_hz))
    t_out = np.arange(n_out) / out_grid_hz
    src = np.minimum(np.round(t_out * w.sample_rate_hz).astype(int), len(rms) - 1)
    values = rms[src]
    peak = values.max() if n_out else 0.0
    if peak > 0:
        values = values / peak
    return Envelope(values=values, grid_hz=out_grid_hz, t0_s=0.0)


def detect_s1_s2(e: Envelope, config: SignalConfig | None = None) -> HeartEvents:
    """Locate the two dominant envelope peaks and assign S1/S2 by gap length.

    The two most prominent peaks separated by at least
    ``min_peak_separation_s`` become candidates. A short inter-peak gap
    (<= ``systole_max_s``) is systole, so the first peak is S1; a long gap
    is diastole, so the first peak is S2 (resting systole is the shorter
    phase). The phase interval after the second peak runs to the end of
    the instance.
    """
    cfg = config or SignalConfig()
    if len(e.values) == 0:
        raise EmptyInputError("empty envelope")
    peak = float(e.values.max())
    if peak <= 0:
        return HeartEvents()
    distance = max(int(round(cfg.min_peak_separation_s * e.grid_hz)), 1)
    idx, props = scipy.signal.find_peaks(
        e.values, prominence=cfg.peak_min_prominence * peak, distance=distance
    )
    if len(idx) < 2:
        return HeartEvents()
    top2 = idx[np.argsort(props["prominences"])[::-1][:2]]
    first, second = sorted(top2)
    t_first = e.t0_s + first / e.grid_hz
    t_second = e.t0_s + second / e.grid_hz
    t_end = e.t0_s + e.duration_s
    if t_second - t_first <= cfg.systole_max_s:
        ev = HeartEvents(s1_time_s=t_first, s2_time_s=t_second, systole_interval=(t_first, t_second))
        if t_second < t_end:
            ev.diastole_interval = (t_second, t_end)
    else:
        ev = HeartEvents(s1_time_s=t_second, s2_time_s=t_first, diastole_interval=(t_first, t_second))
        if t_second < t_end:
            ev.systole_interval = (t_second, t_end)
    return ev


def classify_phase(segment, ev: HeartEvents) -> Phase:
    """Phase of a murmur segment by midpoint containment (half-open intervals)."""
    mid = 0.5 * (segment.start_s + segment.end_s)
    if ev.systole_interval and ev.systole_interval[0] <= mid < ev.systole_interval[1]:
        return Phase.Systolic
    if ev.diastole_interval and ev.diastole_interval[0] <= mid < ev.diastole_interval[1]:
        return Phase.Diastolic
    return Phase.Unknown
