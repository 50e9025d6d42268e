"""Synthetic phonocardiogram generator with exact ground truth.

Builds 1-second instances for every diagnosis family: an analytic
amplitude profile (S1/S2 bumps plus the family's murmur shape placed in
the correct heart phase), realized as band-limited noise modulated by
that profile, with optional additive noise at a requested SNR.

Fidelity details that make the generated truth recoverable end-to-end:

* The S1 bump has a flat top wider than the analyzer's RMS window, so
  peak normalization of the extracted envelope has an exact 1.0 anchor.
* The noise carrier is a constant-modulus random-FM tone wandering across
  the band, so its short-time power is flat and the extracted envelope
  tracks the profile rather than the carrier's fluctuations.
* The squared profile is pre-compensated for the RMS window's smoothing
  with a truncated Neumann series of the analyzer's own boxcar (applying
  B to E^2 - (B-I)E^2 + (B-I)^2 E^2 leaves only a third-order kink
  residual), so murmur slopes and click apexes survive envelope
  extraction essentially undistorted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SignalConfig
from .errors import ValidationError
from .segmentation import Mask
from .shapes import Diagnosis, ShapeParams, eval_shape_series, kind_index, validate_params
from .signal import Envelope, Phase, Waveform, moving_mean, quantize_to_wav_grid

SAMPLE_RATE_HZ = 8000
INSTANCE_S = 1.0
CARRIER_BAND_HZ = (200.0, 400.0)
PRE_SCALE = 0.2  # headroom so the carrier's instantaneous peaks never clip
PRECOMP_TERMS = 2  # Neumann terms in the boxcar pre-inverse

# Placement geometry (seconds). Murmurs keep clear of the S1/S2
# neighborhoods so the segmenter's event exclusion cannot clip them.
S1_RANGE = (0.08, 0.13)
SYSTOLE_RANGE = (0.28, 0.40)
EVENT_GUARD_S = 0.075
END_MARGIN_S = 0.06
OCCUPANCY_RANGE = (0.70, 0.95)

S1_AMP = 1.0
S2_AMP = 0.9
S1_FLAT_HALF_S = 0.016
S1_SHOULDER_SIGMA_S = 0.010
S2_SIGMA_S = 0.012
BUMP_TRUNC_SIGMAS = 4.0


@dataclass
class SyntheticCase:
    """One generated instance with full ground truth."""

    waveform: Waveform
    true_envelope: Envelope
    true_mask: Mask
    true_params: ShapeParams | None
    true_diagnosis: Diagnosis
    true_phase: Phase
    seed: int
    snr_db: float
    s1_time_s: float
    s2_time_s: float
    measured_snr_db: float


def _bump_profile(t: np.ndarray, center: float, amp: float, flat_half: float, sigma: float) -> np.ndarray:
    """Flat-top bump with Gaussian shoulders (truncated support)."""
    u = np.abs(t - center) - flat_half
    out = np.zeros_like(t)
    out[u <= 0] = amp
    sh = (u > 0) & (u <= BUMP_TRUNC_SIGMAS * sigma)
    out[sh] = amp * np.exp(-0.5 * (u[sh] / sigma) ** 2)
    return out


def _profile(t: np.ndarray, y: Diagnosis, p: ShapeParams | None, s1: float, s2: float) -> np.ndarray:
    """Exact amplitude profile: S1/S2 bumps plus the murmur shape."""
    a = _bump_profile(t, s1, S1_AMP, S1_FLAT_HALF_S, S1_SHOULDER_SIGMA_S)
    a += _bump_profile(t, s2, S2_AMP, 0.0, S2_SIGMA_S)
    if p is not None and y is not Diagnosis.N:
        a += eval_shape_series(y, p, t).values
    return a


def carrier_lattice_hz(sample_rate_hz: int, rms_win_samples: int,
                       band_hz: tuple[float, float] = CARRIER_BAND_HZ) -> np.ndarray:
    """In-band tone frequencies whose squared wave window-averages exactly.

    For an N-sample centered window, the discrete sum of cos(2*theta) over
    any N consecutive samples of a tone vanishes identically when the
    frequency is a multiple of fs/(2N) (a Dirichlet null). A constant-
    modulus tone at such a frequency therefore has moving RMS exactly 1
    everywhere, for every window position and phase.
    """
    n_win = 2 * (rms_win_samples // 2) + 1
    base = sample_rate_hz / (2.0 * n_win)
    m = np.arange(int(np.ceil(band_hz[0] / base)), int(np.floor(band_hz[1] / base)) + 1)
    return m * base


def flattened_carrier(
    rng: np.random.Generator,
    n_samples: int,
    sample_rate_hz: int,
    rms_win_samples: int,
    band_hz: tuple[float, float] = CARRIER_BAND_HZ,
    hop_every_s: float = 0.15,
    keep_clear: tuple[tuple[float, float], ...] = (),
) -> np.ndarray:
    """Constant-modulus in-band carrier with unit short-time RMS.

    A phase-continuous tone hopping between Dirichlet-null frequencies of
    the analyzer's RMS window (see carrier_lattice_hz), so its moving RMS
    is exactly 1 away from hop instants. Dividing filtered noise by its
    own moving RMS cannot achieve this (the correction never converges for
    narrowband noise), which is why the carrier is built this way. Hops
    are suppressed inside ``keep_clear`` time intervals (the murmur), so
    the modulated envelope there is ripple-free.
    """
    lattice = carrier_lattice_hz(sample_rate_hz, rms_win_samples, band_hz)
    if len(lattice) == 0:
        raise ValueError("no window-exact carrier frequencies inside the band")
    hop_step = max(int(round(hop_every_s * sample_rate_hz)), 1)
    guard = 2 * (rms_win_samples // 2) + 1
    f = np.empty(n_samples)
    pos = 0
    current = float(rng.choice(lattice))
    while pos < n_samples:
        jitter = int(rng.integers(-hop_step // 4, hop_step // 4 + 1))
        end = min(pos + hop_step + jitter, n_samples)
        f[pos:end] = current
        nxt = float(rng.choice(lattice))
        t_hop = end / sample_rate_hz
        blocked = any(lo - guard / sample_rate_hz <= t_hop <= hi + guard / sample_rate_hz
                      for lo, hi in keep_clear)
        if not blocked:
            current = nxt
        pos = end
    theta = 2.0 * np.pi * np.cumsum(f) / sample_rate_hz + rng.uniform(0.0, 2.0 * np.pi)
    return np.sqrt(2.0) * np.cos(theta)


def _sample_murmur_interval(rng, lo: float, hi: float) -> tuple[float, float]:
    occ = rng.uniform(*OCCUPANCY_RANGE)
    length = occ * (hi - lo)
    start = lo + rng.uniform(0.0, (hi - lo) - length)
    return start, start + length


def _sample_params(y: Diagnosis, rng, s1: float, s2: float) -> ShapeParams | None:
    if y is Diagnosis.N:
        return None
    if y is Diagnosis.MS:
        lo, hi = s2 + EVENT_GUARD_S, INSTANCE_S - END_MARGIN_S
    else:
        lo, hi = s1 + EVENT_GUARD_S, s2 - EVENT_GUARD_S
    t1, tL = _sample_murmur_interval(rng, lo, hi)
    length = tL - t1

    if y is Diagnosis.MR:
        return ShapeParams(tau=(t1, tL), pi=(rng.uniform(0.10, 0.30),))

    if y is Diagnosis.AS:
        d12 = max(rng.uniform(0.30, 0.45) * length, 0.03)
        t2 = t1 + d12
        p0 = rng.uniform(0.04, 0.12)
        apex = rng.uniform(0.35, 0.60)
        end_val = rng.uniform(0.03, 0.10)
        p1 = (apex - p0) / d12
        p2 = (apex - end_val) / (tL - t2)
        return ShapeParams(tau=(t1, t2, tL), pi=(p0, p1, p2))

    # click families: symmetric click returning to the plateau level
    d12 = rng.uniform(0.035, 0.06)
    d12 = min(d12, (length - 0.05) / 2.0)
    d12 = max(d12, 0.02)
    t2 = t1 + d12
    t3 = t1 + 2.0 * d12
    p0 = rng.uniform(0.08, 0.28)
    rise = rng.uniform(0.18, min(0.40, 0.70 - p0))
    p1 = rise / d12

    if y is Diagnosis.MVP:
        return ShapeParams(tau=(t1, t2, t3, tL), pi=(p0, p1))

    d4L = rng.uniform(0.06, 0.14)
    d4L = min(d4L, tL - t3 - 0.04)
    t4 = tL - d4L
    # keep the presystolic crescendo softer than the opening click so the
    # click apex stays the in-segment maximum
    end_rise = rng.uniform(0.10, max(min(0.30, 0.60 - p0, rise - 0.05), 0.101))
    p2 = end_rise / d4L
    return ShapeParams(tau=(t1, t2, t3, t4, tL), pi=(p0, p1, p2))


def _merge_overrides(y: Diagnosis, sampled: ShapeParams | None, overrides) -> ShapeParams | None:
    if overrides is None:
        return sampled
    if isinstance(overrides, ShapeParams):
        merged = overrides
    elif isinstance(overrides, dict):
        base_tau = sampled.tau if sampled is not None else ()
        base_pi = sampled.pi if sampled is not None else ()
        merged = ShapeParams(
            tau=tuple(overrides.get("tau", base_tau)), pi=tuple(overrides.get("pi", base_pi))
        )
    else:
        raise ValidationError("overrides must be ShapeParams or a {'tau':..., 'pi':...} dict")
    violations = validate_params(y, merged)
    if violations:
        raise ValidationError("override parameters invalid: " + "; ".join(violations))
    if merged.tau and (merged.tau[0] < 0.0 or merged.tau[-1] > INSTANCE_S):
        raise ValidationError("override breakpoints fall outside the instance")
    return merged


def generate(
    y: Diagnosis,
    overrides=None,
    snr_db: float = math.inf,
    seed: int = 0,
    sig_cfg: SignalConfig | None = None,
) -> SyntheticCase:
    """Generate one fully-determined synthetic instance for diagnosis ``y``."""
    if not (math.isfinite(snr_db) or snr_db == math.inf):
        raise ValidationError("snr_db must be finite or +inf")
    cfg = sig_cfg or SignalConfig()
    rng = np.random.default_rng([seed, kind_index(y)])

    s1 = rng.uniform(*S1_RANGE)
    s2 = s1 + rng.uniform(*SYSTOLE_RANGE)
    params = _merge_overrides(y, _sample_params(y, rng, s1, s2), overrides)

    n = int(round(INSTANCE_S * SAMPLE_RATE_HZ))
    t_audio = np.arange(n) / SAMPLE_RATE_HZ
    prof = _profile(t_audio, y, params, s1, s2)

    # Pre-invert the analyzer's boxcar: with B the moving average over the
    # RMS window, modulating by sqrt(E^2 - c1 + c2) makes B(modulator^2)
    # reproduce E^2 up to a third-order kink residual. The series only
    # converges for continuous profiles, so the squared profile is extended
    # constantly past the murmur's boundary steps before computing the
    # corrections; the extension zones themselves stay uncorrected (the
    # boundary smear is inherent there, and segmentation trims it).
    win = max(int(round(cfg.rms_window_ms * 1e-3 * SAMPLE_RATE_HZ)), 1)
    sq = prof**2
    sq_ext = sq.copy()
    skip = np.zeros(n, dtype=bool)
    if params is not None:
        inside = (t_audio >= params.tau[0]) & (t_audio < params.tau[-1])
        if inside.any():
            i0 = int(np.argmax(inside))
            i1 = n - int(np.argmax(inside[::-1]))
            ext = (PRECOMP_TERMS + 1) * (win // 2)
            lo, hi = max(i0 - ext, 0), min(i1 + ext, n)
            sq_ext[lo:i0] = sq[i0]
            sq_ext[i1:hi] = sq[i1 - 1]
            skip[lo:i0] = True
            skip[i1:hi] = True
    correction = np.zeros_like(sq)
    term = sq_ext
    sign = -1.0
    for _ in range(PRECOMP_TERMS):
        term = moving_mean(term, win) - term
        correction += sign * term
        sign = -sign
    sq = np.where(skip, sq, np.maximum(sq + correction, 0.0))
    modulator = np.sqrt(sq)

    keep_clear = ()
    if params is not None:
        keep_clear = ((params.tau[0], params.tau[-1]),)
    carrier = flattened_carrier(rng, n, SAMPLE_RATE_HZ, win, keep_clear=keep_clear)
    # exactly unit-power carrier (random signs) across the S1 flat top: the
    # extracted envelope is peak-normalized there, so the anchor must not
    # carry any carrier ripple
    anchor = np.abs(t_audio - s1) <= S1_FLAT_HALF_S + (win // 2 + 1) / SAMPLE_RATE_HZ
    carrier[anchor] = rng.integers(0, 2, int(anchor.sum())) * 2.0 - 1.0
    clean = PRE_SCALE * modulator * carrier

    if snr_db == math.inf:
        x = clean
        measured = math.inf
    else:
        noise = rng.standard_normal(n)
        p_sig = float(np.mean(clean**2))
        p_noise_target = p_sig / 10.0 ** (snr_db / 10.0)
        noise *= math.sqrt(p_noise_target / float(np.mean(noise**2)))
        x = clean + noise
        measured = 10.0 * math.log10(p_sig / float(np.mean(noise**2)))

    samples = quantize_to_wav_grid(x)
    waveform = Waveform(samples=samples, sample_rate_hz=SAMPLE_RATE_HZ)

    n_grid = int(np.floor(INSTANCE_S * cfg.grid_hz))
    t_grid = np.arange(n_grid) / cfg.grid_hz
    env_vals = _profile(t_grid, y, params, s1, s2)
    true_envelope = Envelope(values=env_vals, grid_hz=cfg.grid_hz, t0_s=0.0)

    if params is None:
        bits = np.zeros(n_grid, dtype=bool)
        phase = Phase.Unknown
    else:
        bits = (t_grid >= params.tau[0]) & (t_grid < params.tau[-1])
        phase = Phase.Diastolic if y is Diagnosis.MS else Phase.Systolic
    true_mask = Mask(bits=bits, grid_hz=cfg.grid_hz, t0_s=0.0)

    return SyntheticCase(
        waveform=waveform,
        true_envelope=true_envelope,
        true_mask=true_mask,
        true_params=params,
        true_diagnosis=y,
        true_phase=phase,
        seed=seed,
        snr_db=snr_db,
        s1_time_s=s1,
        s2_time_s=s2,
        measured_snr_db=measured,
    )


def case_seed(base_seed: int, class_index: int, i: int) -> int:
    """Deterministic per-case seed used by generate_corpus."""
    return base_seed * 1_000_000 + class_index * 10_000 + i


def generate_corpus(
    per_class: int | dict,
    snr_db: float = math.inf,
    seed: int = 0,
    sig_cfg: SignalConfig | None = None,
):
    """Expand ``generate`` over a class-balanced corpus.

    Returns (cases, manifest); the manifest records ids, labels and seeds so
    the exact corpus can be regenerated.
    """
    from .shapes import DIAGNOSES

    if isinstance(per_class, int):
        counts = {y: per_class for y in DIAGNOSES}
    else:
        counts = {Diagnosis(k) if not isinstance(k, Diagnosis) else k: v for k, v in per_class.items()}
    cases = []
    entries = []
    for ci, y in enumerate(DIAGNOSES):
        for i in range(counts.get(y, 0)):
            s = case_seed(seed, ci, i)
            case = generate(y, snr_db=snr_db, seed=s, sig_cfg=sig_cfg)
            case_id = f"{y.value.lower()}_{i:04d}"
            cases.append((case_id, case))
            entries.append({"id": case_id, "diagnosis": y.value, "seed": s})
    manifest = {
        "snr_db": None if snr_db == math.inf else snr_db,
        "seed": seed,
        "count": len(cases),
        "cases": entries,
    }
    return cases, manifest
