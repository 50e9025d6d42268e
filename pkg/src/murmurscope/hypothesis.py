"""Abduction engine: initialize, fit, evaluate and resolve shape hypotheses.

For one instance, every diagnosis family is fitted to the murmur-segment
envelope; families are then ranked by lack of fit, gated by heart phase
(the click-plateau-crescendo family is diastolic, the rest systolic),
and near-ties resolve toward the family with fewer free parameters.

Because richer families nest simpler ones (a crescendo-decrescendo with
both slopes zero is a plateau; a click-plateau with the final crescendo
pushed to the segment end is a plain click-plateau), each richer family
is additionally warm-started from the embedded solution of its simpler
relative. That keeps the nesting inequality d_rich <= d_simple true even
under a local optimizer, and deliberately collapses redundant parameters
to the nested solution when the data does not support them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.stats

from . import _kernels
from .config import HypothesisConfig, PriorsConfig
from .errors import AlignmentError, ValidationError
from .segmentation import Mask, Segment
from .shapes import (
    DIAGNOSES,
    Diagnosis,
    ShapeParams,
    ShapeSeries,
    eval_shape_series,
    kind_index,
)
from .signal import Envelope, Phase

#: Parameters released to the optimizer (segment endpoints stay fixed).
N_FREE_PARAMS = {
    Diagnosis.N: 0,
    Diagnosis.AS: 4,  # tau2, pi0, pi1, pi2
    Diagnosis.MR: 1,  # pi0
    Diagnosis.MVP: 4,  # tau2, tau3, pi0, pi1
    Diagnosis.MS: 6,  # tau2..tau4, pi0, pi1, pi2
}

_ORDER_PENALTY = 1e6


@dataclass
class FittedHypothesis:
    """One diagnosis hypothesis after optimization against the envelope."""

    diagnosis: Diagnosis
    init_params: ShapeParams
    params: ShapeParams
    shape: ShapeSeries
    lack_of_fit: float
    init_lack_of_fit: float = 0.0
    phase_compatible: bool = True
    n_free_params: int = 0
    n_eff_params: int = 0  # free params actually supported by the data
    converged: bool = True


@dataclass
class HypothesisRanking:
    """All hypotheses in resolution order plus normalized plausibility scores."""

    order: list[FittedHypothesis]
    resolved: Diagnosis
    scores: dict[Diagnosis, float]
    notes: list[str] = field(default_factory=list)


def is_phase_compatible(y: Diagnosis, phase: Phase) -> bool:
    """Heart-phase gate: MS murmurs are diastolic, AS/MR/MVP systolic."""
    if y is Diagnosis.N:
        return True
    if phase is Phase.Systolic:
        return y is not Diagnosis.MS
    if phase is Phase.Diastolic:
        return y is Diagnosis.MS
    return True  # unknown phase gates nothing


def init_params(
    y: Diagnosis, e: Envelope, seg: Segment, priors: PriorsConfig | None = None
) -> ShapeParams:
    """Heuristic starting parameters estimated from the segment envelope.

    The segment bounds seed tau1/tauL. The apex time comes from the
    in-segment envelope maximum, except for the diastolic family where the
    apex and final-crescendo onset come from dataset medians (priors),
    which are more stable than envelope heuristics for that shape.

    Amplitude reads at the segment boundaries are taken a couple of grid
    steps inside: the RMS window rolls the envelope off right at the
    edges, so the literal boundary samples under-read the murmur level.
    """
    if y is Diagnosis.N:
        raise ValueError("the no-murmur hypothesis takes no parameters")
    pri = priors or PriorsConfig()
    t1, tL = seg.start_s, seg.end_s
    t = e.times()
    in_seg = (t >= t1) & (t < tL)
    if not in_seg.any():
        raise ValidationError("segment contains no envelope grid points")
    seg_vals = e.values[in_seg]
    seg_times = t[in_seg]

    if y is Diagnosis.MR:
        return ShapeParams(tau=(t1, tL), pi=(float(seg_vals.mean()),))

    safe = 2.0 / e.grid_hz

    def amp(ts: float) -> float:
        return e.value_at(min(max(ts, t1 + safe), tL - safe))

    p0 = amp(t1)
    if y is Diagnosis.MS:
        t2 = min(t1 + pri.ms_median_dtau12_s, tL)
    else:
        t2 = float(seg_times[int(np.argmax(seg_vals))])
    d12 = t2 - t1
    if d12 <= 0:
        warnings.warn(f"{y.value}: degenerate apex offset; using zero initial slope", stacklevel=2)
        p1 = 0.0
    else:
        p1 = (amp(t2) - p0) / d12

    if y is Diagnosis.AS:
        return ShapeParams(tau=(t1, t2, tL), pi=(p0, p1, p1))

    t3 = min(max(t1 + 2.0 * d12, t2), tL)
    if y is Diagnosis.MVP:
        return ShapeParams(tau=(t1, t2, t3, tL), pi=(p0, p1))

    t4 = min(max(tL - pri.ms_median_dtau4L_s, t3), tL)
    d4L = tL - t4
    p2 = (amp(tL) - amp(t4)) / d4L if d4L > 0 else 0.0
    return ShapeParams(tau=(t1, t2, t3, t4, tL), pi=(p0, p1, p2))


def lack_of_fit(shape: ShapeSeries, e: Envelope, m: Mask) -> float:
    """Mean squared in-mask residual between a shape series and the envelope.

    An empty mask is only meaningful for the no-murmur hypothesis, whose
    all-zero shape is then scored against silence over the whole instance.
    """
    if len(shape.values) != len(e.values) or len(m.bits) != len(e.values):
        raise AlignmentError("shape, envelope and mask must share one grid")
    if not m.bits.any():
        if shape.diagnosis is Diagnosis.N:
            return float(np.mean(shape.values**2))
        raise ValidationError("lack of fit over an empty mask is undefined for murmur hypotheses")
    r = shape.values[m.bits] - e.values[m.bits]
    return float(np.mean(r * r))


def _pack(y: Diagnosis, p: ShapeParams, free_endpoints: bool) -> np.ndarray:
    if free_endpoints:
        return np.array(list(p.tau) + list(p.pi), dtype=np.float64)
    return np.array(list(p.tau[1:-1]) + list(p.pi), dtype=np.float64)


def _unpack(y: Diagnosis, x: np.ndarray, t1: float, tL: float, free_endpoints: bool) -> ShapeParams:
    n_tau = {Diagnosis.AS: 3, Diagnosis.MR: 2, Diagnosis.MVP: 4, Diagnosis.MS: 5}[y]
    if free_endpoints:
        tau = tuple(x[:n_tau])
        pi = tuple(x[n_tau:])
    else:
        tau = (t1, *x[: n_tau - 2], tL)
        pi = tuple(x[n_tau - 2 :])
    return ShapeParams(tau=tau, pi=pi)


def _constraint_penalty(p: ShapeParams, t1: float, tL: float) -> float:
    """Quadratic penalty for breakpoint disorder and negative rise/fall slopes.

    The families are defined with crescendo/decrescendo semantics: pi1 and
    pi2 are magnitudes of rising (or, for the diamond's second slope,
    falling) segments, so negative values would change the shape's meaning,
    not just its scale. The level pi0 stays unconstrained.
    """
    pen = 0.0
    tau = p.tau
    for a, b in zip(tau, tau[1:]):
        if b < a:
            pen += (a - b) ** 2
    if tau:
        if tau[0] < t1:
            pen += (t1 - tau[0]) ** 2
        if tau[-1] > tL:
            pen += (tau[-1] - tL) ** 2
    for slope in p.pi[1:]:
        if slope < 0:
            pen += slope * slope
    return _ORDER_PENALTY * pen


def _sanitize(y: Diagnosis, p: ShapeParams, t1: float, tL: float) -> ShapeParams:
    """Clamp breakpoints into [t1, tL], enforce ordering and slope signs."""
    tau = np.clip(np.asarray(p.tau), t1, tL)
    tau = np.maximum.accumulate(tau)
    pi = (p.pi[0], *(max(v, 0.0) for v in p.pi[1:]))
    return ShapeParams(tau=tuple(tau), pi=pi)


def _nested_fit_sufficient(d_nested: float, d_full: float, n: int, p_full: int,
                           k_extra: int, alpha: float) -> bool:
    """F-test: is the nested solution's fit statistically as good as the full one?

    Returns True when the extra ``k_extra`` parameters do not buy a
    significant residual reduction over ``n`` fit points, in which case the
    nested solution should be kept.
    """
    if d_nested <= d_full + 1e-300:
        return True
    dof = n - p_full
    if dof < 1 or k_extra < 1:
        return True  # too few points to support the extra parameters
    if d_full <= 0:
        return False
    f_stat = ((d_nested - d_full) / d_full) * (dof / k_extra)
    return f_stat <= scipy.stats.f.ppf(1.0 - alpha, k_extra, dof)


def fit_shape(
    y: Diagnosis,
    e: Envelope,
    seg: Segment | None,
    init: ShapeParams | None,
    cfg: HypothesisConfig | None = None,
    mask: Mask | None = None,
    warm_starts: tuple[tuple[ShapeParams, int | None], ...] = (),
) -> FittedHypothesis:
    """Minimize the in-segment MSE of one shape family.

    ``warm_starts`` are additional starting points as (params, eff_free)
    pairs. An entry with ``eff_free`` set is the embedding of an
    already-fitted simpler family using that many free parameters; after
    optimization, the embedded solution is kept unless the richer family's
    extra parameters buy an F-significant improvement (level
    ``collapse_alpha``). That is what makes redundant parameters collapse
    to their nested values instead of soaking up residual ripple.
    ``eff_free=None`` marks a plain alternative start with no special
    status. The returned fit never scores worse than its reported init.
    """
    cfg = cfg or HypothesisConfig()
    t = e.times()
    if mask is not None:
        sel = mask.bits
    elif seg is not None:
        sel = (t >= seg.start_s) & (t < seg.end_s)
    else:
        sel = np.ones(len(t), dtype=bool)
    t_fit = t[sel]
    a_fit = e.values[sel]

    if y is Diagnosis.N:
        zero = ShapeParams()
        shape = eval_shape_series(y, zero, t)
        d = float(np.mean(a_fit**2)) if len(a_fit) else 0.0
        return FittedHypothesis(
            diagnosis=y, init_params=zero, params=zero, shape=shape,
            lack_of_fit=d, init_lack_of_fit=d, n_free_params=0, n_eff_params=0,
            converged=True,
        )

    if init is None or seg is None:
        raise ValidationError("murmur hypotheses need a segment and initial parameters")
    t1, tL = seg.start_s, seg.end_s
    kind = kind_index(y)

    def objective_of(p: ShapeParams) -> float:
        return _kernels.fit_objective(kind, np.asarray(p.tau), np.asarray(p.pi), t_fit, a_fit)

    def objective_x(x: np.ndarray) -> float:
        p = _unpack(y, x, t1, tL, cfg.free_endpoints)
        return _kernels.fit_objective(
            kind, np.asarray(p.tau), np.asarray(p.pi), t_fit, a_fit
        ) + _constraint_penalty(p, t1, tL)

    def run(start: ShapeParams):
        x0 = _pack(y, start, cfg.free_endpoints)
        if cfg.optimizer == "lbfgs":
            res = scipy.optimize.minimize(
                objective_x, x0, method="L-BFGS-B",
                options={"maxiter": cfg.max_iters, "ftol": cfg.obj_tol},
            )
        else:
            res = scipy.optimize.minimize(
                objective_x, x0, method="Nelder-Mead",
                options={
                    "maxiter": cfg.max_iters, "fatol": cfg.obj_tol, "xatol": 1e-9,
                    "maxfev": 4 * cfg.max_iters,
                },
            )
        p = _sanitize(y, _unpack(y, res.x, t1, tL, cfg.free_endpoints), t1, tL)
        return p, objective_of(p), bool(res.success)

    family_free = N_FREE_PARAMS[y] + (2 if cfg.free_endpoints else 0)

    def branch(start: ShapeParams):
        start = _sanitize(y, start, t1, tL)
        d_start = objective_of(start)
        p, d, ok = run(start)
        if d > d_start:  # a local method should never lose to its start
            p, d = start, d_start
        return {"params": p, "d": d, "ok": ok, "start": start, "d_start": d_start,
                "eff": family_free}

    # Optimized branches from every start, plus each embedding verbatim:
    # a collapse must return the nested solution exactly (its fit score is
    # then identical to the simpler family's), not a re-optimized variant.
    candidates = []
    embeddings = []
    for ws, eff in warm_starts:
        c = branch(ws)
        candidates.append(c)
        if eff is not None and eff < family_free:
            emb = _sanitize(y, ws, t1, tL)
            embeddings.append({
                "params": emb, "d": objective_of(emb), "ok": True,
                "start": emb, "d_start": objective_of(emb), "eff": eff,
            })
    candidates.append(branch(init))

    n = len(t_fit)
    best = min(candidates, key=lambda c: c["d"])
    chosen = best
    for c in sorted(embeddings, key=lambda c: c["eff"]):
        if _nested_fit_sufficient(
            c["d"], best["d"], n, family_free, family_free - c["eff"], cfg.collapse_alpha
        ):
            chosen = c
            break

    shape = eval_shape_series(y, chosen["params"], t)
    return FittedHypothesis(
        diagnosis=y, init_params=chosen["start"], params=chosen["params"], shape=shape,
        lack_of_fit=chosen["d"], init_lack_of_fit=chosen["d_start"],
        n_free_params=family_free, n_eff_params=chosen["eff"],
        converged=chosen["ok"],
    )


def embed_plateau_in_diamond(mr: FittedHypothesis, seg: Segment) -> ShapeParams:
    """A fitted plateau expressed as a crescendo-decrescendo with zero slopes."""
    mid = 0.5 * (seg.start_s + seg.end_s)
    return ShapeParams(tau=(seg.start_s, mid, seg.end_s), pi=(mr.params.pi[0], 0.0, 0.0))


def embed_plateau_in_click(mr: FittedHypothesis, seg: Segment) -> ShapeParams:
    """A fitted plateau expressed as a click-plateau with zero click height."""
    mid = 0.5 * (seg.start_s + seg.end_s)
    return ShapeParams(tau=(seg.start_s, mid, mid, seg.end_s), pi=(mr.params.pi[0], 0.0))


def embed_click_in_crescendo_tail(mvp: FittedHypothesis, seg: Segment) -> ShapeParams:
    """A fitted click-plateau with the final crescendo collapsed to the segment end."""
    t1, t2, t3, tL = mvp.params.tau
    p0, p1 = mvp.params.pi
    return ShapeParams(tau=(t1, t2, t3, tL, tL), pi=(p0, p1, 0.0))


def _relative_close(a: float, b: float, rho: float) -> bool:
    scale = max(abs(a), abs(b))
    if scale <= 1e-15:
        return True
    return abs(a - b) <= rho * scale


def rank_hypotheses(
    fits: dict[Diagnosis, FittedHypothesis] | list[FittedHypothesis],
    phase: Phase,
    cfg: HypothesisConfig | None = None,
    segment_present: bool = True,
    in_segment_rms: float | None = None,
    background_rms: float | None = None,
) -> HypothesisRanking:
    """Order the five fitted hypotheses and resolve a diagnosis.

    Resolution rules, in order: (1) phase-incompatible families are excluded;
    (2) with no murmur segment, or an in-segment level below the quiet gate,
    the instance is normal; (3) remaining families order by lack of fit;
    (4) fits within ``parsimony_rho`` of each other resolve toward fewer free
    parameters; (5) scores are a softmax of -d over compatible families.
    """
    cfg = cfg or HypothesisConfig()
    if isinstance(fits, dict):
        by_diag = dict(fits)
    else:
        by_diag = {f.diagnosis: f for f in fits}
    if set(by_diag) != set(DIAGNOSES):
        raise ValidationError("rank_hypotheses needs exactly one fit per diagnosis")

    notes: list[str] = []
    for y, f in by_diag.items():
        f.phase_compatible = is_phase_compatible(y, phase)

    quiet = (
        in_segment_rms is not None
        and background_rms is not None
        and in_segment_rms < cfg.n_gate_factor * background_rms
    )
    normal_gate = (not segment_present) or quiet
    if normal_gate:
        notes.append(
            "no murmur segment detected" if not segment_present
            else "in-segment level below the quiet gate; treated as no murmur"
        )

    compatible = [by_diag[y] for y in DIAGNOSES if by_diag[y].phase_compatible]

    if normal_gate:
        candidates = [by_diag[Diagnosis.N]]
    else:
        candidates = compatible
    if not candidates:  # defensive: the no-murmur fit is never phase-gated
        candidates = [by_diag[Diagnosis.N]]
        notes.append("all hypotheses phase-gated; falling back to normal (unknown phase)")

    diag_pos = {y: i for i, y in enumerate(DIAGNOSES)}
    ordered = sorted(candidates, key=lambda f: (f.lack_of_fit, diag_pos[f.diagnosis]))
    # parsimony: let a simpler family overtake a near-tied richer one
    changed = True
    while changed:
        changed = False
        for i in range(len(ordered) - 1):
            a, b = ordered[i], ordered[i + 1]
            if (
                _relative_close(a.lack_of_fit, b.lack_of_fit, cfg.parsimony_rho)
                and b.n_free_params < a.n_free_params
            ):
                ordered[i], ordered[i + 1] = b, a
                changed = True

    resolved = ordered[0].diagnosis

    score_pool = candidates
    d = np.array([f.lack_of_fit for f in score_pool], dtype=np.float64)
    temp = cfg.softmax_temperature if cfg.softmax_temperature > 0 else float(np.median(d))
    if temp <= 0 or not math.isfinite(temp):
        temp = max(float(np.mean(d)), 1e-12)
    z = -d / temp
    z -= z.max()
    w = np.exp(z)
    w /= w.sum()
    scores = {y: 0.0 for y in DIAGNOSES}
    for f, s in zip(score_pool, w):
        scores[f.diagnosis] = float(s)

    ranked_diags = {f.diagnosis for f in ordered}
    display = ordered + sorted(
        [f for y, f in by_diag.items() if y not in ranked_diags],
        key=lambda f: (f.lack_of_fit, diag_pos[f.diagnosis]),
    )
    return HypothesisRanking(order=display, resolved=resolved, scores=scores, notes=notes)


def resolve_diagnosis(
    r: HypothesisRanking,
    external_probs: dict[Diagnosis, float] | None = None,
    blend_weight: float = 0.5,
) -> tuple[Diagnosis, dict[Diagnosis, float]]:
    """Final diagnosis, optionally blending in an external probability vector.

    The blend is log-linear: scores ~ ranking^w * external^(1-w). Without
    external probabilities this is the identity on the ranking.
    """
    if external_probs is None:
        return r.resolved, dict(r.scores)
    probs = {Diagnosis(k) if not isinstance(k, Diagnosis) else k: float(v)
             for k, v in external_probs.items()}
    if set(probs) != set(DIAGNOSES):
        raise ValidationError("external probabilities must cover all five diagnoses")
    if any(v < 0 for v in probs.values()):
        raise ValidationError("external probabilities must be non-negative")
    total = sum(probs.values())
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-6):
        raise ValidationError(f"external probabilities must sum to 1 (got {total})")
    w = blend_weight
    blended = {y: (r.scores[y] ** w) * (probs[y] ** (1.0 - w)) for y in DIAGNOSES}
    mass = sum(blended.values())
    if mass <= 0:  # disjoint supports: fall back to the ranking scores
        return r.resolved, dict(r.scores)
    blended = {y: v / mass for y, v in blended.items()}
    best = max(DIAGNOSES, key=lambda y: (blended[y], -list(DIAGNOSES).index(y)))
    return best, blended
