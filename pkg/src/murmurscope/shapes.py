"""Murmur shape families as piecewise-linear functions of time.

Each cardiac diagnosis has a conventional murmur loudness profile:

  N    no murmur, identically zero
  AS   crescendo-decrescendo "diamond": rises at slope pi1 from tau1,
       falls at slope -pi2 after the apex tau2
  MR   uniform plateau at level pi0 between tau1 and tauL
  MVP  opening click (symmetric rise/fall at slope +-pi1 through tau2)
       followed by a plateau from tau3
  MS   like MVP but ending in a crescendo at slope pi2 from tau4

All shapes are zero outside the half-open murmur interval [tau1, tauL).
Breakpoints are absolute instance-relative seconds; pi0 is an amplitude
level and pi1/pi2 are slopes in amplitude per second, both against the
peak-normalized envelope.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ShapeParamError


class Diagnosis(enum.Enum):
    N = "N"
    AS = "AS"
    MR = "MR"
    MVP = "MVP"
    MS = "MS"


#: Canonical ordering used for reports, confusion matrices and tie-breaks.
DIAGNOSES = (Diagnosis.N, Diagnosis.AS, Diagnosis.MR, Diagnosis.MVP, Diagnosis.MS)

_KIND = {
    Diagnosis.N: _kernels.KIND_N,
    Diagnosis.AS: _kernels.KIND_AS,
    Diagnosis.MR: _kernels.KIND_MR,
    Diagnosis.MVP: _kernels.KIND_MVP,
    Diagnosis.MS: _kernels.KIND_MS,
}

_PARAM_COUNTS = {
    Diagnosis.N: (0, 0),
    Diagnosis.AS: (3, 3),  # (tau1, tau2, tauL), (pi0, pi1, pi2)
    Diagnosis.MR: (2, 1),  # (tau1, tauL), (pi0,)
    Diagnosis.MVP: (4, 2),  # (tau1, tau2, tau3, tauL), (pi0, pi1)
    Diagnosis.MS: (5, 3),  # (tau1..tau4, tauL), (pi0, pi1, pi2)
}

_TAU_NAMES = {
    Diagnosis.N: (),
    Diagnosis.AS: ("tau1", "tau2", "tauL"),
    Diagnosis.MR: ("tau1", "tauL"),
    Diagnosis.MVP: ("tau1", "tau2", "tau3", "tauL"),
    Diagnosis.MS: ("tau1", "tau2", "tau3", "tau4", "tauL"),
}


@dataclass(frozen=True)
class ShapeParams:
    """Breakpoint times (seconds) and level/slope values for one shape."""

    tau: tuple[float, ...] = ()
    pi: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(float(v) for v in self.tau))
        object.__setattr__(self, "pi", tuple(float(v) for v in self.pi))


@dataclass(frozen=True)
class ShapeSeries:
    """A shape evaluated on an envelope grid."""

    values: np.ndarray
    diagnosis: Diagnosis
    params: ShapeParams


def kind_index(y: Diagnosis) -> int:
    """Integer tag used by the numeric kernels."""
    return _KIND[y]


def param_count(y: Diagnosis) -> tuple[int, int]:
    """(number of breakpoint times, number of level/slope values) stored for y."""
    return _PARAM_COUNTS[y]


def validate_params(y: Diagnosis, p: ShapeParams) -> list[str]:
    """Return a list of contract violations (empty when params are valid)."""
    violations = []
    n_tau, n_pi = _PARAM_COUNTS[y]
    if len(p.tau) != n_tau:
        violations.append(f"{y.value}: expected {n_tau} breakpoints, got {len(p.tau)}")
    if len(p.pi) != n_pi:
        violations.append(f"{y.value}: expected {n_pi} slope values, got {len(p.pi)}")
    if violations:
        return violations
    for name, v in zip(_TAU_NAMES[y], p.tau):
        if not math.isfinite(v):
            violations.append(f"{name} is not finite")
    for i, v in enumerate(p.pi):
        if not math.isfinite(v):
            violations.append(f"pi{i} is not finite")
    if violations:
        return violations
    if any(b < a for a, b in zip(p.tau, p.tau[1:])):
        violations.append("breakpoints not ordered (tau must be non-decreasing)")
    if len(p.tau) >= 2 and not p.tau[0] < p.tau[-1]:
        violations.append("tau1 must be strictly before tauL")
    return violations


def require_valid(y: Diagnosis, p: ShapeParams) -> None:
    violations = validate_params(y, p)
    if violations:
        raise ShapeParamError("; ".join(violations))


def eval_shape(y: Diagnosis, p: ShapeParams, t: float) -> float:
    """Shape amplitude at a single time (zero outside [tau1, tauL))."""
    require_valid(y, p)
    out = _kernels.shape_values(_KIND[y], np.asarray(p.tau), np.asarray(p.pi), np.asarray([t], dtype=np.float64))
    return float(out[0])


def eval_shape_series(y: Diagnosis, p: ShapeParams, grid: np.ndarray) -> ShapeSeries:
    """Vectorized shape evaluation over a time grid (seconds)."""
    require_valid(y, p)
    values = _kernels.shape_values(
        _KIND[y], np.asarray(p.tau), np.asarray(p.pi), np.asarray(grid, dtype=np.float64)
    )
    return ShapeSeries(values=values, diagnosis=y, params=p)


def params_to_json(y: Diagnosis, p: ShapeParams) -> dict:
    """Flat JSON form: {"diagnosis": ..., "tau": [...], "pi": [...]}."""
    return {"diagnosis": y.value, "tau": list(p.tau), "pi": list(p.pi)}


def params_from_json(obj: dict) -> tuple[Diagnosis, ShapeParams]:
    try:
        y = Diagnosis(obj["diagnosis"])
        p = ShapeParams(tau=tuple(obj.get("tau", ())), pi=tuple(obj.get("pi", ())))
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeParamError(f"malformed shape parameter record: {exc}") from exc
    require_valid(y, p)
    return y, p
