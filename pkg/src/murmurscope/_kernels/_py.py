"""NumPy fallback implementations of the hot kernels.

Shape conventions (times in seconds, amplitudes in peak-normalized units):

  kind 0 (no murmur)            tau = ()                      pi = ()
  kind 1 (crescendo-decrescendo) tau = (t1, t2, tL)            pi = (p0, p1, p2)
  kind 2 (uniform plateau)       tau = (t1, tL)                pi = (p0,)
  kind 3 (click + plateau)       tau = (t1, t2, t3, tL)        pi = (p0, p1)
  kind 4 (click + plateau + end crescendo)
                                 tau = (t1, t2, t3, t4, tL)    pi = (p0, p1, p2)

Every family is zero outside the half-open murmur interval [t1, tL).
Interior pieces switch on with closed-left brackets [tk <= t], nested so a
later piece adds its slope correction on top of the earlier ones.
"""

import numpy as np

KIND_N = 0
KIND_AS = 1
KIND_MR = 2
KIND_MVP = 3
KIND_MS = 4


def shape_values(kind, tau, pi, t):
    """Evaluate one murmur shape family at times ``t`` (1-D float array)."""
    if kind not in (KIND_N, KIND_AS, KIND_MR, KIND_MVP, KIND_MS):
        raise ValueError(f"unknown shape kind {kind}")
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    if kind == KIND_N or t.size == 0:
        return out

    t1 = tau[0]
    tL = tau[-1]
    inside = (t >= t1) & (t < tL)

    if kind == KIND_MR:
        out[inside] = pi[0]
        return out

    p0, p1 = pi[0], pi[1]
    v = p0 + p1 * (t - t1)

    if kind == KIND_AS:
        t2, p2 = tau[1], pi[2]
        v = v + np.where(t >= t2, -(p1 + p2) * (t - t2), 0.0)
    elif kind == KIND_MVP:
        t2, t3 = tau[1], tau[2]
        inner = p1 * (t - t3)
        v = v + np.where(t >= t2, -2.0 * p1 * (t - t2) + np.where(t >= t3, inner, 0.0), 0.0)
    elif kind == KIND_MS:
        t2, t3, t4 = tau[1], tau[2], tau[3]
        p2 = pi[2]
        inner3 = p1 * (t - t3) + np.where(t >= t4, p2 * (t - t4), 0.0)
        v = v + np.where(t >= t2, -2.0 * p1 * (t - t2) + np.where(t >= t3, inner3, 0.0), 0.0)

    out[inside] = v[inside]
    return out


def fit_objective(kind, tau, pi, t, a):
    """Mean squared residual of the shape against amplitudes ``a`` at ``t``."""
    t = np.asarray(t, dtype=np.float64)
    if t.size == 0:
        return 0.0
    r = shape_values(kind, tau, pi, t) - np.asarray(a, dtype=np.float64)
    return float(np.dot(r, r) / r.size)
