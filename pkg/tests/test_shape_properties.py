"""Randomized algebraic properties of the shape families (1000 draws each)."""

import numpy as np
import pytest

from murmurscope.shapes import Diagnosis, ShapeParams, eval_shape, eval_shape_series, validate_params

N_DRAWS = 1000
RNG_SEED = 20240811


def _sorted_times(rng, k):
    t = np.sort(rng.uniform(0.0, 1.0, k))
    while t[-1] - t[0] < 1e-3:  # keep tau1 strictly before tauL
        t = np.sort(rng.uniform(0.0, 1.0, k))
    return t


def random_params(y: Diagnosis, rng) -> ShapeParams:
    if y is Diagnosis.N:
        return ShapeParams()
    n_tau = {Diagnosis.AS: 3, Diagnosis.MR: 2, Diagnosis.MVP: 4, Diagnosis.MS: 5}[y]
    n_pi = {Diagnosis.AS: 3, Diagnosis.MR: 1, Diagnosis.MVP: 2, Diagnosis.MS: 3}[y]
    tau = _sorted_times(rng, n_tau)
    pi = rng.uniform(-1.0, 1.0, n_pi)
    pi[1:] = np.abs(pi[1:]) * 30.0  # slope magnitudes
    return ShapeParams(tau=tuple(tau), pi=tuple(pi))


def _piece_edges(y, p):
    return sorted(set(p.tau))


@pytest.mark.parametrize("y", list(Diagnosis))
def test_random_params_are_valid(y):
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(N_DRAWS):
        assert validate_params(y, random_params(y, rng)) == []


@pytest.mark.parametrize("y", [Diagnosis.AS, Diagnosis.MR, Diagnosis.MVP, Diagnosis.MS])
def test_zero_outside_segment(y):
    rng = np.random.default_rng(RNG_SEED + 1)
    failures = 0
    for _ in range(N_DRAWS):
        p = random_params(y, rng)
        t1, tL = p.tau[0], p.tau[-1]
        outside = np.array([t1 - 1e-9, t1 - 0.1, tL, tL + 0.1, -5.0, 5.0])
        vals = eval_shape_series(y, p, outside).values
        if np.any(vals != 0.0):
            failures += 1
    assert failures == 0


@pytest.mark.parametrize("y", [Diagnosis.AS, Diagnosis.MR, Diagnosis.MVP, Diagnosis.MS])
def test_piecewise_linearity(y):
    # inside any single piece, the midpoint value is the mean of the endpoints
    rng = np.random.default_rng(RNG_SEED + 2)
    failures = 0
    for _ in range(N_DRAWS):
        p = random_params(y, rng)
        edges = _piece_edges(y, p)
        for lo, hi in zip(edges, edges[1:]):
            if hi - lo < 1e-6:
                continue
            a = lo + 0.1 * (hi - lo)
            b = lo + 0.9 * (hi - lo)
            fa = eval_shape(y, p, a)
            fb = eval_shape(y, p, b)
            fm = eval_shape(y, p, 0.5 * (a + b))
            if abs(fm - 0.5 * (fa + fb)) > 1e-9 * max(1.0, abs(fa), abs(fb)):
                failures += 1
    assert failures == 0


def test_diamond_with_zero_slopes_is_plateau():
    rng = np.random.default_rng(RNG_SEED + 3)
    grid = np.linspace(0.0, 1.0, 257)
    failures = 0
    for _ in range(N_DRAWS):
        mr = random_params(Diagnosis.MR, rng)
        t1, tL = mr.tau
        t2 = rng.uniform(t1, tL)
        as_params = ShapeParams(tau=(t1, t2, tL), pi=(mr.pi[0], 0.0, 0.0))
        a = eval_shape_series(Diagnosis.AS, as_params, grid).values
        b = eval_shape_series(Diagnosis.MR, mr, grid).values
        if not np.array_equal(a, b):
            failures += 1
    assert failures == 0


def test_collapsed_tail_equals_click_plateau():
    rng = np.random.default_rng(RNG_SEED + 4)
    grid = np.linspace(0.0, 1.0, 257)
    failures = 0
    for _ in range(N_DRAWS):
        mvp = random_params(Diagnosis.MVP, rng)
        t1, t2, t3, tL = mvp.tau
        ms_params = ShapeParams(tau=(t1, t2, t3, tL, tL), pi=(mvp.pi[0], mvp.pi[1], rng.uniform(-30, 30)))
        a = eval_shape_series(Diagnosis.MS, ms_params, grid).values
        b = eval_shape_series(Diagnosis.MVP, mvp, grid).values
        if not np.array_equal(a, b):
            failures += 1
    assert failures == 0


def test_click_plateau_identity():
    # tau3 = 2*tau2 - tau1 puts the plateau exactly at pi0
    rng = np.random.default_rng(RNG_SEED + 5)
    failures = 0
    for _ in range(N_DRAWS):
        t1 = rng.uniform(0.0, 0.4)
        d12 = rng.uniform(0.01, 0.1)
        t2 = t1 + d12
        t3 = t1 + 2 * d12
        tL = t3 + rng.uniform(0.05, 0.4)
        p = ShapeParams(tau=(t1, t2, t3, tL), pi=(rng.uniform(-0.5, 0.5), rng.uniform(0.0, 30.0)))
        for frac in (0.0, 0.3, 0.9):
            t = t3 + frac * (tL - t3) * 0.999
            if abs(eval_shape(Diagnosis.MVP, p, t) - p.pi[0]) > 1e-9:
                failures += 1
    assert failures == 0
