"""Pure numpy kernels, used when the compiled extension is unavailable."""

import numpy as np

LOG_TINY = np.log(1e-300)
SMALL_EPS = 1e-6
SMALL_ARG = 1e-3


def group_eval(kind, p0, p1, t):
    t = np.asarray(t, dtype=np.float64)
    if kind == 0:
        return t.copy()
    if kind == 3:
        # factor out the larger exponential so expm1 sees a non-positive argument
        d = (p0 - p1) * t
        pos = d >= 0
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.exp(np.where(pos, p0 * t, p1 * t)) * np.expm1(-np.abs(d))
        return np.where(pos, -val, val) / (p0 - p1)
    x = p0 * t
    with np.errstate(over="ignore"):
        if p0 == 0.0:
            out = t.copy()
        else:
            out = np.expm1(x) / p0 if kind == 1 else np.sinh(x) / p0
    if abs(p0) < SMALL_EPS:
        small = np.abs(x) < SMALL_ARG
        if kind == 1:
            series = t * (1.0 + x / 2.0 + x * x / 6.0 + x**3 / 24.0)
        else:
            x2 = x * x
            series = t * (1.0 + x2 / 6.0 + x2**2 / 120.0 + x2**3 / 5040.0)
        out = np.where(small, series, out)
    return out


def weighted_group_sum(kind, p0, p1, logw, logp, t):
    logw = np.ravel(np.asarray(logw, dtype=np.float64))
    logp = np.ravel(np.asarray(logp, dtype=np.float64))
    t = np.ravel(np.asarray(t, dtype=np.float64))
    if not (logw.shape == logp.shape == t.shape):
        raise ValueError("logw, logp and t must have the same length")
    keep = logp >= LOG_TINY
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.exp(logw[keep] + logp[keep]) * group_eval(kind, p0, p1, t[keep])
    return float(np.sum(terms))


def weighted_outer_sum(logw, scores):
    logw = np.ravel(np.asarray(logw, dtype=np.float64))
    scores = np.asarray(scores, dtype=np.float64)
    if logw.shape[0] != scores.shape[0]:
        raise ValueError("logw and scores must have the same number of rows")
    w = np.exp(logw)
    out = np.einsum("i,ij,ik->jk", w, scores, scores)
    return 0.5 * (out + out.T)
