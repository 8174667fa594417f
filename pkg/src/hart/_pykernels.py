"""Pure numpy versions of the kernel sums in ``_ckernels.pyx``.

Evaluation points are processed in row blocks so memory stays at
``block * n`` doubles.
"""

import numpy as np

_BLOCK = 512
_ROOT2PI = np.sqrt(2.0 * np.pi)


def bivariate_kde_parts(ex, es, x, s, w, hx, hs, exclude_self=False):
    ex = np.ascontiguousarray(ex, dtype=float)
    es = np.ascontiguousarray(es, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    s = np.ascontiguousarray(s, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    n_eval, n = ex.shape[0], x.shape[0]
    if exclude_self and n_eval != n:
        raise ValueError("exclude_self requires evaluating at the sample points")
    inv_bw = 1.0 / (hx * s)
    coef = w * inv_bw / _ROOT2PI
    inv_2hs2 = 0.5 / (hs * hs)
    num = np.empty(n_eval)
    den = np.empty(n_eval)
    for start in range(0, n_eval, _BLOCK):
        stop = min(start + _BLOCK, n_eval)
        ks = np.exp(-((es[start:stop, None] - s[None, :]) ** 2) * inv_2hs2)
        dx = (ex[start:stop, None] - x[None, :]) * inv_bw[None, :]
        kx = np.exp(-0.5 * dx * dx)
        if exclude_self:
            rows = np.arange(stop - start)
            ks[rows, start + rows] = 0.0
        den[start:stop] = ks @ w
        num[start:stop] = (ks * kx) @ coef
    return num, den


def gaussian_kde(ev, sample, h):
    ev = np.ascontiguousarray(ev, dtype=float)
    sample = np.ascontiguousarray(sample, dtype=float)
    out = np.empty(ev.shape[0])
    norm = 1.0 / (sample.shape[0] * h * _ROOT2PI)
    for start in range(0, ev.shape[0], _BLOCK):
        stop = min(start + _BLOCK, ev.shape[0])
        d = (ev[start:stop, None] - sample[None, :]) / h
        out[start:stop] = np.exp(-0.5 * d * d).sum(axis=1) * norm
    return out
