"""Backend selection for the quadratic-cost kernel sums.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Setting ``HART_PURE_PYTHON=1`` forces the fallback.

Both backends expose

``bivariate_kde_parts(ex, es, x, s, w, hx, hs, exclude_self)``
    Returns ``(num, den)`` where, for each evaluation point ``(ex[i], es[i])``,
    ``den[i] = sum_j w[j] * exp(-(es[i]-s[j])**2 / (2 hs**2))`` and ``num[i]``
    is the same sum with each term multiplied by the normal density with
    standard deviation ``hx * s[j]`` evaluated at ``ex[i] - x[j]``. The ratio
    ``num / den`` is the weighted bivariate estimate. ``exclude_self`` drops
    the ``j == i`` term (leave-one-out evaluation at the sample points).

``gaussian_kde(ev, sample, h)``
    Ordinary Gaussian kernel density estimate at ``ev``.
"""

import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("HART_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels
    else:
        BACKEND = "cython"
else:
    _impl = _pykernels

bivariate_kde_parts = _impl.bivariate_kde_parts
gaussian_kde = _impl.gaussian_kde

__all__ = ["BACKEND", "bivariate_kde_parts", "gaussian_kde"]
