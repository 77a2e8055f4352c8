"""Order-statistic quantiles shared by every calibration step.

One convention is used throughout: the ``q``-quantile of a multiset of size
``n`` is its ``ceil(q * n)``-th smallest element, and ``q = 0`` gives ``-inf``.
The rank is computed in exact rational arithmetic from the decimal value of
``q`` (its shortest ``repr``), so ``q = 0.9`` with ``n = 10`` selects the
9th element; neither ``0.9 * 10`` in floating point nor the binary value of
``0.9`` (slightly above 9/10) can be trusted to give that.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

NEG_INF = -math.inf
POS_INF = math.inf


def quantile_rank(q: float, n: int) -> int:
    """``ceil(q * n)`` evaluated exactly."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level must lie in [0, 1], got {q}")
    frac = Fraction(repr(float(q)))
    return -((-frac.numerator * n) // frac.denominator)


def empirical_quantile(values, q: float) -> float:
    """Return the ``ceil(q * len(values))``-th smallest value.

    Parameters
    ----------
    values : array-like
        Non-empty multiset of extended reals; ``inf`` entries are allowed.
    q : float
        Level in ``[0, 1]``.

    Returns
    -------
    float
        The selected order statistic, or ``-inf`` when ``q == 0``.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empirical_quantile of an empty multiset")
    if np.isnan(arr).any():
        raise ValueError("values contain NaN")
    k = quantile_rank(q, arr.size)
    if k == 0:
        return NEG_INF
    return float(np.partition(arr, k - 1)[k - 1])


def conformal_threshold(scores, level: float) -> float:
    """Split-conformal critical value: the ``level`` quantile of ``scores U {+inf}``."""
    arr = np.asarray(scores, dtype=float).ravel()
    return empirical_quantile(np.append(arr, POS_INF), level)
