"""Real branches of the Lambert W function (w * exp(w) = z).

Halley iteration from branch-specific starting points.  Only the two real
branches are needed: W0 on [-1/e, inf) and W-1 on [-1/e, 0).
"""

from __future__ import annotations

import math

_INV_E = 0.36787944117144233          # 1/e split into a double-double pair
_INV_E_LO = -1.2428753672788363e-17
_MAX_ITER = 50
# series coefficients of W in p = +/- sqrt(2 (e z + 1)) about the branch point
_SERIES = (-1.0, 1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0, 769.0 / 17280.0, -221.0 / 8505.0)
_SERIES_ONLY = 1e-2                   # |p| below which the series is exact to round-off


def _branch_p(z: float, sign: float) -> float:
    # z + 1/e is computed before the product so no cancellation occurs
    d = (z + _INV_E) + _INV_E_LO
    return sign * math.sqrt(max(2.0 * math.e * d, 0.0))


def _branch_point_series(z: float, sign: float, order: int = 3) -> float:
    p = _branch_p(z, sign)
    return sum(c * p**k for k, c in enumerate(_SERIES[: order + 1]))


def _seed(z: float, branch: int) -> float:
    if branch == 0:
        if z < -0.25:
            return _branch_point_series(z, +1.0)
        if z < 3.0:
            return math.log1p(z) if z > -0.25 else z
        l1 = math.log(z)
        l2 = math.log(l1)
        return l1 - l2 + l2 / l1
    # branch -1
    if z < -0.25:
        return _branch_point_series(z, -1.0)
    l1 = math.log(-z)
    l2 = math.log(-l1)
    return l1 - l2 + l2 / l1


def lambert_w(z: float, branch: int = 0) -> float:
    """Real Lambert W.

    Parameters
    ----------
    z : float
        Argument.  Branch 0 needs ``z >= -1/e``; branch -1 needs
        ``-1/e <= z < 0``.
    branch : {0, -1}

    Returns
    -------
    float
        ``w`` with ``w * exp(w) == z``; ``w >= -1`` on branch 0 and
        ``w <= -1`` on branch -1.
    """
    z = float(z)
    if branch not in (0, -1):
        raise ValueError(f"branch must be 0 or -1, got {branch}")
    if math.isnan(z):
        raise ValueError("z is NaN")
    # tolerate round-off right at the branch point
    if z < -_INV_E:
        if z > -_INV_E - 1e-15:
            z = -_INV_E
        else:
            raise ValueError(f"z={z} below the branch point -1/e")
    if branch == -1 and z >= 0.0:
        raise ValueError(f"branch -1 needs -1/e <= z < 0, got {z}")
    if z == -_INV_E:
        return -1.0
    if z == 0.0:
        return 0.0
    if math.isinf(z):
        return math.inf

    sign = 1.0 if branch == 0 else -1.0
    if abs(_branch_p(z, sign)) < _SERIES_ONLY:
        # Halley's residual cancels here; the truncated series is exact instead
        return _branch_point_series(z, sign, order=len(_SERIES) - 1)
    w = _seed(z, branch)
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w_new = w - step
        # keep iterates on the requested branch
        if branch == 0 and w_new < -1.0:
            w_new = 0.5 * (w - 1.0)
        elif branch == -1 and w_new > -1.0:
            w_new = 0.5 * (w - 1.0)
        if abs(w_new - w) <= 4e-16 * max(1.0, abs(w_new)):
            w = w_new
            break
        w = w_new
    return w
