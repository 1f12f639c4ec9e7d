import math

import mpmath
import numpy as np
import pytest
from scipy.special import lambertw as scipy_lambertw

from ghzpump.lambertw import lambert_w


NEAR_BRANCH = -np.exp(-1) + np.logspace(-16, -1, 16)


@pytest.mark.parametrize("branch", [0, -1])
@pytest.mark.parametrize("z", NEAR_BRANCH)
def test_near_branch_point_matches_high_precision(z, branch):
    # the float z is taken as exact; the reference is evaluated at 40 digits
    with mpmath.workdps(40):
        ref = float(mpmath.lambertw(mpmath.mpf(float(z)), branch).real)
    assert lambert_w(z, branch) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("z", np.concatenate([np.linspace(-0.3, 5, 23), np.logspace(1, 200, 12)]))
def test_principal_branch_matches_scipy(z):
    ref = scipy_lambertw(z, 0).real
    assert lambert_w(z, 0) == pytest.approx(ref, rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("z", -np.logspace(-300, -0.6, 20))
def test_lower_branch_matches_scipy(z):
    ref = scipy_lambertw(z, -1).real
    assert lambert_w(z, -1) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("branch", [0, -1])
def test_round_trip_residual(branch):
    zs = (np.linspace(-np.exp(-1) + 1e-12, 50, 400) if branch == 0
          else np.linspace(-np.exp(-1) + 1e-12, -1e-6, 400))
    for z in zs:
        w = lambert_w(z, branch)
        assert abs(w * math.exp(w) - z) <= 1e-12 * max(1.0, abs(z))


def test_branch_point_and_ordering():
    assert lambert_w(-math.exp(-1), 0) == pytest.approx(-1.0, abs=1e-7)
    assert lambert_w(-math.exp(-1), -1) == pytest.approx(-1.0, abs=1e-7)
    assert lambert_w(-0.2, 0) > -1 > lambert_w(-0.2, -1)
    assert lambert_w(0.0, 0) == 0.0


@pytest.mark.parametrize("z, branch", [(-0.5, 0), (-0.5, -1), (0.1, -1), (0.0, -1), (float("nan"), 0)])
def test_domain_errors(z, branch):
    with pytest.raises(ValueError):
        lambert_w(z, branch)


def test_invalid_branch():
    with pytest.raises(ValueError):
        lambert_w(1.0, 1)
