import math

import numpy as np
import pytest

from ghzpump.compartment import (FOUR_LABELS, CompartmentModel, RateBundle, b_factor,
                                 build_3compartment_strong, build_4compartment, effective_rate,
                                 kappa_factor, pumping_time, rate_bundle_from_schedule,
                                 sector_transfer_rate, stationary_error, strong_rate_bundle,
                                 weak_rates)
from ghzpump.optimize import weak_drive_params

B_TABLE = {2: 55, 3: 33, 4: 27, 5: 25, 6: 23, 7: 22, 8: 21, 10: 20, 20: 18, 50: 17, 100: 16}
KAPPA_TABLE = {2: 0.28, 3: 0.32, 4: 0.34, 5: 0.35, 6: 0.36, 7: 0.36, 8: 0.37, 10: 0.38,
               20: 0.39, 50: 0.40, 100: 0.41}


@pytest.mark.parametrize("N", sorted(B_TABLE))
def test_b_table(N):
    assert abs(b_factor(N) - B_TABLE[N]) <= 1.0


@pytest.mark.parametrize("N", sorted(KAPPA_TABLE))
def test_kappa_table(N):
    assert abs(kappa_factor(N) - KAPPA_TABLE[N]) <= 0.01


@pytest.mark.parametrize("N", [2, 5, 30])
@pytest.mark.parametrize("ratio", [0.0, 0.05])
def test_transition_matrix_columns_sum_to_zero(N, ratio):
    m = build_4compartment(N, weak_rates(N, ratio))
    assert np.allclose(m.matrix.sum(axis=0), 0.0, atol=1e-14)
    assert m.labels == FOUR_LABELS


@pytest.mark.parametrize("t", [0.0, 0.3, 7.0, 100.0])
def test_probability_conserved(t):
    m = build_4compartment(5, weak_rates(5, 0.1))
    p = m.evolve([0.25, 0.25, 0.25, 0.25], t)
    assert p.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(p >= -1e-12)


def test_without_loss_is_absorbing():
    m = build_4compartment(4, weak_rates(4, 0.0))
    err = stationary_error(m)
    assert err.exact == 0.0 and err.approx == 0.0
    assert np.array_equal(err.populations, [0, 0, 0, 1])


@pytest.mark.parametrize("N", [3, 10])
def test_steady_vector_shape(N):
    # proportional to (1/log N, 2, 1, Gamma_Z^+/Gamma_-)
    ratio = 1e-3
    p = build_4compartment(N, weak_rates(N, ratio)).steady_state()
    ref = np.array([1 / math.log(N), 2.0, 1.0, 1.0 / ratio])
    assert np.allclose(p, ref / ref.sum(), rtol=1e-9)


@pytest.mark.parametrize("N", [3, 8, 100])
def test_stationary_error_closed_forms(N):
    ratio = 0.01
    err = stationary_error(build_4compartment(N, weak_rates(N, ratio)))
    x = ratio * (3 + 1 / math.log(N))
    assert err.exact == pytest.approx(1 - 1 / (1 + x), rel=1e-10)
    assert err.approx == pytest.approx(x, rel=1e-10)


def test_approximation_converges_as_loss_vanishes():
    ratios = [stationary_error(build_4compartment(5, weak_rates(5, r))).approx
              / stationary_error(build_4compartment(5, weak_rates(5, r))).exact
              for r in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(abs(a - 1) > abs(b - 1) for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1) < 1e-3


def test_three_compartment_stationary_error():
    ratio = 1e-4
    err = stationary_error(build_3compartment_strong(50, strong_rate_bundle(1.0, ratio)))
    assert err.approx == pytest.approx(2.5 * ratio, rel=1e-9)


def test_strong_gain_ratio():
    r = effective_rate(build_3compartment_strong(100, strong_rate_bundle(1.0)))
    assert r == pytest.approx(0.216, rel=0.02)


def test_effective_rate_scales_with_unit():
    m1 = build_4compartment(4, weak_rates(4, gamma_z_plus=1.0))
    m2 = build_4compartment(4, weak_rates(4, gamma_z_plus=2.5))
    assert effective_rate(m2) == pytest.approx(2.5 * effective_rate(m1), rel=1e-12)


def test_effective_rate_clamps_saturated_population():
    m = build_4compartment(4, weak_rates(4))
    with pytest.warns(UserWarning):
        r = effective_rate(m, t0=1e3)
    assert math.isfinite(r)


def test_degenerate_null_space_rejected():
    m = CompartmentModel(("a", "b"), np.zeros((2, 2)), 1.0, 2)
    with pytest.raises(ValueError):
        m.steady_state()


@pytest.mark.parametrize("bad", [np.array([[-1.0, 0.0], [0.5, 0.0]]),
                                 np.array([[1.0, -1.0], [-1.0, 1.0]])])
def test_invalid_transition_matrix(bad):
    with pytest.raises(ValueError):
        CompartmentModel(("a", "b"), bad, 1.0, 2)


def test_negative_rates_rejected():
    with pytest.raises(ValueError):
        RateBundle(1.0, 1.0, 0.5, 1.0, -0.1, 0.0)


def test_sector_rates_from_schedule():
    N = 5
    p = weak_drive_params(N, 0.1)
    sched, params = p.schedule(), p.system_params()
    rates = [sector_transfer_rate(n, sched, params) for n in range(1, N)]
    assert all(r > 0 for r in rates)
    total = pumping_time(N - 2, 0, sched, params)
    assert total == pytest.approx(sum(1 / rates[n - 1] for n in range(1, N - 1)), rel=1e-12)
    with pytest.raises(ValueError):
        sector_transfer_rate(N + 1, sched, params)


def test_bundle_from_schedule_close_to_log_forms():
    N = 6
    p = weak_drive_params(N, 0.1)
    b = rate_bundle_from_schedule(p.schedule(), p.system_params())
    # the resonant rate out of n1 = N-1 exceeds the step rate by the log factor
    assert b.gamma_12 / b.gamma_z_plus == pytest.approx(3 * math.log(N), rel=0.5)
    assert b.gamma_minus > 0
    with pytest.raises(ValueError):
        q = weak_drive_params(2, 0.1)
        rate_bundle_from_schedule(q.schedule(), q.system_params())
