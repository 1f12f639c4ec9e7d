import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from ghzpump.optimize import (DriveVector, StrongDriveParams, dynamical_optimum,
                              fixed_time_error, fixed_time_optimum, hg_functions,
                              max_qubits_strong, max_qubits_weak, numeric_time_minimizer,
                              optimal_amplitudes, rate_f, rate_h, rescaled_time,
                              simulated_time, stationary_error_for, strong_coefficients,
                              strong_drive_params, weak_drive_params, weak_gamma, weak_time_bound,
                              x_amplitude)


def test_amplitude_pattern():
    a = optimal_amplitudes(6, eta=2.0)
    assert len(a) == 5
    # sqrt(ceil1(2 (N-F)/F)): saturates at 1 while 2(N-F) >= F
    assert a[:4] == (1.0, 1.0, 1.0, 1.0)
    assert a[4] == pytest.approx(math.sqrt(0.4))
    assert x_amplitude(3) == pytest.approx(math.sqrt(2 / (9 * math.log(3))))


def test_hg_functions():
    H, G = hg_functions([1.0, 1.0])
    assert H == pytest.approx(1.5) and G == pytest.approx(1 / 4 + 2.0)
    assert hg_functions([0.0, 1.0])[0] == math.inf


@pytest.mark.parametrize("N", [3, 10])
def test_weak_gamma_scaling(N):
    g1 = weak_gamma(N, 0.01)
    assert weak_gamma(N, 0.04) == pytest.approx(2 * g1)
    assert weak_gamma(N, 0.01, g=3.0) == pytest.approx(3 * g1)


def test_weak_params_validation():
    with pytest.raises(ValueError):
        weak_drive_params(1, 0.1)
    with pytest.raises(ValueError):
        weak_drive_params(3, 1.5)


@pytest.mark.parametrize("error, ratio", [(0.1, 0.62), (0.03, 0.70)])
def test_stationary_split(error, ratio):
    assert stationary_error_for(error) / error == pytest.approx(ratio, abs=0.005)


@pytest.mark.parametrize("error, c_fac, tau_fac", [(0.1, 0.788, 4.15), (0.03, 0.838, 5.63)])
def test_dynamical_factors(error, c_fac, tau_fac):
    sol = dynamical_optimum(3, error)
    assert sol.c / math.sqrt(error) == pytest.approx(c_fac, abs=0.005)
    assert sol.tau * math.sqrt(error) == pytest.approx(tau_fac, abs=0.005)


@pytest.mark.parametrize("error", [0.2, 0.1, 0.03, 1e-3])
def test_dynamical_optimum_is_stationary(error):
    sol = dynamical_optimum(4, error)
    res = minimize_scalar(rescaled_time, bounds=(1e-6, math.sqrt(error) * (1 - 1e-9)),
                          args=(error,), method="bounded", options={"xatol": 1e-12})
    assert sol.c == pytest.approx(res.x, rel=1e-4)
    assert sol.tau == pytest.approx(rescaled_time(sol.c, error), rel=1e-12)
    # first-order condition: dtau/dc = 0
    h = 1e-6 * sol.c
    grad = (rescaled_time(sol.c + h, error) - rescaled_time(sol.c - h, error)) / (2 * h)
    assert abs(grad) < 1e-4 * sol.tau / sol.c


def test_dynamical_time_scalings():
    a = dynamical_optimum(5, 0.1, alpha=1.0)
    assert dynamical_optimum(5, 0.1, alpha=0.5).t_ghz == pytest.approx(4 * a.t_ghz)
    assert dynamical_optimum(5, 0.1, g=2.0).t_ghz == pytest.approx(a.t_ghz / 2)
    assert a.stationary_ratio == pytest.approx(stationary_error_for(0.1) / 0.1)
    with pytest.raises(ValueError):
        dynamical_optimum(5, 1.2)


@pytest.mark.parametrize("T", [50.0, 1e3, 1e5])
def test_fixed_time_optimum_minimises_error(T):
    N = 6
    gamma, err = fixed_time_optimum(T, N)
    from ghzpump.compartment import kappa_factor
    kappa = kappa_factor(N)
    assert err == pytest.approx(fixed_time_error(gamma, T, N, kappa=kappa), rel=1e-10)
    res = minimize_scalar(lambda lg: fixed_time_error(math.exp(lg), T, N, kappa=kappa),
                          bounds=(-30, 5), method="bounded", options={"xatol": 1e-10})
    assert gamma == pytest.approx(math.exp(res.x), rel=0.01)
    assert err <= res.fun * (1 + 1e-9)
    for s in (0.99, 1.01):
        assert fixed_time_error(gamma * s, T, N, kappa=kappa) >= err


def test_fixed_time_error_decreases_with_time():
    errs = [fixed_time_optimum(T, 4)[1] for T in (1e2, 1e3, 1e4)]
    assert errs[0] > errs[1] > errs[2]
    with pytest.raises(ValueError):
        fixed_time_optimum(0.0, 4)


def test_qubit_bounds_monotone():
    assert max_qubits_weak(1e5, 0.1) > max_qubits_weak(1e4, 0.1)
    assert max_qubits_strong(1e6, 0.1) == pytest.approx(1e4 * 0.1 ** (1 / 3) / 16)


@pytest.mark.parametrize("N", [2, 4, 50])
def test_weak_time_bound_formula(N):
    from ghzpump.compartment import b_factor
    E = 0.05
    expected = b_factor(N) * math.sqrt(N) * math.log(N) ** 2 / math.sqrt(E)
    assert weak_time_bound(N, E) == pytest.approx(expected)
    assert weak_time_bound(N, E, alpha=0.5, g=2.0) == pytest.approx(2 * expected)


def test_rate_functions():
    assert rate_f(math.e) == pytest.approx(2 / 12)
    assert rate_h(10) > rate_h(5)


@pytest.mark.parametrize("key, value", [("gamma", 0.42), ("gamma_f", 0.80), ("omega", 0.24),
                                        ("gain_ratio", 0.216), ("tau", 66.0)])
def test_strong_coefficients(key, value):
    assert strong_coefficients()[key] == pytest.approx(value, rel=0.02)


@pytest.mark.parametrize("E", [0.1, 0.01])
def test_strong_gamma_plus_at_100(E):
    N = 100
    p = strong_drive_params(N, E)
    ref = 0.0152 * math.sqrt(E) / (N**1.5 * math.log(N))
    assert p.gamma_plus == pytest.approx(ref, rel=0.1)
    assert p.tau_ghz == pytest.approx(1 / p.gamma_plus)
    assert p.error_z == pytest.approx(E / 5)


def test_strong_params_structure():
    p = strong_drive_params(6, 0.1)
    assert isinstance(p, StrongDriveParams)
    assert len(p.omega_f) == 5
    assert p.omega_f[0] > p.omega_f[-1]
    assert p.pumping_time() > 0
    assert len(p.schedule().tones) == 2 * 5 + 2 * 3


def test_drive_vector_round_trip_and_clipping():
    v = DriveVector((1.0, 0.5), 0.3, 0.1, 0.2)
    w = DriveVector.from_array(v.to_array())
    assert np.allclose(w.to_array(), v.to_array(), rtol=1e-15, atol=0)
    assert w.gamma == pytest.approx(v.gamma, rel=1e-15)
    clipped = DriveVector.from_array(np.array([1.7, -0.2, 2.0, math.log(0.1), math.log(0.2)]))
    assert clipped.a_f == (1.0, 0.0) and clipped.a_x == 1.0


def test_drive_vector_from_weak_params_reproduces_schedule():
    p = weak_drive_params(4, 0.1)
    v = DriveVector.from_params(p)
    assert v.schedule() == p.schedule()
    assert v.system_params() == p.system_params()
    with pytest.raises(TypeError):
        DriveVector.from_params(object())


def test_simulated_time_unreachable_is_inf():
    p = weak_drive_params(2, 0.1)
    assert simulated_time(DriveVector.from_params(p), 0.9, t_max=1.0) == math.inf


def test_minimizer_never_worse_than_seed_and_deterministic():
    seed = weak_drive_params(2, stationary_error_for(0.1))
    a = numeric_time_minimizer(2, 0.9, seed, max_evals=25, restarts=2, rng_seed=3)
    b = numeric_time_minimizer(2, 0.9, seed, max_evals=25, restarts=2, rng_seed=3)
    assert a.reached and a.time <= a.seed_time
    assert a.time == b.time and a.params == b.params
    assert len(a.history) == 2
    again = simulated_time(a.params, 0.9, t_max=20 * dynamical_optimum(2, 0.1).t_ghz)
    assert again == pytest.approx(a.time, rel=1e-9)


def test_minimizer_keeps_seed_when_budget_is_tiny():
    seed = weak_drive_params(2, stationary_error_for(0.1))
    res = numeric_time_minimizer(2, 0.9, seed, max_evals=1, restarts=1)
    assert res.time <= res.seed_time
