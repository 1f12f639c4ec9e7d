import math

import numpy as np
import pytest

from ghzpump.core import Basis, SystemParams, basis_change, ghz_state
from ghzpump.effective import (build_effective_model, effective_coupling, effective_detuning,
                               excited_population, ghz_loss_rate, stark_shift, tone_rates)
from ghzpump.liouvillian import DriveSchedule, DriveTone
from ghzpump.optimize import weak_drive_params


def _weak(N, alpha=1.0):
    p = weak_drive_params(N, 0.1, alpha)
    return p.schedule(), p.system_params()


def test_detuning_in_empty_sector_is_atomic():
    params = SystemParams.symmetric(3, 0.2)
    tone = DriveTone(Basis.Z, 1, "+", 0.01)
    assert effective_detuning("Z", tone, 0, params) == pytest.approx(1.0 - 0.1j)
    with pytest.raises(ValueError):
        effective_coupling("Z", tone, 0, params)


def test_resonant_detuning_is_purely_imaginary_without_cavity_loss():
    # Delta - n g^2/Delta = 0 at Delta = sqrt(n) g apart from the decay part
    params = SystemParams.symmetric(4, 1e-3)
    for n in range(1, 5):
        tone = DriveTone(Basis.Z, n, "+", 1e-4)
        d = effective_detuning("Z", tone, n, params)
        assert abs(d.real) < 1e-2 * abs(d.imag) + 1e-6


def test_rates_scale_with_rabi_squared_and_branching():
    params = SystemParams.symmetric(3, 0.05)
    r1 = tone_rates(DriveTone(Basis.Z, 1, "+", 0.01), 1, params)
    r2 = tone_rates(DriveTone(Basis.Z, 1, "+", 0.02), 1, params)
    assert r2["gamma0"] == pytest.approx(4 * r1["gamma0"])
    assert r1["gamma0"] == pytest.approx(r1["gamma1"])
    assert r1["kappa"] == 0.0


def test_power_broadening_saturates_resonant_rate():
    params = SystemParams.symmetric(3, 0.05)
    tone = DriveTone(Basis.Z, 2, "+", 0.5)
    weak = tone_rates(tone, 2, params)
    broad = tone_rates(tone, 2, params, power_broadening=True)
    assert broad["gamma0"] < weak["gamma0"]
    gamma, om, n = 0.05, 0.5, 2
    # per-atom resonant rate saturates as gamma Omega^2 / (gamma^2 + 2 n Omega^2)
    total = broad["gamma0"] + broad["gamma1"]
    assert total == pytest.approx(gamma * om**2 / (gamma**2 + 2 * n * om**2), rel=1e-6)
    assert weak["gamma0"] + weak["gamma1"] == pytest.approx(om**2 / gamma, rel=1e-6)


@pytest.mark.parametrize("N", range(2, 9))
def test_paired_tone_stark_shifts_cancel(N):
    sched, params = _weak(N)
    for basis in (Basis.Z, Basis.X):
        raw = {}
        mag = 0.0
        for tone in sched.for_config(basis):
            for n in range(1, N + 1):
                s = stark_shift(basis, tone, n, params)
                raw[n] = raw.get(n, 0.0) + s
                mag = max(mag, abs(s))
        assert mag > 0
        assert max(abs(v) for v in raw.values()) <= 1e-12 * mag
        model = build_effective_model(basis, sched, params)
        assert np.all(model.stark == 0.0)


@pytest.mark.parametrize("N", range(2, 9))
def test_resonant_jumps_annihilate_ghz(N):
    sched, params = _weak(N)
    for basis in (Basis.Z, Basis.X):
        model = build_effective_model(basis, sched, params)
        v = basis_change(ghz_state(N), basis).amplitudes
        for j in model.jumps:
            if j.resonant:
                L = math.sqrt(j.rate) * model.operator(j.n, j.channel, j.atom)
                assert np.linalg.norm(L @ v) <= 1e-12 * math.sqrt(j.rate)


def test_ghz_loss_is_offresonant_only():
    sched, params = _weak(3)
    for basis in ("Z", "X"):
        full = build_effective_model(basis, sched, params)
        res = build_effective_model(basis, sched, params, include_offresonant=False)
        assert ghz_loss_rate(res) == pytest.approx(0.0, abs=1e-18)
        assert ghz_loss_rate(full) > 0


@pytest.mark.parametrize("basis", ["Z", "X"])
def test_superoperator_is_trace_preserving_and_matches_apply(basis):
    sched, params = _weak(3)
    model = build_effective_model(basis, sched, params)
    L = model.superoperator().toarray()
    d = model.dim
    tr = np.eye(d).reshape(-1)
    assert np.max(np.abs(tr @ L)) < 1e-15
    rng = np.random.default_rng(0)
    rho = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    assert np.allclose((L @ rho.reshape(-1)).reshape(d, d), model.apply(rho), atol=1e-15)


def test_superoperator_basis_change_consistent():
    sched, params = _weak(2)
    model = build_effective_model("X", sched, params)
    lz = model.superoperator(Basis.Z).toarray()
    lx = model.superoperator(Basis.X).toarray()
    assert np.allclose(np.linalg.eigvals(lz).real.sum(), np.linalg.eigvals(lx).real.sum())


def test_excited_population_linear_in_rabi():
    sched, params = _weak(3, alpha=0.01)
    p1 = excited_population("both", sched, params)
    p2 = excited_population("both", sched.scaled(2.0), params)
    assert p2 == pytest.approx(2 * p1)
    assert 0 < p1 < 1


def test_zero_drive_gives_empty_model():
    params = SystemParams.symmetric(3, 0.1)
    model = build_effective_model("Z", DriveSchedule(), params)
    assert model.jumps == () and np.all(model.stark == 0)
