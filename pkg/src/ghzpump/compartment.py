"""Rate-equation reduction: sector transfer rates, GHZ loss rates, and the 4-
(weak driving) and 3-compartment (strong driving) population models.

Compartment matrices are column-stochastic generators: ``dp/dt = T p`` with
``T[i, j]`` the rate from compartment j into i.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm, null_space
from scipy.special import comb

from .core import Basis, SystemParams
from .liouvillian import DriveSchedule

WEAK = "weak"
BROADENED = "power-broadened"


@dataclass(frozen=True)
class RateBundle:
    """Coarse-grained rates of the GHZ protocol (units of g)."""

    gamma_z_plus: float
    gamma_x_plus: float
    gamma_x_toss: float
    gamma_12: float
    gamma_z_minus: float
    gamma_x_minus: float
    provenance: str = WEAK

    def __post_init__(self):
        for name in ("gamma_z_plus", "gamma_x_plus", "gamma_x_toss", "gamma_12",
                     "gamma_z_minus", "gamma_x_minus"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def gamma_minus(self) -> float:
        return self.gamma_z_minus + self.gamma_x_minus

    def without_loss(self) -> "RateBundle":
        return replace(self, gamma_z_minus=0.0, gamma_x_minus=0.0)


@dataclass(frozen=True)
class CompartmentModel:
    labels: tuple[str, ...]
    matrix: np.ndarray
    unit: float                # Gamma_Z^+, the natural rate unit
    n_qubits: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if np.max(np.abs(m.sum(axis=0))) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise ValueError("columns of a transition matrix must sum to zero")
        off = m - np.diag(np.diag(m))
        if np.min(off) < 0:
            raise ValueError("off-diagonal rates must be non-negative")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def evolve(self, p0, t: float) -> np.ndarray:
        return expm(t * self.matrix) @ np.asarray(p0, dtype=float)

    def trajectory(self, p0, times) -> np.ndarray:
        return np.array([self.evolve(p0, t) for t in np.atleast_1d(times)])

    def steady_state(self) -> np.ndarray:
        ns = null_space(self.matrix, rcond=1e-12)
        if ns.shape[1] != 1:
            raise ValueError(f"degenerate stationary space (dimension {ns.shape[1]})")
        p = ns[:, 0] / ns[:, 0].sum()
        return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()

    def without_loss(self) -> "CompartmentModel":
        """T_+: the column of the absorbing target (last compartment) zeroed."""
        m = np.array(self.matrix)
        m[:, -1] = 0.0
        return CompartmentModel(self.labels, m, self.unit, self.n_qubits)


def _check_sector(n1: int, N: int):
    if not 1 <= n1 <= N - 1:
        raise ValueError(f"sector n1={n1} outside 1..{N - 1}")


def sector_transfer_rate(n1: int, schedule: DriveSchedule, params: SystemParams,
                         power_broadening: bool = False, tones_per_sector: int = 2,
                         broadening_factor: float = 2.0) -> float:
    """Resonant Z-pumping rate n1 -> n1 - 1 (through gamma_0e).

    ``tones_per_sector=2`` counts both the red- and blue-detuned tone with
    F = n1; ``1`` gives the single-tone rate.
    """
    N = params.n_qubits
    _check_sector(n1, N)
    om = schedule.rabi(Basis.Z, n1)
    width2 = (params.gamma_e + params.kappa_b) ** 2
    if power_broadening:
        width2 += broadening_factor * n1 * om**2
    if om == 0:
        return 0.0
    return tones_per_sector * n1 * params.gamma_0e * om**2 / width2


def pumping_time(n_from: int, n_to: int, schedule: DriveSchedule, params: SystemParams,
                 power_broadening: bool = False, to_ghz: bool = False,
                 tones_per_sector: int = 2) -> float:
    """Summed inverse transfer rates from sector ``n_from`` down to ``n_to``.

    ``to_ghz`` doubles the result: half the population reaching n1 = 0 lands
    in GHZ_-, so on average two attempts are needed.
    """
    if not n_from > n_to >= 0:
        raise ValueError("need n_from > n_to >= 0")
    total = 0.0
    for n in range(n_to + 1, n_from + 1):
        r = sector_transfer_rate(n, schedule, params, power_broadening, tones_per_sector)
        total += math.inf if r == 0 else 1.0 / r
    return 2.0 * total if to_ghz else total


def _x_weights(N: int):
    return {F: comb(N, F, exact=True) / 2 ** (N - 1) for F in range(1, N + 1, 2)}


def ghz_minus_depump_rate(schedule: DriveSchedule, params: SystemParams,
                          power_broadening: bool = False, broadening_factor: float = 2.0) -> float:
    """Gamma_X^+: total X-pumping rate out of GHZ_-."""
    N = params.n_qubits
    width2 = (params.gamma_f + params.kappa_c) ** 2
    total = 0.0
    for F, w in _x_weights(N).items():
        om = schedule.rabi(Basis.X, F)
        denom = width2 + (broadening_factor * F * om**2 if power_broadening else 0.0)
        if om > 0:
            total += 2.0 * params.gamma_f / denom * w * F * om**2
    return total


def ghz_loss_rates(schedule: DriveSchedule, params: SystemParams, power_broadening: bool = False,
                   broadening_factor: float = 2.0) -> tuple[float, float, float]:
    """(Gamma_Z^-, Gamma_X^-, Gamma_X^toss) for symmetric branching."""
    if not params.symmetric_branching:
        raise ValueError("GHZ loss-rate formulas assume gamma_0 = gamma_1 for both excited levels")
    N, g = params.n_qubits, params.g
    z_sum = sum(F * (schedule.rabi(Basis.Z, F) / (N - F)) ** 2 for F in range(1, N))
    gz = N * (2 * params.gamma_0e + params.gamma_1e) / (8 * g**2) * z_sum
    gx = 0.0
    for n in range(0, N + 1, 2):
        w = comb(N, n, exact=True) * n / 2 ** (N - 1)
        if w == 0:
            continue
        gx += w * sum(F * (schedule.rabi(Basis.X, F) / (F - n)) ** 2 for F in range(1, N + 1, 2))
    gx *= params.gamma_f / (2 * g**2)
    toss = 0.5 * ghz_minus_depump_rate(schedule, params, power_broadening, broadening_factor)
    return gz, gx, toss


def rate_bundle_from_schedule(schedule: DriveSchedule, params: SystemParams,
                              power_broadening: bool = False) -> RateBundle:
    """Compartment rates from exact sums over the schedule (no log N forms).

    Gamma_Z^+ is the inverse pumping time from n1 = N-2 to n1 = 0, and
    Gamma_12 the resonant rate out of n1 = N-1.  Needs N >= 3: for N = 2 the
    intermediate compartment is empty.
    """
    N = params.n_qubits
    if N < 3:
        raise ValueError("exact compartment rates need N >= 3 (compartment 2 is empty for N = 2)")
    gz_plus = 1.0 / pumping_time(N - 2, 0, schedule, params, power_broadening)
    g12 = sector_transfer_rate(N - 1, schedule, params, power_broadening)
    gx_plus = ghz_minus_depump_rate(schedule, params, power_broadening)
    gz_minus, gx_minus, toss = ghz_loss_rates(schedule, params, power_broadening)
    return RateBundle(gz_plus, gx_plus, toss, g12, gz_minus, gx_minus,
                      BROADENED if power_broadening else WEAK)


def weak_rates(N: int, gamma_minus_ratio: float = 0.0, gamma_z_plus: float = 1.0) -> RateBundle:
    """Closed-form weak-driving bundle in units of Gamma_Z^+:
    Gamma_12 = 3 log N, toss = 1/2, Gamma_X^+ = 1, Gamma_- = ratio."""
    g12 = 3 * math.log(N)
    return RateBundle(gamma_z_plus, gamma_z_plus, 0.5 * gamma_z_plus, g12 * gamma_z_plus,
                      gamma_minus_ratio * gamma_z_plus, 0.0)


FOUR_LABELS = ("n1=N-1", "1<=n1<=N-2", "GHZ-", "GHZ")
THREE_LABELS = ("1<=n1<=N-1", "GHZ-", "GHZ")


def build_4compartment(N: int, rates: RateBundle) -> CompartmentModel:
    r = rates
    gm = r.gamma_minus
    T = np.array([
        [-r.gamma_12, r.gamma_x_toss, r.gamma_x_plus, gm],
        [r.gamma_12, -(r.gamma_x_toss + r.gamma_z_plus), 0.0, 0.0],
        [0.0, 0.5 * r.gamma_z_plus, -r.gamma_x_plus, 0.0],
        [0.0, 0.5 * r.gamma_z_plus, 0.0, -gm],
    ])
    return CompartmentModel(FOUR_LABELS, T, r.gamma_z_plus, N)


def build_3compartment_strong(N: int, rates: RateBundle) -> CompartmentModel:
    r = rates
    gm = r.gamma_minus
    T = np.array([
        [-2 * r.gamma_z_plus - r.gamma_x_toss, r.gamma_x_plus, gm],
        [r.gamma_z_plus + r.gamma_x_toss, -r.gamma_x_plus, 0.0],
        [r.gamma_z_plus, 0.0, -gm],
    ])
    return CompartmentModel(THREE_LABELS, T, r.gamma_z_plus, N)


@dataclass(frozen=True)
class StationaryError:
    exact: float
    approx: float
    populations: np.ndarray


def stationary_error(model: CompartmentModel) -> StationaryError:
    """1 - P_GHZ(inf), exact (null vector) and first-order ((1 - P)/P form).

    For the closed-form weak-driving rates the approximation equals
    (Gamma_-/Gamma_Z^+)(3 + 1/log N); for the 3-compartment model it is
    (5/2) Gamma_-/Gamma_Z^+.
    """
    T = model.matrix
    if T[-1, -1] == 0.0:
        p = np.zeros(model.size)
        p[-1] = 1.0
        return StationaryError(0.0, 0.0, p)
    p = model.steady_state()
    exact = float(1.0 - p[-1])
    approx = float((1.0 - p[-1]) / p[-1])
    return StationaryError(exact, approx, p)


def _start_vector(model: CompartmentModel) -> np.ndarray:
    p0 = np.zeros(model.size)
    p0[model.labels.index("GHZ-")] = 1.0
    return p0


def effective_rate(model: CompartmentModel, drop_loss: bool = True, t0: float | None = None) -> float:
    """Effective exponential rate Gamma_+ = -log(1 - P_GHZ(t0)) / t0, starting
    with all population in GHZ_-; ``t0`` defaults to 1/Gamma_Z^+."""
    m = model.without_loss() if drop_loss else model
    t0 = 1.0 / model.unit if t0 is None else t0
    p = m.evolve(_start_vector(model), t0)
    p4 = p[-1]
    if p4 >= 1.0:
        warnings.warn("P_GHZ(t0) rounded to 1; clamping")
        p4 = 1.0 - np.finfo(float).eps
    return float(-math.log1p(-p4) / t0)


def _log_factors(N: int) -> tuple[float, float]:
    L = math.log(N)
    return 1.0 + 5.0 / (9.0 * L * L), 1.0 + 1.0 / (3.0 * L)


def b_factor(N: int, rates: RateBundle | None = None) -> float:
    """Bracketed prefactor b(N) of the weak-driving preparation time."""
    rates = weak_rates(N) if rates is None else rates.without_loss()
    m = build_4compartment(N, rates)
    ratio = rates.gamma_z_plus / effective_rate(m)
    c1, c2 = _log_factors(N)
    return 9.0 * math.sqrt(3.0) / 8.0 * ratio * math.sqrt(c1 * c2)


def kappa_factor(N: int, rates: RateBundle | None = None) -> float:
    """kappa(N) = 3 (Gamma_+/Gamma_Z^+)(1 + 1/(3 log N))."""
    rates = weak_rates(N) if rates is None else rates.without_loss()
    m = build_4compartment(N, rates)
    _, c2 = _log_factors(N)
    return 3.0 * effective_rate(m) / rates.gamma_z_plus * c2


def strong_rate_bundle(gamma_z_plus: float, gamma_minus: float = 0.0) -> RateBundle:
    """Matched strong-driving rates: Gamma_X^+ = 2 toss = Gamma_Z^+."""
    return RateBundle(gamma_z_plus, gamma_z_plus, 0.5 * gamma_z_plus, 0.0, gamma_minus, 0.0, BROADENED)
