"""Ground-space effective operators obtained by adiabatic elimination of the
excited levels and the oscillators.

For a tone of detuning Delta acting on a sector with n atoms in the driven
ground level (|1> for Z, |-> for X):

    Delta_n = (Delta - i gamma/2) - n g^2 / (Delta - i kappa/2)
    g_n     = g - (Delta - i gamma/2)(Delta - i kappa/2) / (n g)

and the effective jumps are

    L_kappa      = sqrt(kappa) Omega / (2 g_n)         P_n
    L_gamma0,a   = sqrt(gamma_0) Omega / (2 Delta_n)   |0>_a<1| P_n   (Z)
    L_gamma1,a   = sqrt(gamma_1) Omega / (2 Delta_n)   |1>_a<1| P_n   (Z)

with |1> replaced by |-> for X (decay still ends in |0> or |1>).  Operators
are kept separate per tone and per sector; tones never interfere.

X-configuration operators are stored in X-basis coordinates (bit 0 = |+>,
bit 1 = |->).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.special import comb

from .core import Basis, SystemParams, as_basis, hadamard_transform, hamming_weights
from .liouvillian import DriveSchedule, DriveTone

CHANNELS = ("kappa", "gamma0", "gamma1")


def _complex_detunings(tone: DriveTone, params: SystemParams):
    gamma, _, _, kappa = params.decay(tone.config)
    delta = tone.delta(params.g)
    return delta - 0.5j * gamma, delta - 0.5j * kappa


def effective_detuning(config, tone: DriveTone, n: int, params: SystemParams) -> complex:
    """Effective complex detuning Delta_n of ``tone`` on sector ``n``."""
    if as_basis(config) is not tone.config:
        raise ValueError("tone belongs to a different configuration")
    if n < 0:
        raise ValueError("sector count must be >= 0")
    d_atom, d_osc = _complex_detunings(tone, params)
    if n == 0:
        return complex(d_atom)
    return complex(d_atom - n * params.g**2 / d_osc)


def effective_coupling(config, tone: DriveTone, n: int, params: SystemParams) -> complex:
    """Effective coupling g_n; undefined in the empty sector (n = 0)."""
    if as_basis(config) is not tone.config:
        raise ValueError("tone belongs to a different configuration")
    if n < 1:
        raise ValueError("no oscillator path in the empty sector (n = 0)")
    d_atom, d_osc = _complex_detunings(tone, params)
    return complex(params.g - d_atom * d_osc / (n * params.g))


@dataclass(frozen=True)
class EffectiveDetunings:
    config: Basis
    index: int
    sign: str
    n: int
    delta: complex
    coupling: complex | None


def detuning_table(config, schedule: DriveSchedule, params: SystemParams) -> list[EffectiveDetunings]:
    cfg = as_basis(config)
    out = []
    for tone in schedule.for_config(cfg):
        for n in range(params.n_qubits + 1):
            out.append(EffectiveDetunings(
                cfg, tone.index, tone.sign, n,
                effective_detuning(cfg, tone, n, params),
                effective_coupling(cfg, tone, n, params) if n >= 1 else None))
    return out


def _broadened_abs2(value: complex, n: int, rabi: float, power_broadening: bool,
                    factor: float, per_atom: bool) -> float:
    # |2 x|^2 -> |2 x|^2 + factor * n * Omega^2 for the detuning (per_atom)
    # and |2 x|^2 -> |2 x|^2 + factor * Omega^2 for the coupling; both choices
    # reproduce the saturated resonant rates 2 n gamma Omega^2/(gamma^2 + 2 n Omega^2)
    a2 = abs(value) ** 2
    if power_broadening:
        a2 += factor * (n if per_atom else 1) * rabi**2 / 4.0
    return a2


def tone_rates(tone: DriveTone, n: int, params: SystemParams, power_broadening: bool = False,
               broadening_factor: float = 2.0) -> dict[str, float]:
    """Effective rates (kappa, gamma0, gamma1) of one tone on sector n."""
    gamma, g0, g1, kappa = params.decay(tone.config)
    om2 = tone.rabi**2
    rates = {"kappa": 0.0, "gamma0": 0.0, "gamma1": 0.0}
    if n < 1 or om2 == 0.0:
        return rates
    dn = effective_detuning(tone.config, tone, n, params)
    d2 = _broadened_abs2(dn, n, tone.rabi, power_broadening, broadening_factor, True)
    rates["gamma0"] = g0 * om2 / (4.0 * d2)
    rates["gamma1"] = g1 * om2 / (4.0 * d2)
    if kappa > 0:
        gn = effective_coupling(tone.config, tone, n, params)
        g2 = _broadened_abs2(gn, n, tone.rabi, power_broadening, broadening_factor, False)
        rates["kappa"] = kappa * om2 / (4.0 * g2)
    return rates


def stark_shift(config, tone: DriveTone, n: int, params: SystemParams) -> float:
    """AC Stark shift s = -Re(n Omega^2 / (4 Delta_n)) of one tone on sector n."""
    if n == 0 or tone.rabi == 0:
        return 0.0
    dn = effective_detuning(config, tone, n, params)
    return float(-(n * tone.rabi**2 / (4.0 * dn)).real)


@dataclass(frozen=True)
class EffectiveJump:
    """One effective Lindblad operator sqrt(rate) * pattern * P_n."""

    config: Basis
    index: int
    sign: str
    n: int
    channel: str
    atom: int | None
    rate: float

    @property
    def resonant(self) -> bool:
        return self.index == self.n


@lru_cache(maxsize=64)
def _pattern_ops(n_qubits: int, config: Basis):
    """Sparse single-atom patterns in the config's own basis, per atom.

    Returns (to0, to1) lists: the |0>_a<d| and |1>_a<d| operators where d is
    the driven level (|1> for Z, |-> for X), expressed in Z coordinates for Z
    and in X coordinates (|+>, |->) for X.
    """
    if config is Basis.Z:
        to0 = np.array([[0.0, 1.0], [0.0, 0.0]])
        to1 = np.array([[0.0, 0.0], [0.0, 1.0]])
    else:
        s = 1.0 / math.sqrt(2.0)
        # |0> = (|+> + |->)/sqrt2, |1> = (|+> - |->)/sqrt2, columns (<+|, <-|)
        to0 = np.array([[0.0, s], [0.0, s]])
        to1 = np.array([[0.0, s], [0.0, -s]])
    ops0, ops1 = [], []
    for a in range(n_qubits):
        left = sp.identity(2**a, format="csr")
        right = sp.identity(2 ** (n_qubits - a - 1), format="csr")
        ops0.append(sp.kron(sp.kron(left, sp.csr_matrix(to0)), right, format="csr"))
        ops1.append(sp.kron(sp.kron(left, sp.csr_matrix(to1)), right, format="csr"))
    return tuple(ops0), tuple(ops1)


def _sector_diag(n_qubits: int, n: int) -> sp.csr_matrix:
    return sp.diags((hamming_weights(n_qubits) == n).astype(float), format="csr")


@dataclass(frozen=True)
class EffectiveModel:
    """Effective ground-space master equation of one configuration.

    Jump operators and the Stark Hamiltonian are expressed in the
    configuration's own basis (``basis``): Z-basis coordinates for Z,
    X-basis coordinates for X.
    """

    basis: Basis
    n_qubits: int
    jumps: tuple[EffectiveJump, ...]
    stark: np.ndarray                    # s_n for n = 0..N, summed over tones
    stark_terms: tuple[tuple[int, str, int, float], ...] = ()
    power_broadening: bool = False
    stark_magnitude: float = 0.0          # max |s| over individual tone/sector terms

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def hamiltonian(self) -> np.ndarray:
        """Diagonal Stark Hamiltonian sum_n s_n P_n."""
        return np.diag(self.stark[hamming_weights(self.n_qubits)]).astype(complex)

    def aggregated_rates(self) -> dict[tuple[int, str, int | None], float]:
        """Sum rates of identical operators (same sector, channel, atom)."""
        agg: dict = {}
        for j in self.jumps:
            key = (j.n, j.channel, j.atom)
            agg[key] = agg.get(key, 0.0) + j.rate
        return agg

    def operator(self, n: int, channel: str, atom: int | None) -> sp.csr_matrix:
        """Unit-rate operator pattern * P_n in the model basis."""
        proj = _sector_diag(self.n_qubits, n)
        if channel == "kappa":
            return proj
        ops0, ops1 = _pattern_ops(self.n_qubits, self.basis)
        pattern = ops0[atom] if channel == "gamma0" else ops1[atom]
        return (pattern @ proj).tocsr()

    def jump_operators(self, include_zero: bool = False) -> list[tuple[tuple, sp.csr_matrix]]:
        """Aggregated jump operators sqrt(rate) * pattern * P_n."""
        out = []
        for key, rate in sorted(self.aggregated_rates().items(), key=lambda kv: str(kv[0])):
            if rate == 0.0 and not include_zero:
                continue
            out.append((key, math.sqrt(rate) * self.operator(*key)))
        return out

    def superoperator(self, basis=None) -> sp.csr_matrix:
        """Row-major vectorised Liouvillian (vec(A rho B) = (A kron B^T) vec rho).

        ``basis`` selects the coordinates of the density matrix it acts on;
        defaults to the model's own basis.
        """
        target = self.basis if basis is None else as_basis(basis)
        dim = self.dim
        eye = sp.identity(dim, format="csr", dtype=complex)
        h = sp.csr_matrix(self.hamiltonian())
        sup = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
        for _, L in self.jump_operators():
            L = L.astype(complex)
            LdL = (L.conj().T @ L).tocsr()
            sup = sup + sp.kron(L, L.conj()) - 0.5 * (sp.kron(LdL, eye) + sp.kron(eye, LdL.T))
        sup = sp.csr_matrix(sup)
        if target is not self.basis:
            u = sp.csr_matrix(hadamard_transform(self.n_qubits))
            big = sp.kron(u, u, format="csr")       # H is real symmetric
            sup = (big @ sup @ big).tocsr()
        sup.eliminate_zeros()
        return sup

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """L(rho) in the model basis (dense, for checks)."""
        h = self.hamiltonian()
        out = -1j * (h @ rho - rho @ h)
        for _, L in self.jump_operators():
            L = L.toarray()
            LdL = L.conj().T @ L
            out += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
        return out


def build_effective_model(config, schedule: DriveSchedule, params: SystemParams,
                          power_broadening: bool = False, broadening_factor: float = 2.0,
                          include_offresonant: bool = True) -> EffectiveModel:
    """Effective operators of one configuration for a drive schedule.

    Parameters
    ----------
    config : {'Z', 'X'}
    power_broadening : bool
        Saturate every rate by adding ``broadening_factor * n * Omega^2`` to
        ``|2 Delta_n|^2`` (and ``broadening_factor * Omega^2`` to ``|2 g_n|^2``).
    include_offresonant : bool
        Keep the F != n terms.  Without them only the engineered resonant
        processes remain.
    """
    cfg = as_basis(config)
    schedule.validate_for(params.n_qubits)
    N = params.n_qubits
    jumps = []
    stark = np.zeros(N + 1)
    terms = []
    for tone in schedule.for_config(cfg):
        if tone.rabi == 0:
            continue
        for n in range(1, N + 1):
            if not include_offresonant and n != tone.index:
                continue
            rates = tone_rates(tone, n, params, power_broadening, broadening_factor)
            if rates["kappa"] > 0:
                jumps.append(EffectiveJump(cfg, tone.index, tone.sign, n, "kappa", None, rates["kappa"]))
            for ch in ("gamma0", "gamma1"):
                if rates[ch] > 0:
                    jumps.extend(EffectiveJump(cfg, tone.index, tone.sign, n, ch, a, rates[ch])
                                 for a in range(N))
            s = stark_shift(cfg, tone, n, params)
            terms.append((tone.index, tone.sign, n, s))
            stark[n] += s
    mag = max((abs(t[3]) for t in terms), default=0.0)
    # paired +/- tones cancel analytically; strip the residual round-off
    stark[np.abs(stark) <= 1e-13 * mag] = 0.0
    return EffectiveModel(cfg, N, tuple(jumps), stark, tuple(terms), power_broadening, mag)


def excited_population(config, schedule: DriveSchedule, params: SystemParams) -> float:
    """Excited-state population estimate for the GHZ state:
    linear in the Rabi frequencies and summed over every tone of the
    schedule.  ``config`` may be 'Z', 'X' or 'both'."""
    N, g = params.n_qubits, params.g
    which = ("Z", "X") if str(config).lower() == "both" else (as_basis(config).value,)
    total = 0.0
    for tone in schedule.tones:
        if tone.config.value not in which or tone.rabi == 0:
            continue
        F, om = tone.index, tone.rabi
        if tone.config is Basis.Z:
            total += N * om / (8 * (math.sqrt(N) + math.sqrt(F)) ** 2 * g**2)
            if F != N:
                total += N * om / (8 * (math.sqrt(N) - math.sqrt(F)) ** 2 * g**2)
        else:
            for n in range(2, N + 1, 2):
                w = comb(N, n, exact=True)
                total += w * n * om / (4 * (math.sqrt(n) + math.sqrt(F)) ** 2 * g**2)
                if n != F:
                    total += w * n * om / (4 * (math.sqrt(n) - math.sqrt(F)) ** 2 * g**2)
    return float(min(total, 1.0))


def ghz_loss_rate(model: EffectiveModel) -> float:
    """-d<GHZ|rho|GHZ>/dt at rho = |GHZ><GHZ| under ``model``'s jumps."""
    from .core import basis_change, ghz_state
    v = basis_change(ghz_state(model.n_qubits), model.basis).amplitudes
    loss = 0.0
    for _, L in model.jump_operators():
        Lv = L @ v
        loss += float(np.vdot(Lv, Lv).real - abs(np.vdot(v, Lv)) ** 2)
    return loss
