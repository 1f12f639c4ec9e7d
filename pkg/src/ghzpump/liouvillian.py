"""Full atom-oscillator model: truncated Hilbert space, interaction and drive
Hamiltonians, and jump operators for the Z and X coupling configurations.

Frame: everything rotates at the common excited-level / oscillator frequency
(omega_e = omega_b, omega_f = omega_c), so the interaction is static and each
drive tone carries a phase exp(i Delta t) on its raising part, with
Delta = omega_e - omega_tone.

Atom levels are labelled 0, 1, 2(=e), 3(=f).  The ground block of the
truncated space is ordered exactly like the 2**N computational register of
``core`` (atom 0 is the most significant bit).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .core import Basis, SystemParams, as_basis

LEVEL_E = 2
LEVEL_F = 3
_SQRT_HALF = 1.0 / math.sqrt(2.0)

# single-atom states as vectors over levels (0, 1, e, f)
_KET = {
    "0": np.array([1.0, 0, 0, 0]),
    "1": np.array([0, 1.0, 0, 0]),
    "e": np.array([0, 0, 1.0, 0]),
    "f": np.array([0, 0, 0, 1.0]),
    "+": np.array([_SQRT_HALF, _SQRT_HALF, 0, 0]),
    "-": np.array([_SQRT_HALF, -_SQRT_HALF, 0, 0]),
}


def _local(ket: str, bra: str) -> np.ndarray:
    return np.outer(_KET[ket], _KET[bra])


@dataclass(frozen=True)
class DriveTone:
    """One frequency component of the Z or X drive.

    ``detuning`` defaults to ``sign * sqrt(F) * g`` (resonant with the
    n = F dressed state of the matching sign).
    """

    config: Basis
    index: int
    sign: str
    rabi: float
    detuning: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "config", as_basis(self.config))
        if self.sign not in ("+", "-"):
            raise ValueError(f"tone sign must be '+' or '-', got {self.sign!r}")
        if int(self.index) != self.index or self.index < 1:
            raise ValueError(f"tone index must be a positive integer, got {self.index}")
        if self.rabi < 0:
            raise ValueError("Rabi frequency must be non-negative")
        if self.config is Basis.X and self.index % 2 == 0 and self.rabi != 0:
            raise ValueError(f"X tones with even index carry no amplitude (F={self.index})")

    def delta(self, g: float = 1.0) -> float:
        if self.detuning is not None:
            return float(self.detuning)
        return (1.0 if self.sign == "+" else -1.0) * math.sqrt(self.index) * g


@dataclass(frozen=True)
class DriveSchedule:
    """All drive tones of a protocol run (Z and X).

    Paired +/- tones of the same configuration and index must carry equal
    Rabi frequencies so that their AC Stark shifts cancel.
    """

    tones: tuple[DriveTone, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        seen = {}
        for t in self.tones:
            key = (t.config, t.index, t.sign)
            if key in seen:
                raise ValueError(f"duplicate tone {key}")
            seen[key] = t
        for (cfg, idx, sign), t in seen.items():
            partner = seen.get((cfg, idx, "-" if sign == "+" else "+"))
            if partner is not None and not math.isclose(partner.rabi, t.rabi, rel_tol=1e-12, abs_tol=0.0):
                raise ValueError(f"paired tones {cfg.value}{idx}+/- need equal Rabi frequencies")

    @classmethod
    def paired(cls, n_qubits: int, omega_z, omega_x=None) -> "DriveSchedule":
        """Build the standard schedule from per-index amplitudes.

        Parameters
        ----------
        omega_z : sequence of length N-1
            Rabi frequency of Z tones F = 1..N-1 (both signs).
        omega_x : float, mapping or sequence, optional
            X amplitudes.  A scalar applies to every odd F <= N; a sequence
            of length N is indexed by F-1 (even entries must be 0).
        """
        omega_z = list(np.atleast_1d(np.asarray(omega_z, dtype=float)))
        if len(omega_z) != n_qubits - 1:
            raise ValueError(f"need {n_qubits - 1} Z amplitudes, got {len(omega_z)}")
        tones = []
        for F, om in enumerate(omega_z, start=1):
            if om > 0:
                tones += [DriveTone(Basis.Z, F, s, float(om)) for s in "+-"]
        if omega_x is not None:
            if np.isscalar(omega_x):
                xs = {F: float(omega_x) for F in range(1, n_qubits + 1, 2)}
            elif isinstance(omega_x, dict):
                xs = {int(k): float(v) for k, v in omega_x.items()}
            else:
                arr = np.asarray(omega_x, dtype=float)
                if arr.shape != (n_qubits,):
                    raise ValueError(f"need {n_qubits} X amplitudes, got {arr.shape}")
                xs = {F: float(arr[F - 1]) for F in range(1, n_qubits + 1)}
            for F, om in sorted(xs.items()):
                if not 1 <= F <= n_qubits:
                    raise ValueError(f"X tone index {F} outside 1..{n_qubits}")
                if om > 0:
                    tones += [DriveTone(Basis.X, F, s, om) for s in "+-"]
        return cls(tuple(tones))

    def for_config(self, config) -> tuple[DriveTone, ...]:
        cfg = as_basis(config)
        return tuple(t for t in self.tones if t.config is cfg)

    def rabi(self, config, index: int) -> float:
        for t in self.for_config(config):
            if t.index == index:
                return t.rabi
        return 0.0

    def scaled(self, factor: float) -> "DriveSchedule":
        return DriveSchedule(tuple(
            DriveTone(t.config, t.index, t.sign, t.rabi * factor, t.detuning) for t in self.tones))

    def validate_for(self, n_qubits: int):
        for t in self.tones:
            top = n_qubits - 1 if t.config is Basis.Z else n_qubits
            if t.index > top:
                raise ValueError(f"{t.config.value} tone F={t.index} exceeds {top} for N={n_qubits}")


@dataclass(frozen=True)
class TruncatedSpace:
    """Product basis of N four-level atoms and two oscillators (b, c), keeping
    states with at most ``max_excitations`` quanta (atoms in e/f plus
    oscillator quanta)."""

    n_qubits: int
    max_excitations: int = 1

    def __post_init__(self):
        if self.max_excitations not in (1, 2):
            raise ValueError("max_excitations must be 1 or 2")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")

    @cached_property
    def states(self) -> tuple[tuple, ...]:
        """Basis labels ``(levels, n_b, n_c)``; ground states come first, in
        register order."""
        k = self.max_excitations
        out = []
        for levels in itertools.product(range(4), repeat=self.n_qubits):
            n_atom = sum(1 for x in levels if x >= LEVEL_E)
            if n_atom > k:
                continue
            for nb in range(k - n_atom + 1):
                for nc in range(k - n_atom - nb + 1):
                    out.append((levels, nb, nc))
        out.sort(key=lambda s: (self.excitations(s), s))
        return tuple(out)

    @staticmethod
    def excitations(state) -> int:
        levels, nb, nc = state
        return sum(1 for x in levels if x >= LEVEL_E) + nb + nc

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def dim(self) -> int:
        return len(self.states)

    @cached_property
    def ground_indices(self) -> np.ndarray:
        """Positions of the 2**N ground states, in register order."""
        idx = np.array([i for i, s in enumerate(self.states) if self.excitations(s) == 0])
        idx.setflags(write=False)
        return idx

    @cached_property
    def excitation_numbers(self) -> np.ndarray:
        arr = np.array([self.excitations(s) for s in self.states])
        arr.setflags(write=False)
        return arr

    def atom_operator(self, local: np.ndarray, atom: int) -> sp.csr_matrix:
        """Embed a 4x4 single-atom operator acting on ``atom``."""
        rows, cols, vals = [], [], []
        for j, (levels, nb, nc) in enumerate(self.states):
            col = local[:, levels[atom]]
            for new_level in np.flatnonzero(col):
                new = list(levels)
                new[atom] = int(new_level)
                tgt = self.index.get((tuple(new), nb, nc))
                if tgt is not None:
                    rows.append(tgt)
                    cols.append(j)
                    vals.append(col[new_level])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)

    def collective(self, local: np.ndarray) -> sp.csr_matrix:
        return sum((self.atom_operator(local, a) for a in range(self.n_qubits)),
                   sp.csr_matrix((self.dim, self.dim), dtype=complex))

    def annihilator(self, mode: str) -> sp.csr_matrix:
        if mode not in ("b", "c"):
            raise ValueError("mode must be 'b' or 'c'")
        rows, cols, vals = [], [], []
        for j, (levels, nb, nc) in enumerate(self.states):
            n = nb if mode == "b" else nc
            if n == 0:
                continue
            new = (levels, nb - 1, nc) if mode == "b" else (levels, nb, nc - 1)
            rows.append(self.index[new])
            cols.append(j)
            vals.append(math.sqrt(n))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)


@dataclass(frozen=True)
class DriveTerm:
    """Time-dependent Hamiltonian term ``amplitude * exp(i w t) * raising + h.c.``."""

    tone: DriveTone
    raising: sp.csr_matrix
    amplitude: float
    frequency: float

    def matrix(self, t: float) -> sp.csr_matrix:
        up = self.amplitude * np.exp(1j * self.frequency * t) * self.raising
        return (up + up.conj().T).tocsr()


@dataclass(frozen=True)
class LindbladModel:
    """Full model: static Hamiltonian, drive terms and jump operators."""

    hamiltonian: sp.csr_matrix
    drives: tuple[DriveTerm, ...]
    jumps: tuple[tuple[str, sp.csr_matrix], ...]
    space: TruncatedSpace

    @property
    def dim(self) -> int:
        return self.space.dim

    def hamiltonian_at(self, t: float) -> sp.csr_matrix:
        h = self.hamiltonian.copy()
        for d in self.drives:
            h = h + d.matrix(t)
        return h.tocsr()


def _raising_lowering(config: Basis):
    if config is Basis.Z:
        return _local("e", "1"), _local("1", "e"), "b"
    return _local("f", "-"), _local("-", "f"), "c"


def build_interaction(config, params: SystemParams, space: TruncatedSpace) -> sp.csr_matrix:
    """g (b^dag J_1e + h.c.) for Z, g (c^dag J_-f + h.c.) for X."""
    cfg = as_basis(config)
    _, lower, mode = _raising_lowering(cfg)
    a = space.annihilator(mode)
    term = params.g * (a.conj().T @ space.collective(lower))
    return (term + term.conj().T).tocsr()


def build_drive(tone: DriveTone, params: SystemParams, space: TruncatedSpace) -> DriveTerm:
    """(Omega/2) exp(i Delta t) J_e1 + h.c. (Z) or with J_f- (X)."""
    raise_local, _, _ = _raising_lowering(tone.config)
    return DriveTerm(tone=tone, raising=space.collective(raise_local),
                     amplitude=0.5 * tone.rabi, frequency=tone.delta(params.g))


def build_jumps(params: SystemParams, space: TruncatedSpace) -> list[tuple[str, sp.csr_matrix]]:
    """All spontaneous-emission and oscillator-loss operators, including
    zero-rate ones (labels describe channel and atom)."""
    jumps = []
    for a in range(space.n_qubits):
        for label, rate, local in (("gamma_0e", params.gamma_0e, _local("0", "e")),
                                   ("gamma_1e", params.gamma_1e, _local("1", "e")),
                                   ("gamma_0f", params.gamma_0f, _local("0", "f")),
                                   ("gamma_1f", params.gamma_1f, _local("1", "f"))):
            jumps.append((f"{label}[{a}]", math.sqrt(rate) * space.atom_operator(local, a)))
    jumps.append(("kappa_b", math.sqrt(params.kappa_b) * space.annihilator("b")))
    jumps.append(("kappa_c", math.sqrt(params.kappa_c) * space.annihilator("c")))
    return jumps


def build_full_model(schedule: DriveSchedule, params: SystemParams,
                     max_excitations: int = 1, configs=("Z", "X")) -> LindbladModel:
    """Assemble the truncated full model for the given drive schedule.

    ``configs`` selects which coupling configurations get an interaction
    term; tones of a configuration not listed are ignored.
    """
    space = TruncatedSpace(params.n_qubits, max_excitations)
    schedule.validate_for(params.n_qubits)
    cfgs = [as_basis(c) for c in configs]
    h = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for cfg in cfgs:
        h = h + build_interaction(cfg, params, space)
    drives = tuple(build_drive(t, params, space) for t in schedule.tones
                   if t.config in cfgs and t.rabi > 0)
    return LindbladModel(h.tocsr(), drives, tuple(build_jumps(params, space)), space)


def embed_ground(rho_ground: np.ndarray, space: TruncatedSpace) -> np.ndarray:
    """Place a 2**N ground-space matrix into the truncated space."""
    out = np.zeros((space.dim, space.dim), dtype=complex)
    g = space.ground_indices
    out[np.ix_(g, g)] = rho_ground
    return out
