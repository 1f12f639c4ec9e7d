"""Qubit register tooling: physical parameters, GHZ states, sector projectors
and the Z <-> X basis change.

Conventions
-----------
* Frequencies are in units of the atom-oscillator coupling ``g`` and times in
  units of ``1/g``.  ``SystemParams.g`` defaults to 1.
* Computational index ``i`` of an N-qubit register is read big-endian: atom 0
  is the most significant bit, so ``|e10>`` style labels read left to right.
* In the X basis bit value 0 stands for ``|+>`` and 1 for ``|->``.  The sector
  count of a bitstring is the number of set bits in whichever basis the
  object is tagged with (``n_1`` for Z, ``n_-`` for X).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class Basis(str, enum.Enum):
    Z = "Z"
    X = "X"

    def other(self) -> "Basis":
        return Basis.X if self is Basis.Z else Basis.Z


def as_basis(value) -> Basis:
    try:
        return Basis(value.value if isinstance(value, Basis) else str(value).upper())
    except ValueError:
        raise ValueError(f"unknown basis/config {value!r}; expected 'Z' or 'X'") from None


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the N-atom, two-oscillator model.

    ``gamma_e``/``gamma_f`` are the total decay rates of the excited levels and
    must equal the sum of their branching rates into ``|0>`` and ``|1>``.
    """

    n_qubits: int
    gamma_e: float
    gamma_f: float
    gamma_0e: float
    gamma_1e: float
    gamma_0f: float
    gamma_1f: float
    kappa_b: float = 0.0
    kappa_c: float = 0.0
    g: float = 1.0

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 2:
            raise ValueError(f"n_qubits must be an integer >= 2, got {self.n_qubits}")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        for name in ("gamma_e", "gamma_f", "gamma_0e", "gamma_1e", "gamma_0f",
                     "gamma_1f", "kappa_b", "kappa_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for total, parts in (("gamma_e", ("gamma_0e", "gamma_1e")),
                             ("gamma_f", ("gamma_0f", "gamma_1f"))):
            branch_sum = sum(getattr(self, p) for p in parts)
            if not math.isclose(branch_sum, getattr(self, total), rel_tol=1e-12, abs_tol=1e-300):
                raise ValueError(f"{parts[0]} + {parts[1]} must equal {total}")

    @classmethod
    def symmetric(cls, n_qubits: int, gamma_e: float, gamma_f: float | None = None,
                  kappa_b: float = 0.0, kappa_c: float = 0.0, g: float = 1.0) -> "SystemParams":
        """Equal branching into both ground states (the protocol default)."""
        gamma_f = gamma_e if gamma_f is None else gamma_f
        return cls(n_qubits=n_qubits, gamma_e=gamma_e, gamma_f=gamma_f,
                   gamma_0e=gamma_e / 2, gamma_1e=gamma_e / 2,
                   gamma_0f=gamma_f / 2, gamma_1f=gamma_f / 2,
                   kappa_b=kappa_b, kappa_c=kappa_c, g=g)

    @property
    def symmetric_branching(self) -> bool:
        return (math.isclose(self.gamma_0e, self.gamma_1e, rel_tol=1e-12, abs_tol=1e-300)
                and math.isclose(self.gamma_0f, self.gamma_1f, rel_tol=1e-12, abs_tol=1e-300))

    def decay(self, config) -> tuple[float, float, float, float]:
        """(total, to-|0>, to-|1>, oscillator) decay rates of a configuration."""
        if as_basis(config) is Basis.Z:
            return self.gamma_e, self.gamma_0e, self.gamma_1e, self.kappa_b
        return self.gamma_f, self.gamma_0f, self.gamma_1f, self.kappa_c


@dataclass(frozen=True)
class GroundState:
    amplitudes: np.ndarray
    basis: Basis = Basis.Z

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(np.asarray(self.amplitudes, dtype=complex)))
        object.__setattr__(self, "basis", as_basis(self.basis))
        dim = self.amplitudes.shape[0]
        if self.amplitudes.ndim != 1 or dim & (dim - 1):
            raise ValueError("amplitudes must be a vector of length 2**N")

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def projector(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), self.basis)

    def overlap(self, other: "GroundState") -> complex:
        if other.basis is not self.basis:
            other = basis_change(other, self.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    data: np.ndarray
    basis: Basis = Basis.Z

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError("density matrix must be square")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "basis", as_basis(self.basis))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])

    def is_valid(self, herm_tol=1e-12, trace_tol=1e-9, eig_tol=1e-8) -> bool:
        herm = np.max(np.abs(self.data - self.data.conj().T)) <= herm_tol
        return bool(herm and abs(self.trace - 1) <= trace_tol and self.min_eigenvalue() >= -eig_tol)

    @classmethod
    def maximally_mixed(cls, n_qubits: int, basis=Basis.Z) -> "DensityMatrix":
        dim = 2**n_qubits
        return cls(np.eye(dim) / dim, basis)


@lru_cache(maxsize=None)
def hamming_weights(n_qubits: int) -> np.ndarray:
    """Set-bit count of every index 0 .. 2**N - 1."""
    idx = np.arange(2**n_qubits)
    weights = np.zeros(2**n_qubits, dtype=np.int64)
    for k in range(n_qubits):
        weights += (idx >> k) & 1
    return _frozen(weights)


@dataclass(frozen=True)
class SectorProjector:
    """Projector onto the bitstrings of Hamming weight ``n`` in ``basis``.

    Stored as a sorted index set; ``matrix()`` materialises the diagonal 0/1
    matrix in the projector's own basis.
    """

    n_qubits: int
    n: int
    basis: Basis
    indices: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.indices.size)

    def diagonal(self) -> np.ndarray:
        d = np.zeros(2**self.n_qubits)
        d[self.indices] = 1.0
        return d

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal())

    def apply(self, state: GroundState) -> GroundState:
        if state.basis is not self.basis:
            state = basis_change(state, self.basis)
        out = np.zeros_like(state.amplitudes)
        out[self.indices] = state.amplitudes[self.indices]
        return GroundState(out, self.basis)


def sector_projector(n_qubits: int, n: int, basis=Basis.Z) -> SectorProjector:
    if not 0 <= n <= n_qubits:
        raise ValueError(f"sector {n} outside [0, {n_qubits}]")
    idx = np.flatnonzero(hamming_weights(n_qubits) == n)
    return SectorProjector(n_qubits, n, as_basis(basis), _frozen(idx))


def ghz_state(n_qubits: int, sign: str = "+") -> GroundState:
    """(|0...0> +/- |1...1>)/sqrt(2) in the Z basis."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    v = np.zeros(2**n_qubits, dtype=complex)
    v[0] = 1 / math.sqrt(2)
    v[-1] = (1 if sign == "+" else -1) / math.sqrt(2)
    return GroundState(v, Basis.Z)


@lru_cache(maxsize=16)
def hadamard_transform(n_qubits: int) -> np.ndarray:
    """H^{(x)N}: maps Z-basis coordinates to X-basis coordinates (and back)."""
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)
    out = np.ones((1, 1))
    for _ in range(n_qubits):
        out = np.kron(out, h)
    return _frozen(out)


def basis_change(obj, target_basis):
    """Re-express a GroundState or DensityMatrix in ``target_basis``.

    The per-qubit transform is its own inverse, so the same matrix serves in
    both directions.  Returns the input unchanged if it is already tagged
    with the target basis.
    """
    target = as_basis(target_basis)
    if obj.basis is target:
        return obj
    if isinstance(obj, GroundState):
        h = hadamard_transform(obj.n_qubits)
        return GroundState(h @ obj.amplitudes, target)
    if isinstance(obj, DensityMatrix):
        n = obj.dim.bit_length() - 1
        if obj.dim != 2**n:
            raise ValueError("basis change needs a 2**N dimensional ground-space matrix")
        h = hadamard_transform(n)
        return DensityMatrix(h @ obj.data @ h, target)
    raise TypeError(f"cannot change basis of {type(obj).__name__}")


def fidelity(rho: DensityMatrix, target: GroundState) -> float:
    """<target| rho |target> for a pure target state."""
    if rho.dim != target.amplitudes.shape[0]:
        raise ValueError(f"dimension mismatch: rho is {rho.dim}, target is {target.amplitudes.shape[0]}")
    if target.basis is not rho.basis:
        target = basis_change(target, rho.basis)
    v = target.amplitudes
    return float(np.real(np.vdot(v, rho.data @ v)))


def sector_populations(rho: DensityMatrix, basis=Basis.Z) -> np.ndarray:
    """Population of every sector n = 0..N in ``basis``."""
    rho = basis_change(rho, basis)
    n = rho.dim.bit_length() - 1
    diag = np.real(np.diag(rho.data))
    return np.bincount(hamming_weights(n), weights=diag, minlength=n + 1)
