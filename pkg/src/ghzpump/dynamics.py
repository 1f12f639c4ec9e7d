"""Time evolution of density matrices under full or effective Lindblad models.

Density matrices are vectorised row-major (``vec(rho) = rho.reshape(-1)``),
so ``vec(A rho B) = (A kron B^T) vec(rho)``.

Two propagation engines are used:

* time-independent effective generators are propagated exactly: an
  orthonormal basis of the Krylov space reachable from ``vec(rho0)`` is built
  by Arnoldi iteration and the small projected generator is exponentiated.
  With a permutation-symmetric start state (e.g. fully mixed) the reachable
  space has at most ``C(N+3, 3)`` dimensions;
* time-dependent (full-model) generators use an adaptive Dormand-Prince 5(4)
  pair with Hermitian symmetrisation after every accepted step.  When the
  initial state is invariant under atom permutations, the state is expanded
  in orbit sums of matrix units, an exactly invariant subspace of the
  permutation-symmetric Liouvillian that is roughly N! times smaller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _rk
from .core import (Basis, DensityMatrix, as_basis, basis_change, ghz_state, hadamard_transform,
                   hamming_weights)
from .effective import EffectiveModel
from .liouvillian import LindbladModel, embed_ground


class IntegrationError(RuntimeError):
    """Numerical failure of a time evolution (step underflow, divergence)."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings shared by all evolutions (times in units of 1/g).

    ``method`` is ``'auto'`` (exact exponential for effective models,
    Runge-Kutta for the full model), ``'rk45'`` or ``'expm'``.  Samples are
    taken every ``sample_stride`` (default ``t_max / 200``); ``trotter_slice``
    defaults to a tenth of the inverse Z-pumping time.
    """

    t_max: float = 1000.0
    method: str = "auto"
    rtol: float = 1e-8
    atol: float = 1e-10
    initial_step: float | None = None
    sample_stride: float | None = None
    trotter_slice: float | None = None
    max_steps: int = 50_000_000
    trace_tol: float = 1e-6
    positivity_tol: float = 1e-8
    krylov_max_dim: int = 800
    use_symmetry: bool = True

    def __post_init__(self):
        if self.method not in ("auto", "rk45", "expm"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        for name in ("initial_step", "sample_stride", "trotter_slice"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive")

    def sample_times(self) -> np.ndarray:
        stride = self.sample_stride or self.t_max / 200.0
        n = int(math.floor(self.t_max / stride + 1e-9))
        times = stride * np.arange(n + 1)
        if times[-1] < self.t_max * (1 - 1e-12):
            times = np.append(times, self.t_max)
        return times


@dataclass
class SimTrace:
    """Sampled observables of an evolution.

    ``populations`` are the ground-block diagonal entries in the Z basis,
    ``sectors`` the Z-sector populations n_1 = 0..N, ``trace_deviation`` is
    ``Tr rho - 1`` of the whole (ground + excited) state.
    """

    times: np.ndarray
    fidelity: np.ndarray
    ghz_minus: np.ndarray
    sectors: np.ndarray
    populations: np.ndarray
    trace_deviation: np.ndarray
    min_eigenvalue: np.ndarray
    final_state: DensityMatrix | None = None
    failed: bool = False
    message: str = ""
    info: dict = field(default_factory=dict)

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity[-1])

    def monotone_tail(self, fraction: float = 0.5, tol: float = 1e-4) -> bool:
        """Fidelity non-decreasing (within ``tol``) over the last ``fraction``."""
        start = int(len(self.fidelity) * (1 - fraction))
        return bool(np.all(np.diff(self.fidelity[start:]) >= -tol))

    def check(self, positivity_tol: float = 1e-8, trace_tol: float = 1e-6) -> None:
        problems = []
        if np.max(np.abs(self.trace_deviation)) > trace_tol:
            problems.append(f"trace deviation {np.max(np.abs(self.trace_deviation)):.3g}")
        if np.min(self.min_eigenvalue) < -positivity_tol:
            problems.append(f"min eigenvalue {np.min(self.min_eigenvalue):.3g}")
        if problems:
            self.failed = True
            self.message = "; ".join(([self.message] if self.message else []) + problems)


# --------------------------------------------------------------------------
# generators


def _hadamard_vec(v: np.ndarray, h: np.ndarray) -> np.ndarray:
    d = h.shape[0]
    return (h @ v.reshape(d, d) @ h).reshape(-1)


def _commutator_super(a: sp.spmatrix) -> sp.csr_matrix:
    """Superoperator of rho -> -i [a, rho]."""
    eye = sp.identity(a.shape[0], format="csr", dtype=complex)
    return (-1j * (sp.kron(a, eye) - sp.kron(eye, a.T))).tocsr()


def _dissipator_super(jumps) -> sp.csr_matrix:
    out = None
    for L in jumps:
        if L.nnz == 0:
            continue
        L = sp.csr_matrix(L, dtype=complex)
        eye = sp.identity(L.shape[0], format="csr", dtype=complex)
        LdL = (L.conj().T @ L).tocsr()
        term = sp.kron(L, L.conj()) - 0.5 * (sp.kron(LdL, eye) + sp.kron(eye, LdL.T))
        out = term if out is None else out + term
    return out


class EffectiveGenerator:
    """Sum of effective Liouvillians acting on ground-space matrices in a
    common basis.  Models tagged with the other basis are applied through the
    per-qubit basis change."""

    def __init__(self, models: EffectiveModel | Sequence[EffectiveModel], basis=Basis.Z):
        models = (models,) if isinstance(models, EffectiveModel) else tuple(models)
        if not models:
            raise ValueError("need at least one effective model")
        n = {m.n_qubits for m in models}
        if len(n) != 1:
            raise ValueError("effective models act on different registers")
        self.n_qubits = n.pop()
        self.basis = as_basis(basis)
        self.models = models
        self.dim = 2**self.n_qubits
        self._h = np.asarray(hadamard_transform(self.n_qubits), dtype=complex)
        same = sp.csr_matrix((self.dim**2, self.dim**2), dtype=complex)
        other = None
        for m in models:
            s = m.superoperator()
            if m.basis is self.basis:
                same = same + s
            else:
                other = s if other is None else other + s
        self._same = same.tocsr()
        self._other = other

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self._same @ v
        if self._other is not None:
            out = out + _hadamard_vec(self._other @ _hadamard_vec(v, self._h), self._h)
        return out

    def sparse(self) -> sp.csr_matrix:
        """Explicit superoperator (builds a dense basis-change product, so
        only sensible for small registers)."""
        if self._other is None:
            return self._same
        u = sp.csr_matrix(np.kron(self._h, self._h))
        return (self._same + u @ self._other @ u).tocsr()

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()


@dataclass
class LinearSystem:
    """``dc/dt = sum_k phase_k(t) A_k c`` in (possibly reduced) coordinates.

    ``lift`` maps coordinates to ``vec(rho)`` (``None`` = identity); ``adj``
    is the index map of Hermitian conjugation in these coordinates.
    """

    terms: list                      # sparse A_k, k = 0 is static
    freqs: np.ndarray                # angular frequency of terms 1..
    adj: np.ndarray
    hilbert_dim: int
    lift: sp.csr_matrix | None = None

    def __post_init__(self):
        rows, cols, vals, tags = [], [], [], []
        for k, a in enumerate(self.terms):
            a = sp.coo_matrix(a)
            rows.append(a.row)
            cols.append(a.col)
            vals.append(a.data.astype(complex))
            tags.append(np.full(a.nnz, k, dtype=np.int64))
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        vals, tags = np.concatenate(vals), np.concatenate(tags)
        keep = vals != 0
        rows, cols, vals, tags = rows[keep], cols[keep], vals[keep], tags[keep]
        order = np.lexsort((cols, rows))
        n = self.terms[0].shape[0]
        self.size = n
        self._indices = cols[order].astype(np.int64)
        self._data = vals[order]
        self._term = tags[order]
        self._indptr = np.searchsorted(rows[order], np.arange(n + 1)).astype(np.int64)
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.adj = np.asarray(self.adj, dtype=np.int64)

    def to_vec(self, c: np.ndarray) -> np.ndarray:
        return c.copy() if self.lift is None else self.lift @ c

    def from_vec(self, v: np.ndarray) -> np.ndarray:
        return v.copy() if self.lift is None else self.lift.T @ v

    def rhs(self, t: float, c: np.ndarray) -> np.ndarray:
        out = np.empty(self.size, dtype=complex)
        _rk._rhs(t, np.ascontiguousarray(c, dtype=complex), self._indptr, self._indices,
                 self._data, self._term, self.freqs, out)
        return out

    def integrate(self, c: np.ndarray, t0: float, t1: float, h: float, cfg: IntegratorConfig):
        """Advance ``c`` in place from t0 to t1; returns (proposed step, steps)."""
        t, h, steps, status = _rk.integrate_segment(
            c, t0, t1, h, cfg.rtol, cfg.atol, cfg.max_steps, self._indptr, self._indices,
            self._data, self._term, self.freqs, self.adj, _rk._A, _rk._C, _rk._E)
        if status != _rk.OK:
            reason = {_rk.BUDGET: "step budget exhausted", _rk.UNDERFLOW: "step size underflow",
                      _rk.NONFINITE: "non-finite state"}[status]
            raise IntegrationError(f"{reason} at t={t:.6g}")
        return h, steps


def _transpose_index(d: int) -> np.ndarray:
    idx = np.arange(d * d)
    return (idx % d) * d + idx // d


def _ground_orbits(n_qubits: int) -> sp.csc_matrix:
    """Orthonormal orbit sums of ground-space matrix units under atom
    permutations, as columns over vec(rho) (C(N+3, 3) of them)."""
    d = 2**n_qubits
    bits = (np.arange(d)[:, None] >> np.arange(n_qubits)[None, :]) & 1
    codes = np.sort(2 * bits[:, None, :] + bits[None, :, :], axis=2).reshape(d * d, -1)
    _, orbit = np.unique(codes, axis=0, return_inverse=True)
    orbit = orbit.reshape(-1)
    sizes = np.bincount(orbit)
    return sp.csc_matrix((1.0 / np.sqrt(sizes[orbit]), (np.arange(d * d), orbit)),
                         shape=(d * d, sizes.size), dtype=complex)


def effective_propagator(gen: "EffectiveGenerator", v0: np.ndarray,
                         max_dim: int = 800) -> "ReducedPropagator":
    """Exact propagator of an effective generator from ``v0``: the
    permutation-orbit space for symmetric ``v0`` (the effective models are
    permutation invariant), otherwise the Krylov space of ``v0``."""
    q = _ground_orbits(gen.n_qubits)
    if np.linalg.norm(q @ (q.conj().T @ v0) - v0) <= 1e-12 * max(1.0, np.linalg.norm(v0)):
        return ReducedPropagator.from_basis(gen.matvec, q, v0)
    return ReducedPropagator(gen.matvec, v0, max_dim)


def _orbit_reduction(model: LindbladModel):
    """Orbits of matrix units |i><j| under simultaneous atom permutations.

    Returns (orbit id per vec index, lift matrix with orthonormal columns,
    adjoint map of orbits).
    """
    space = model.space
    levels = np.array([s[0] for s in space.states], dtype=np.int64)
    osc = np.array([(s[1], s[2]) for s in space.states], dtype=np.int64)
    d = space.dim
    codes = np.sort(4 * levels[:, None, :] + levels[None, :, :], axis=2)      # d x d x N
    key = np.concatenate([codes.reshape(d * d, -1),
                          np.repeat(osc, d, axis=0), np.tile(osc, (d, 1))], axis=1)
    _, orbit = np.unique(key, axis=0, return_inverse=True)
    orbit = orbit.reshape(-1)
    r = int(orbit.max()) + 1
    sizes = np.bincount(orbit, minlength=r)
    lift = sp.csr_matrix((1.0 / np.sqrt(sizes[orbit]), (np.arange(d * d), orbit)),
                         shape=(d * d, r), dtype=complex)
    adj = np.empty(r, dtype=np.int64)
    adj[orbit] = orbit[_transpose_index(d)]
    return orbit, lift, adj


def full_system(model: LindbladModel, reduce: bool = True) -> LinearSystem:
    """Linear system of the full model; ``reduce`` restricts it to the
    permutation-symmetric operators (exact for symmetric initial states)."""
    d = model.dim
    static = _commutator_super(model.hamiltonian.astype(complex))
    diss = _dissipator_super([L for _, L in model.jumps])
    if diss is not None:
        static = static + diss
    groups: dict[float, sp.csr_matrix] = {}
    for term in model.drives:
        up = term.amplitude * term.raising
        for w, op in ((term.frequency, up), (-term.frequency, up.conj().T)):
            s = _commutator_super(op)
            groups[w] = groups[w] + s if w in groups else s
    freqs = np.array(sorted(groups))
    terms = [static.tocsr()] + [groups[w] for w in freqs]
    if reduce:
        _, lift, adj = _orbit_reduction(model)
        liftT = lift.T.tocsr()
        terms = [(liftT @ a @ lift).tocsr() for a in terms]
        return LinearSystem(terms, freqs, adj, d, lift)
    return LinearSystem(terms, freqs, _transpose_index(d), d)


def effective_system(gen: EffectiveGenerator) -> LinearSystem:
    return LinearSystem([gen.sparse()], np.zeros(0), _transpose_index(gen.dim), gen.dim)


def _is_symmetric(system: LinearSystem, v: np.ndarray, tol: float = 1e-12) -> bool:
    proj = system.lift @ (system.lift.T @ v)
    return float(np.linalg.norm(proj - v)) <= tol * max(1.0, float(np.linalg.norm(v)))


# --------------------------------------------------------------------------
# exact propagation in a Krylov-invariant subspace


class ReducedPropagator:
    """exp(t L) v0 restricted to the L-invariant Krylov space of v0."""

    def __init__(self, matvec: Callable[[np.ndarray], np.ndarray], v0: np.ndarray,
                 max_dim: int = 800, tol: float = 1e-13):
        beta = float(np.linalg.norm(v0))
        if beta == 0:
            raise ValueError("start vector is zero")
        n = v0.size
        cap = min(max_dim, n)
        basis = [v0 / beta]
        hess = np.zeros((cap + 1, cap), dtype=complex)
        scale = 0.0
        k = None
        for j in range(cap):
            w = matvec(basis[j])
            scale = max(scale, float(np.linalg.norm(w)))
            for _ in range(2):        # second pass removes round-off
                for i, q in enumerate(basis):
                    c = np.vdot(q, w)
                    hess[i, j] += c
                    w = w - c * q
            nrm = float(np.linalg.norm(w))
            if nrm <= tol * max(scale, 1.0):
                k = j + 1
                break
            hess[j + 1, j] = nrm
            basis.append(w / nrm)
        if k is None:
            if cap < n:
                raise IntegrationError(f"Krylov space exceeded {max_dim} dimensions")
            k = n
        self.q = np.array(basis[:k]).T
        self.m = hess[:k, :k]
        self.c0 = np.zeros(k, dtype=complex)
        self.c0[0] = beta
        self.rank = k

    @classmethod
    def from_basis(cls, matvec, q: np.ndarray, v0: np.ndarray) -> "ReducedPropagator":
        """Propagator on a known invariant subspace with orthonormal columns ``q``."""
        self = cls.__new__(cls)
        qh = q.conj().T.tocsr()
        self.q = q
        self.m = np.column_stack([qh @ matvec(q[:, [i]].toarray().ravel())
                                  for i in range(q.shape[1])])
        self.c0 = qh @ v0
        self.rank = q.shape[1]
        return self

    def residual(self, matvec) -> float:
        """||L Q - Q M|| / ||M||: zero for an exactly invariant subspace."""
        lq = np.column_stack([matvec(self.q[:, i]) for i in range(self.rank)])
        return float(np.linalg.norm(lq - self.q @ self.m) / max(np.linalg.norm(self.m), 1e-300))

    def coefficients(self, t: float) -> np.ndarray:
        return la.expm(t * self.m) @ self.c0

    def state(self, t: float) -> np.ndarray:
        return self.q @ self.coefficients(t)

    def states(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, self.q.shape[0]), dtype=complex)
        coeff = self.coefficients(times[0])
        out[0] = self.q @ coeff
        steps = np.diff(times)
        uniform = steps.size > 0 and np.allclose(steps, steps[0], rtol=1e-12, atol=0)
        step_prop = la.expm(steps[0] * self.m) if uniform else None
        for i in range(1, times.size):
            prop = step_prop if uniform else la.expm(steps[i - 1] * self.m)
            coeff = prop @ coeff
            out[i] = self.q @ coeff
        return out


# --------------------------------------------------------------------------
# observables


class _Observer:
    def __init__(self, n_qubits: int, ground_idx=None, dim=None):
        self.n = n_qubits
        self.ghz = ghz_state(n_qubits, "+").amplitudes
        self.ghzm = ghz_state(n_qubits, "-").amplitudes
        self.ground_idx = ground_idx
        self.dim = dim or 2**n_qubits

    def split(self, v: np.ndarray):
        full = v.reshape(self.dim, self.dim)
        if self.ground_idx is None:
            return full, full
        g = self.ground_idx
        return full[np.ix_(g, g)], full

    def fidelity(self, v: np.ndarray) -> float:
        ground, _ = self.split(v)
        return float(np.real(np.vdot(self.ghz, ground @ self.ghz)))

    def row(self, v: np.ndarray):
        ground, full = self.split(v)
        fid = float(np.real(np.vdot(self.ghz, ground @ self.ghz)))
        fm = float(np.real(np.vdot(self.ghzm, ground @ self.ghzm)))
        pops = np.real(np.diag(ground))
        sectors = np.bincount(hamming_weights(self.n), weights=pops, minlength=self.n + 1)
        tr = float(np.real(np.trace(full))) - 1.0
        lam = float(np.linalg.eigvalsh(0.5 * (full + full.conj().T))[0])
        return fid, fm, sectors, pops, tr, lam

    def trace(self, times, vecs) -> SimTrace:
        rows = [self.row(v) for v in vecs]
        fid, fm, sec, pops, tr, lam = (np.array(x) for x in zip(*rows))
        ground, _ = self.split(vecs[-1])
        return SimTrace(np.asarray(times, dtype=float), fid, fm, sec, pops, tr, lam,
                        DensityMatrix(ground, Basis.Z))


# --------------------------------------------------------------------------
# public operations


def _as_ground(rho0, basis=Basis.Z) -> np.ndarray:
    if isinstance(rho0, DensityMatrix):
        return basis_change(rho0, basis).data
    return np.asarray(rho0, dtype=complex)


def _is_effective(model) -> bool:
    if isinstance(model, EffectiveModel):
        return True
    return (isinstance(model, (list, tuple)) and len(model) > 0
            and all(isinstance(m, EffectiveModel) for m in model))


def initial_state(n_qubits: int, basis=Basis.Z) -> DensityMatrix:
    """Default initial state: fully mixed over the ground space."""
    return DensityMatrix.maximally_mixed(n_qubits, basis)


def _run_rk(system: LinearSystem, v0: np.ndarray, times: np.ndarray, cfg: IntegratorConfig):
    c = np.ascontiguousarray(system.from_vec(v0), dtype=complex).copy()
    h = cfg.initial_step or 0.05
    out = [system.to_vec(c)]
    total = 0
    for t0, t1 in zip(times[:-1], times[1:]):
        h, steps = system.integrate(c, float(t0), float(t1), h, cfg)
        total += steps
        out.append(system.to_vec(c))
    return out, total


def _prepare_full(model: LindbladModel, rho0, cfg: IntegratorConfig):
    v0 = embed_ground(_as_ground(rho0), model.space).reshape(-1)
    system = full_system(model, reduce=cfg.use_symmetry)
    if system.lift is not None and not _is_symmetric(system, v0):
        system = full_system(model, reduce=False)
    obs = _Observer(model.space.n_qubits, model.space.ground_indices, model.dim)
    return system, v0, obs


def evolve(model, rho0: DensityMatrix, cfg: IntegratorConfig | None = None,
           times=None) -> SimTrace:
    """Evolve ``rho0`` under a full model, an effective model, or several
    effective models acting simultaneously.

    Parameters
    ----------
    model : LindbladModel, EffectiveModel or sequence of EffectiveModel
    rho0 : DensityMatrix
        Ground-space initial state (excited sectors start empty).
    times : array, optional
        Sample times; default from ``cfg``.

    Returns
    -------
    SimTrace
        Observables in the Z basis; ``failed`` is set if the trace or
        positivity tolerances of ``cfg`` are violated.
    """
    cfg = cfg or IntegratorConfig()
    times = cfg.sample_times() if times is None else np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if _is_effective(model):
        gen = EffectiveGenerator(model, Basis.Z)
        obs = _Observer(gen.n_qubits)
        v0 = _as_ground(rho0).reshape(-1)
        info = {}
        vecs = None
        if cfg.method != "rk45":
            try:
                prop = effective_propagator(gen, v0, cfg.krylov_max_dim)
                vecs = prop.states(times)
                info["reduced_dim"] = prop.rank
            except IntegrationError:
                vecs = None
        if vecs is None:
            vecs, steps = _run_rk(effective_system(gen), v0, times, cfg)
            info["steps"] = steps
        trace = obs.trace(times, vecs)
        trace.info.update(info)
    elif isinstance(model, LindbladModel):
        if cfg.method == "expm":
            raise ValueError("the full model is time dependent; use 'rk45' or 'auto'")
        system, v0, obs = _prepare_full(model, rho0, cfg)
        vecs, steps = _run_rk(system, v0, times, cfg)
        trace = obs.trace(times, vecs)
        trace.info.update(steps=steps, reduced_dim=system.size)
    else:
        raise TypeError(f"cannot evolve {type(model).__name__}")
    trace.check(cfg.positivity_tol, cfg.trace_tol)
    return trace


def z_pumping_rate(model_z: EffectiveModel) -> float:
    """Inverse Z pumping time from the resonant gamma0 rates of a Z model,
    ``1 / sum_n 1/(n r_n)`` over n = 1..max(N-2, 1) with ``r_n`` the per-atom
    rate in sector n."""
    if model_z.basis is not Basis.Z:
        raise ValueError("need a Z-configuration model")
    N = model_z.n_qubits
    per_atom: dict[int, float] = {}
    for j in model_z.jumps:
        if j.channel == "gamma0" and j.resonant and j.atom == 0:
            per_atom[j.n] = per_atom.get(j.n, 0.0) + j.rate
    total = 0.0
    for n in range(1, max(N - 2, 1) + 1):
        r = n * per_atom.get(n, 0.0)
        if r == 0:
            return 0.0
        total += 1.0 / r
    return 1.0 / total


def trotter_evolve(model_z: EffectiveModel, model_x: EffectiveModel | None, rho0: DensityMatrix,
                   cfg: IntegratorConfig | None = None) -> SimTrace:
    """Lie splitting: every slice of duration tau applies exp(tau L_Z) in the
    Z basis, then exp(tau L_X) in the X basis.  Samples are taken at the
    slice boundaries closest to the configured sample times."""
    cfg = cfg or IntegratorConfig()
    N = model_z.n_qubits
    if model_x is not None and model_x.n_qubits != N:
        raise ValueError("Z and X models act on different registers")
    tau = cfg.trotter_slice
    if tau is None:
        rate = z_pumping_rate(model_z)
        if rate == 0:
            raise ValueError("cannot derive a Trotter slice without Z pumping; set trotter_slice")
        tau = 0.1 / rate
    n_slices = max(1, int(round(cfg.t_max / tau)))
    tau = cfg.t_max / n_slices
    small = 4**N <= 4096
    lz = model_z.superoperator(Basis.Z)
    lx = model_x.superoperator(Basis.X) if model_x is not None and model_x.jumps else None
    dz = la.expm(lz.toarray() * tau) if small else None
    dx = la.expm(lx.toarray() * tau) if small and lx is not None else None
    h = np.asarray(hadamard_transform(N), dtype=complex)

    def step_z(v):
        return dz @ v if dz is not None else spla.expm_multiply(tau * lz, v)

    def step_x(v):
        w = _hadamard_vec(v, h)
        w = dx @ w if dx is not None else spla.expm_multiply(tau * lx, w)
        return _hadamard_vec(w, h)

    want = set(np.unique(np.round(cfg.sample_times() / tau).astype(int)).tolist())
    v = _as_ground(rho0).reshape(-1).astype(complex)
    vecs, times = [], []
    if 0 in want:
        vecs.append(v.copy())
        times.append(0.0)
    d = 2**N
    for k in range(1, n_slices + 1):
        v = step_z(v)
        if lx is not None:
            v = step_x(v)
        rho = v.reshape(d, d)
        v = (0.5 * (rho + rho.conj().T)).reshape(-1)
        if k in want:
            vecs.append(v.copy())
            times.append(k * tau)
    trace = _Observer(N).trace(np.array(times), vecs)
    trace.info["trotter_slice"] = tau
    trace.check(cfg.positivity_tol, cfg.trace_tol)
    return trace


@dataclass
class SteadyState:
    """Null space of a Liouvillian.

    ``rho`` is the unique stationary state (``None`` if degenerate);
    ``states`` is a Hermitian basis of the null space, each normalised to
    unit trace where the trace is non-zero.
    """

    rho: DensityMatrix | None
    null_dim: int
    residual: float
    states: list

    @property
    def unique(self) -> bool:
        return self.null_dim == 1


def _hermitian_basis(vectors: np.ndarray, d: int, tol: float = 1e-9) -> list[np.ndarray]:
    cands = []
    for v in vectors.T:
        m = v.reshape(d, d)
        cands += [0.5 * (m + m.conj().T), 0.5j * (m - m.conj().T)]
    flat = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cands]).T
    u, s, _ = np.linalg.svd(flat, full_matrices=False)
    k = int(np.sum(s > tol * s[0]))
    # prefer a trace-carrying first element
    basis = [(u[: d * d, i] + 1j * u[d * d:, i]).reshape(d, d) for i in range(k)]
    traces = np.array([np.trace(m).real for m in basis])
    order = np.argsort(-np.abs(traces))
    out = []
    for i in order:
        m = 0.5 * (basis[i] + basis[i].conj().T)
        tr = np.trace(m).real
        out.append(m / tr if abs(tr) > 1e-10 else m)
    return out


def steady_state(model, basis=Basis.Z, tol: float = 1e-10) -> SteadyState:
    """Stationary state(s) of an effective model (or simultaneous models).

    A dense null-space computation is used for registers up to N = 6; larger
    registers use a sparse solve with the trace constraint, which assumes a
    unique stationary state.
    """
    if not _is_effective(model):
        raise TypeError("steady_state needs effective models (the full model is time dependent)")
    target = as_basis(basis)
    gen = EffectiveGenerator(model, target)
    d = gen.dim
    if d * d <= 4096:
        L = gen.dense()
        _, s, vh = np.linalg.svd(L)
        null = vh[s <= 1e-9 * max(s[0], 1e-300)].conj().T
        if null.shape[1] == 0:
            null = vh[-1:].conj().T
        states = _hermitian_basis(null, d)
        residual = max(float(np.linalg.norm(L @ m.reshape(-1))) for m in states)
    else:
        L = gen.sparse().tolil()
        rhs = np.zeros(d * d, dtype=complex)
        L[0, :] = np.eye(d).reshape(1, -1)
        rhs[0] = 1.0
        m = spla.spsolve(L.tocsc(), rhs).reshape(d, d)
        m = 0.5 * (m + m.conj().T)
        states = [m / np.trace(m).real]
        residual = float(np.linalg.norm(gen.matvec(states[0].reshape(-1))))
    null_dim = len(states)
    rho = DensityMatrix(states[0], target) if null_dim == 1 else None
    return SteadyState(rho, null_dim, residual, states)


def _bisect(advance, fid, lo, hi, state_lo, target, rel_tol):
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        s_mid = advance(state_lo, lo, mid)
        if fid(s_mid) >= target:
            hi = mid
        else:
            lo, state_lo = mid, s_mid
    return hi


def time_to_fidelity(model, rho0: DensityMatrix, target: float,
                     cfg: IntegratorConfig | None = None, rel_tol: float = 1e-3) -> float | None:
    """First time the GHZ fidelity reaches ``target`` (units 1/g).

    The fidelity is sampled on the configured grid; the first crossing is
    refined by bisection to ``rel_tol`` relative accuracy.  Returns ``None``
    ("not reached") if the target is not attained by ``cfg.t_max``.
    """
    if not 0 < target < 1:
        raise ValueError("target fidelity must lie in (0, 1)")
    cfg = cfg or IntegratorConfig()
    times = cfg.sample_times()
    if _is_effective(model):
        gen = EffectiveGenerator(model, Basis.Z)
        obs = _Observer(gen.n_qubits)
        v0 = _as_ground(rho0).reshape(-1)
        if obs.fidelity(v0) >= target:
            return 0.0
        prop = effective_propagator(gen, v0, cfg.krylov_max_dim)
        # the fidelity is linear in rho: project its functional onto the basis
        w = np.kron(obs.ghz.conj(), obs.ghz) @ prop.q
        fid = lambda c: float(np.real(w @ c))
        advance = lambda c, t0, t1: la.expm((t1 - t0) * prop.m) @ c
        step = la.expm((times[1] - times[0]) * prop.m)
        uniform = np.allclose(np.diff(times), times[1] - times[0], rtol=1e-12, atol=0)
        coeff = prop.coefficients(0.0)
        for t0, t1 in zip(times[:-1], times[1:]):
            c_new = step @ coeff if uniform else advance(coeff, t0, t1)
            if fid(c_new) >= target:
                return _bisect(advance, fid, t0, t1, coeff, target, rel_tol)
            coeff = c_new
        return None
    if isinstance(model, LindbladModel):
        system, v0, obs = _prepare_full(model, rho0, cfg)
        fid = lambda c: obs.fidelity(system.to_vec(c))
        c = np.ascontiguousarray(system.from_vec(v0), dtype=complex)
        if fid(c) >= target:
            return 0.0
        h0 = [cfg.initial_step or 0.05]

        def advance(c_in, t0, t1):
            c_out = c_in.copy()
            h0[0], _ = system.integrate(c_out, t0, t1, h0[0], cfg)
            return c_out

        for t0, t1 in zip(times[:-1], times[1:]):
            c_new = advance(c, float(t0), float(t1))
            if fid(c_new) >= target:
                return _bisect(advance, fid, float(t0), float(t1), c, target, rel_tol)
            c = c_new
        return None
    raise TypeError(f"cannot evolve {type(model).__name__}")
