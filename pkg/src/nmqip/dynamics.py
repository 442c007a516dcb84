"""GKSL propagation, logical map families and time-local canonical generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Protocol, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .exceptions import (
    DimensionError, GeneratorError, LeakageError, NumericalError, SingularMapError,
)
from .linalg import (
    DensityMatrix, Superoperator, gell_mann_basis, hermitian_part, is_hermitian,
    matrix_exponential, partial_trace, unvec, vec,
)

PINV_CUTOFF = 1e-10
COND_CAP = 1e8
TOL_GEN = 1e-6
# physical dimensions above this switch to sparse propagation with expm_multiply
DENSE_DIM_LIMIT = 32


@dataclass(frozen=True, eq=False)
class GkslGenerator:
    """``drho/dt = -i[H, rho] + sum_k g_k (L_k rho L_k^+ - {L_k^+ L_k, rho}/2)`` with ``g_k >= 0``."""

    dim: int
    hamiltonian: np.ndarray | None = None
    dissipators: tuple[tuple[np.ndarray, float], ...] = ()

    def __post_init__(self):
        h = None
        if self.hamiltonian is not None:
            h = np.array(self.hamiltonian, dtype=complex)
            if h.shape != (self.dim, self.dim):
                raise DimensionError("Hamiltonian has the wrong shape")
            if not is_hermitian(h):
                raise ValueError("Hamiltonian is not Hermitian")
        diss = []
        for op, rate in self.dissipators:
            op = np.array(op, dtype=complex)
            if op.shape != (self.dim, self.dim):
                raise DimensionError("jump operator has the wrong shape")
            if rate < 0:
                raise ValueError("GKSL rates must be nonnegative")
            diss.append((op, float(rate)))
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "dissipators", tuple(diss))

    def _terms(self, kron, eye):
        d = self.dim
        ident = eye(d)
        out = None
        if self.hamiltonian is not None:
            h = self.hamiltonian
            out = -1j * (kron(ident, h) - kron(h.T, ident))
        for op, rate in self.dissipators:
            ldl = op.conj().T @ op
            term = rate * (kron(op.conj(), op) - 0.5 * kron(ident, ldl) - 0.5 * kron(ldl.T, ident))
            out = term if out is None else out + term
        return out

    def superoperator(self) -> np.ndarray:
        out = self._terms(np.kron, lambda d: np.eye(d, dtype=complex))
        return np.zeros((self.dim**2,) * 2, dtype=complex) if out is None else out

    def sparse_superoperator(self) -> sp.csr_matrix:
        kron = lambda a, b: sp.kron(sp.csr_matrix(a), sp.csr_matrix(b), format="csr")
        out = self._terms(kron, lambda d: sp.identity(d, dtype=complex, format="csr"))
        return sp.csr_matrix((self.dim**2,) * 2, dtype=complex) if out is None else out.tocsr()

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        out = np.zeros_like(rho, dtype=complex)
        if self.hamiltonian is not None:
            out += -1j * (self.hamiltonian @ rho - rho @ self.hamiltonian)
        for op, rate in self.dissipators:
            ldl = op.conj().T @ op
            out += rate * (op @ rho @ op.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
        return out


class Evolver:
    """Applies ``exp(L t)`` to vectorized operators for a fixed generator.

    Small systems use dense step propagators (scaling and squaring), cached per
    step length so uniform grids cost one exponential.  Larger systems apply
    the sparse Lindbladian with ``expm_multiply``.
    """

    def __init__(self, gen: GkslGenerator):
        self.gen = gen
        self.dense = gen.dim <= DENSE_DIM_LIMIT
        self._lind = gen.superoperator() if self.dense else gen.sparse_superoperator()
        self._steps: dict[float, np.ndarray] = {}
        self._norm = None if self.dense else float(abs(self._lind).sum(axis=0).max())

    def _step(self, dt: float) -> np.ndarray:
        key = round(dt, 14)
        if key not in self._steps:
            self._steps[key] = matrix_exponential(self._lind * dt)
        return self._steps[key]

    def _sparse_step(self, dt: float, cur: np.ndarray) -> np.ndarray:
        # short steps: Taylor series beats the norm estimation inside expm_multiply
        if self._norm * dt > 0.1:
            return expm_multiply(self._lind * dt, cur)
        out, term = cur.copy(), cur
        for k in range(1, 30):
            term = (self._lind @ term) * (dt / k)
            out += term
            if np.abs(term).max() <= 1e-17 * np.abs(out).max():
                break
        return out

    def evolve(self, columns: np.ndarray, offsets: Sequence[float]) -> np.ndarray:
        """States at each (nondecreasing) time offset from the origin.

        ``columns`` is ``(d^2,)`` or ``(d^2, c)``; returns ``(n, d^2[, c])``.
        """
        offsets = np.asarray(offsets, dtype=float)
        if np.any(np.diff(offsets) < 0):
            raise ValueError("time offsets must be nondecreasing")
        cur = np.asarray(columns, dtype=complex)
        out = np.empty((len(offsets),) + cur.shape, dtype=complex)
        steps = np.diff(np.concatenate([[0.0], offsets]))
        uniform = len(steps) > 2 and np.allclose(steps[1:], steps[1], rtol=1e-12, atol=1e-15)
        if not self.dense and uniform and steps[1] > 0:
            if steps[0]:
                cur = expm_multiply(self._lind * steps[0], cur)
            out[:] = expm_multiply(self._lind, cur, start=0.0, stop=offsets[-1] - offsets[0],
                                   num=len(offsets), endpoint=True)
            return out
        for i, dt in enumerate(steps):
            if dt > 0:
                cur = self._step(dt) @ cur if self.dense else self._sparse_step(dt, cur)
            elif dt < 0:
                raise ValueError("negative step")
            out[i] = cur
        return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: tuple[DensityMatrix, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def matrices(self) -> np.ndarray:
        return np.array([s.matrix for s in self.states])


def propagate(gen: GkslGenerator, rho0, times: Sequence[float],
              dims: Sequence[int] | None = None) -> Trajectory:
    """Evolve ``rho0`` (given at ``times[0]``) over a strictly increasing grid."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a strictly increasing 1-d grid")
    if dims is None:
        dims = getattr(rho0, "dims", ())
    rho0 = np.asarray(rho0)
    if rho0.shape != (gen.dim, gen.dim):
        raise DimensionError(f"state of dim {rho0.shape[0]} does not match generator dim {gen.dim}")
    DensityMatrix(rho0, dims)
    vecs = Evolver(gen).evolve(vec(rho0), times - times[0])
    states = []
    for t, v in zip(times, vecs):
        try:
            states.append(DensityMatrix(unvec(v, gen.dim), dims))
        except ValueError as err:
            raise NumericalError(f"state invariant violated at t={t:g}: {err}") from err
    meta = {"dim": gen.dim, "n_dissipators": len(gen.dissipators),
            "hamiltonian": gen.hamiltonian is not None}
    return Trajectory(times, tuple(states), meta)


# ---------------------------------------------------------------------------
# logical map families


class LogicalModel(Protocol):
    generator: GkslGenerator
    logical_dim: int
    composite_dims: tuple[int, ...]
    logical_index: int
    char_time: float

    def embed(self, op: np.ndarray) -> np.ndarray: ...


def trace_functional(dim: int) -> np.ndarray:
    return vec(np.eye(dim)).conj()


@dataclass(frozen=True, eq=False)
class MapFamily:
    """Logical maps ``E_{t1 -> t}`` on a time grid.

    ``maps[i]`` is the superoperator at ``times[i]``.  When the family was
    produced from a model, ``evaluator`` evaluates maps at arbitrary times.
    At the origin the map equals the model's embedding map (identity for a
    noiseless embedding).
    """

    t1: float
    times: np.ndarray
    maps: np.ndarray
    condition_numbers: np.ndarray
    evaluator: Callable[[Sequence[float]], np.ndarray] | None = None
    char_time: float = 1.0

    @property
    def dim(self) -> int:
        return math.isqrt(self.maps.shape[-1])

    def grid_index(self, t: float) -> int | None:
        i = int(np.searchsorted(self.times, t))
        for j in (i - 1, i):
            if 0 <= j < len(self.times) and abs(self.times[j] - t) <= 1e-12 * max(1.0, abs(t)):
                return j
        return None

    def maps_at(self, ts: Sequence[float]) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        idx = [self.grid_index(t) for t in ts]
        if all(i is not None for i in idx):
            return self.maps[idx]
        if self.evaluator is None:
            missing = [t for t, i in zip(ts, idx) if i is None]
            raise ValueError(f"times {missing} are not on the grid and the family has no evaluator")
        out = np.empty((len(ts),) + self.maps.shape[1:], dtype=complex)
        on_grid = [n for n, i in enumerate(idx) if i is not None]
        out[on_grid] = self.maps[[idx[n] for n in on_grid]]
        off = np.array([n for n, i in enumerate(idx) if i is None])
        order = off[np.argsort(ts[off], kind="stable")]
        out[order] = self.evaluator(ts[order])
        return out

    def map_at(self, t: float) -> Superoperator:
        return Superoperator(self.maps_at([t])[0])


def _condition_number(m: np.ndarray) -> float:
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else math.inf


def logical_map_family(model: LogicalModel, times: Sequence[float], t1: float = 0.0,
                       tol: float = 1e-9) -> MapFamily:
    """Reconstruct ``E_{t1 -> t}`` by propagating the embedded logical matrix units."""
    times = np.asarray(times, dtype=float)
    if np.any(times < t1) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing and start at or after t1")
    k = model.logical_dim
    dims = model.composite_dims
    big = int(np.prod(dims))
    columns = []
    for j in range(k):
        for i in range(k):
            unit = np.zeros((k, k), dtype=complex)
            unit[i, j] = 1
            emb = np.asarray(model.embed(unit))
            if emb.shape != (big, big):
                raise DimensionError("embedding returned an operator of the wrong size")
            if abs(np.trace(emb) - (i == j)) > tol:
                raise LeakageError(f"embedding of |{i}><{j}| does not preserve the trace")
            columns.append(vec(emb))
    columns = np.column_stack(columns)
    evolver = Evolver(model.generator)

    def reduce(vecs: np.ndarray) -> np.ndarray:
        out = np.empty((vecs.shape[0], k * k, k * k), dtype=complex)
        for n, block in enumerate(vecs):
            for c in range(k * k):
                out[n, :, c] = vec(partial_trace(unvec(block[:, c], big), dims, keep=[model.logical_index]))
        return out

    def evaluate(ts: Sequence[float]) -> np.ndarray:
        return reduce(evolver.evolve(columns, np.asarray(ts) - t1))

    maps = evaluate(times)
    tr = trace_functional(k)
    for t, m in zip(times, maps):
        if np.abs(tr @ m - tr).max() > tol:
            raise NumericalError(f"logical map at t={t:g} is not trace preserving")
    conds = np.array([_condition_number(m) for m in maps])
    return MapFamily(t1, times, maps, conds, evaluate, float(model.char_time))


def family_from_function(fn: Callable[[float], np.ndarray], times: Sequence[float], t1: float = 0.0,
                         char_time: float = 1.0) -> MapFamily:
    """Build a family from a callable returning superoperator matrices (e.g. closed forms)."""
    times = np.asarray(times, dtype=float)

    def evaluate(ts):
        return np.array([np.asarray(fn(float(t)), dtype=complex) for t in ts])

    maps = evaluate(times)
    return MapFamily(t1, times, maps, np.array([_condition_number(m) for m in maps]), evaluate, char_time)


def intermediate_maps(fam: MapFamily, pairs: Sequence[tuple[float, float]], cutoff: float = PINV_CUTOFF,
                      cond_cap: float = COND_CAP) -> list[Superoperator]:
    """``E_{t -> s} = E_{t1 -> s} o E_{t1 -> t}^{-1}`` for each ``(t, s)``; these may fail to be CP."""
    if any(s < t for t, s in pairs):
        raise ValueError("need s >= t")
    samples = fam.maps_at([u for pair in pairs for u in pair])
    tr = trace_functional(fam.dim)
    out = []
    for n, (t, _) in enumerate(pairs):
        e_t, e_s = samples[2 * n], samples[2 * n + 1]
        cond = _condition_number(e_t)
        if cond > cond_cap:
            raise SingularMapError(f"map at t={t:g} has condition number {cond:.2e} > {cond_cap:.0e}")
        m = e_s @ np.linalg.pinv(e_t, rcond=cutoff)
        if np.abs(tr @ m - tr).max() > 1e-8:
            raise NumericalError("intermediate map is not trace preserving")
        out.append(Superoperator(m))
    return out


def intermediate_map(fam: MapFamily, t: float, s: float, cutoff: float = PINV_CUTOFF,
                     cond_cap: float = COND_CAP) -> Superoperator:
    return intermediate_maps(fam, [(t, s)], cutoff, cond_cap)[0]


def default_step(fam: MapFamily) -> float:
    if fam.evaluator is not None:
        return 1e-4 * fam.char_time
    return float(np.min(np.diff(fam.times)))


def _stencil(fam: MapFamily, t: float, h: float) -> tuple[list[float], tuple[float, ...]]:
    """Sample times and derivative weights; the first time is ``t`` itself."""
    if t - h >= fam.t1 - 1e-15:
        return [t, t - h, t + h], (0.0, -0.5 / h, 0.5 / h)
    return [t, t + h, t + 2 * h], (-1.5 / h, 2 / h, -0.5 / h)


def generators_from_family(fam: MapFamily, ts: Sequence[float], h: float | None = None,
                           cutoff: float = PINV_CUTOFF, cond_cap: float = COND_CAP) -> list[Superoperator]:
    """Time-local generators ``dE_t/dt o E_t^{-1}`` at each of ``ts``.

    Central differences with step ``h``; near the family origin a
    second-order one-sided stencil is used instead.  All required maps are
    requested from the family in a single batch.
    """
    if h is None:
        h = default_step(fam)
    if h <= 0:
        raise ValueError("step must be positive")
    if fam.evaluator is None:
        grid_h = float(np.min(np.diff(fam.times)))
        if h < grid_h * (1 - 1e-9):
            raise ValueError(f"step {h:g} is below the grid resolution {grid_h:g}")
    stencils = [_stencil(fam, float(t), h) for t in ts]
    samples = fam.maps_at([u for st, _ in stencils for u in st])
    out = []
    for n, (t, (_, w)) in enumerate(zip(ts, stencils)):
        e = samples[3 * n:3 * n + 3]
        cond = _condition_number(e[0])
        if cond > cond_cap:
            raise SingularMapError(f"map at t={t:g} has condition number {cond:.2e} > {cond_cap:.0e}")
        deriv = w[0] * e[0] + w[1] * e[1] + w[2] * e[2]
        gen = deriv @ np.linalg.pinv(e[0], rcond=cutoff)
        if np.abs(trace_functional(fam.dim) @ gen).max() > 1e-6:
            raise GeneratorError(f"generator at t={t:g} does not annihilate the trace functional")
        out.append(Superoperator(gen))
    return out


def generator_from_family(fam: MapFamily, t: float, h: float | None = None,
                          cutoff: float = PINV_CUTOFF, cond_cap: float = COND_CAP) -> Superoperator:
    """Single-time version of :func:`generators_from_family`."""
    return generators_from_family(fam, [t], h, cutoff, cond_cap)[0]


# ---------------------------------------------------------------------------
# canonical form


def hs_to_pauli_rate(rate, dim: int):
    """Rate for a unitary jump operator ``P`` from the rate of ``P / sqrt(dim)``."""
    return np.asarray(rate) / dim if np.ndim(rate) else rate / dim


def pauli_to_hs_rate(rate, dim: int):
    return np.asarray(rate) * dim if np.ndim(rate) else rate * dim


@dataclass(frozen=True, eq=False)
class CanonicalGenerator:
    """Canonical form ``-i[H, .] + sum_k g_k (L_k . L_k^+ - {L_k^+ L_k, .}/2)``.

    ``lindblad_ops`` are traceless and Hilbert-Schmidt orthonormal and
    ``rates`` refer to that normalization; ``pauli_rates`` rescales them to
    jump operators with unit singular values (bare Paulis for a qubit).
    """

    dim: int
    hamiltonian: np.ndarray
    lindblad_ops: tuple[np.ndarray, ...]
    rates: np.ndarray
    kossakowski: np.ndarray
    symmetrization_residual: float
    time: float | None = None

    @property
    def pauli_rates(self) -> np.ndarray:
        return hs_to_pauli_rate(self.rates, self.dim)

    def superoperator(self) -> np.ndarray:
        d = self.dim
        ident = np.eye(d)
        h = self.hamiltonian
        out = -1j * (np.kron(ident, h) - np.kron(h.T, ident))
        for op, g in zip(self.lindblad_ops, self.rates):
            ldl = op.conj().T @ op
            out = out + g * (np.kron(op.conj(), op) - 0.5 * np.kron(ident, ldl) - 0.5 * np.kron(ldl.T, ident))
        return out


@lru_cache(maxsize=8)
def _decomposition_tensors(dim: int):
    """Basis ``F_0 = I/sqrt(d), F_i`` Gell-Mann; superoperators of ``rho -> F_i rho F_j^+`` and dissipator terms."""
    basis = [np.eye(dim) / math.sqrt(dim)] + gell_mann_basis(dim)
    pairs = np.array([[np.kron(fj.conj(), fi) for fj in basis] for fi in basis])
    ident = np.eye(dim)
    g = basis[1:]
    diss = np.empty((len(g), len(g), dim * dim, dim * dim), dtype=complex)
    for i, gi in enumerate(g):
        for j, gj in enumerate(g):
            prod = gj @ gi
            diss[i, j] = pairs[i + 1, j + 1] - 0.5 * np.kron(ident, prod) - 0.5 * np.kron(prod.T, ident)
    for arr in (pairs, diss):
        arr.setflags(write=False)
    return basis, pairs, diss


def canonical_decompose(gen: Superoperator | np.ndarray, dim: int | None = None,
                        tol: float = TOL_GEN, time: float | None = None) -> CanonicalGenerator:
    """Hamiltonian part, signed rates and jump operators of a generator matrix.

    The rates are the eigenvalues of the Hermitized Kossakowski matrix in a
    Hermitian traceless orthonormal operator basis, sorted ascending.
    """
    m = np.asarray(gen)
    if dim is None:
        dim = math.isqrt(m.shape[0])
    if m.shape != (dim * dim,) * 2:
        raise DimensionError(f"generator of shape {m.shape} does not act on dimension {dim}")
    basis, pairs, diss_terms = _decomposition_tensors(dim)
    n = len(basis)
    c = pairs.conj().reshape(n * n, -1) @ m.ravel()
    c = c.reshape(n, n)
    a = c[1:, 1:]
    a_h = hermitian_part(a)
    resid = float(np.abs(a - a_h).max(initial=0.0))
    if resid > tol * max(1.0, float(np.abs(a).max(initial=0.0))):
        raise GeneratorError(f"Kossakowski matrix is not Hermitian (residual {resid:.2e})")

    g = basis[1:]
    ident = np.eye(dim)
    diss = np.einsum("ij,ijab->ab", a_h, diss_terms)
    rest = m - diss
    cr = (pairs.conj().reshape(n * n, -1) @ rest.ravel()).reshape(n, n)
    left = sum(cr[i, 0] * basis[i] for i in range(n)) / math.sqrt(dim)
    right = sum(cr[0, j] * basis[j] for j in range(1, n)) / math.sqrt(dim)
    h = hermitian_part(1j * (left - right) / 2)
    h = h - np.trace(h) / dim * ident

    lam, vecs = np.linalg.eigh(a_h)
    ops = tuple(sum(v[i] * g[i] for i in range(len(g))) for v in vecs.T)
    return CanonicalGenerator(dim, h, ops, lam, a_h, resid, time)


def canonical_rates(fam: MapFamily, times: Sequence[float], h: float | None = None) -> np.ndarray:
    """Pauli-normalized canonical rates (ascending per row) at each time."""
    gens = generators_from_family(fam, times, h)
    return np.array([canonical_decompose(g, fam.dim, time=t).pauli_rates for g, t in zip(gens, times)])
