"""Dense linear algebra for states and channels.

Conventions used throughout the package:

* Operators are vectorized by **column stacking**, ``vec(rho) = rho.reshape(-1, order="F")``,
  so that ``vec(A rho B) = (B.T kron A) vec(rho)``.
* Choi matrices are built from the *normalized* maximally entangled state
  ``|Psi> = sum_i |ii> / sqrt(d)`` with the channel acting on the first factor,
  so a trace-preserving map has a unit-trace Choi matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DimensionError

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_TP = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)


def tol_psd(dim: int) -> float:
    return 1e-9 * dim


def vec(op: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(op).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = math.isqrt(v.size)
    return v.reshape(dim, -1, order="F")


def is_hermitian(m: np.ndarray, tol: float = TOL_HERM) -> bool:
    return bool(np.abs(m - m.conj().T).max(initial=0.0) <= tol)


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state.

    ``dims`` lists the subsystem dimensions in tensor order; it defaults to a
    single system.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim == 1:
            m = np.outer(m, m.conj())
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        dims = tuple(int(d) for d in self.dims) or (m.shape[0],)
        if math.prod(dims) != m.shape[0]:
            raise DimensionError(f"subsystem dims {dims} do not multiply to {m.shape[0]}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        if not is_hermitian(m):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > TOL_TRACE:
            raise ValueError(f"density matrix trace is {np.trace(m).real:.3e}, not 1")
        lam_min = np.linalg.eigvalsh(hermitian_part(m))[0]
        if lam_min < -tol_psd(m.shape[0]):
            raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """A linear map in Kraus form, ``rho -> sum_m F_m rho F_m^dagger``."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise DimensionError("Kraus operators must share one shape")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def is_trace_preserving(self, tol: float = TOL_TP) -> bool:
        s = sum(k.conj().T @ k for k in self.kraus)
        return bool(np.abs(s - np.eye(self.dim_in)).max() <= tol)

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        return sum(k @ rho @ k.conj().T for k in self.kraus)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Matrix of a linear map acting on column-stacked operators."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2:
            raise DimensionError("superoperator must be a matrix")
        for n in m.shape:
            if math.isqrt(n) ** 2 != n:
                raise DimensionError(f"superoperator shape {m.shape} is not (d_out^2, d_in^2)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim_in(self) -> int:
        return math.isqrt(self.matrix.shape[1])

    @property
    def dim_out(self) -> int:
        return math.isqrt(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return self.dim_in

    def apply(self, rho) -> np.ndarray:
        return unvec(self.matrix @ vec(np.asarray(rho)), self.dim_out)

    def compose(self, first: "Superoperator") -> "Superoperator":
        """``self o first``: apply ``first``, then ``self``."""
        return Superoperator(self.matrix @ first.matrix)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim))

    @classmethod
    def from_function(cls, fn, dim_in: int) -> "Superoperator":
        """Tomograph a linear map given as a Python callable on matrix units."""
        cols = []
        for j in range(dim_in):
            for i in range(dim_in):
                unit = np.zeros((dim_in, dim_in), dtype=complex)
                unit[i, j] = 1.0
                cols.append(vec(fn(unit)))
        return cls(np.column_stack(cols))


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray
    dim_in: int
    dim_out: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.dim_in * self.dim_out,) * 2:
            raise DimensionError(f"Choi shape {m.shape} inconsistent with dims {self.dim_in}, {self.dim_out}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class CpReport:
    is_cp: bool
    min_eigenvalue: float


# ---------------------------------------------------------------------------
# basic operations


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    return reduce(np.kron, (np.asarray(o) for o in ops))


def partial_trace(rho, dims: Sequence[int] | None = None, keep: Iterable[int] = (0,)) -> np.ndarray:
    """Reduced operator on the subsystems in ``keep`` (original order retained).

    ``dims`` defaults to ``rho.dims`` when a :class:`DensityMatrix` is passed.
    """
    if dims is None:
        dims = getattr(rho, "dims", None)
        if dims is None:
            raise DimensionError("subsystem dims are required for a bare array")
    m = np.asarray(rho)
    dims = tuple(int(d) for d in dims)
    if math.prod(dims) != m.shape[0]:
        raise DimensionError(f"dims {dims} do not match operator of size {m.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"invalid subsystem index in {keep} for {n} subsystems")
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace out from the highest index down so earlier axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    d_keep = math.prod(dims[k] for k in keep) if keep else 1
    return t.reshape(d_keep, d_keep)


def trace_norm(m) -> float:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError("trace norm needs a square matrix")
    if is_hermitian(m, 1e-13):
        return float(np.abs(np.linalg.eigvalsh(hermitian_part(m))).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def trace_distance(rho, sigma) -> float:
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"state shapes differ: {rho.shape} vs {sigma.shape}")
    return 0.5 * trace_norm(rho - sigma)


# ---------------------------------------------------------------------------
# channel representations


def kraus_to_superoperator(ch: QuantumChannel | Sequence[np.ndarray]) -> Superoperator:
    kraus = ch.kraus if isinstance(ch, QuantumChannel) else ch
    return Superoperator(sum(np.kron(k.conj(), k) for k in map(np.asarray, kraus)))


def superoperator_to_choi(s: Superoperator | np.ndarray) -> ChoiMatrix:
    s = s if isinstance(s, Superoperator) else Superoperator(s)
    din, dout = s.dim_in, s.dim_out
    # J = (1/din) sum_ij E(|i><j|) (x) |i><j|; the column of (i, j) is i + j*din
    t = s.matrix.reshape(dout, dout, din, din, order="F")  # [a, b, i, j] = E(|i><j|)[a, b]
    choi = t.transpose(0, 2, 1, 3).reshape(dout * din, dout * din) / din
    return ChoiMatrix(choi, din, dout)


def choi_to_superoperator(c: ChoiMatrix) -> Superoperator:
    din, dout = c.dim_in, c.dim_out
    t = (np.asarray(c.matrix) * din).reshape(dout, din, dout, din).transpose(0, 2, 1, 3)
    return Superoperator(t.reshape(dout * dout, din * din, order="F"))


def choi_to_kraus(c: ChoiMatrix, tol: float = 1e-12) -> QuantumChannel:
    """Kraus operators from the eigendecomposition of a PSD Choi matrix."""
    din, dout = c.dim_in, c.dim_out
    lam, vecs = np.linalg.eigh(hermitian_part(np.asarray(c.matrix)) * din)
    if lam[0] < -tol_psd(din * dout):
        raise ValueError(f"map is not completely positive (min eigenvalue {lam[0]:.3e})")
    kraus = [math.sqrt(l) * v.reshape(dout, din) for l, v in zip(lam, vecs.T) if l > tol]
    return QuantumChannel(tuple(kraus) or (np.zeros((dout, din)),))


def cp_check(c: ChoiMatrix, tol: float | None = None) -> CpReport:
    m = np.asarray(c.matrix)
    if not is_hermitian(m):
        raise ValueError("Choi matrix is not Hermitian; map is not Hermiticity preserving")
    if tol is None:
        tol = tol_psd(m.shape[0])
    lam_min = float(np.linalg.eigvalsh(hermitian_part(m))[0])
    return CpReport(lam_min >= -tol, lam_min)


def bit_flip(q: float) -> Superoperator:
    """``rho -> (1-q) rho + q X rho X``; negative ``q`` gives a non-CP map."""
    return Superoperator((1 - q) * np.eye(4) + q * np.kron(X.conj(), X))


def pauli_channel(px: float, py: float, pz: float) -> Superoperator:
    m = (1 - px - py - pz) * np.eye(4, dtype=complex)
    for p, P in zip((px, py, pz), (X, Y, Z)):
        m += p * np.kron(P.conj(), P)
    return Superoperator(m)


# ---------------------------------------------------------------------------
# matrix functions

# Higham (2005) scaling-and-squaring constants
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1, 7: 9.504178996162932e-1,
          9: 2.097847961257068e0, 13: 5.371920351148152e0}
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}


def _pade(a: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE[m]
    ident = np.eye(a.shape[0], dtype=a.dtype)
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
        return u, v
    powers = [ident, a2]
    while len(powers) <= m // 2:
        powers.append(powers[-1] @ a2)
    u = a @ sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
    v = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
    return u, v


def matrix_exponential(m: np.ndarray) -> np.ndarray:
    """Padé scaling-and-squaring exponential of a dense square matrix."""
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("matrix exponential needs a square matrix")
    a = a.astype(np.result_type(a.dtype, np.float64))
    norm = np.linalg.norm(a, 1)
    if norm == 0:
        return np.eye(a.shape[0], dtype=a.dtype)
    for deg in (3, 5, 7, 9):
        if norm <= _THETA[deg]:
            u, v = _pade(a, deg)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(np.ceil(np.log2(norm / _THETA[13]))))
    u, v = _pade(a / 2.0**s, 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def polar_unitary(a: np.ndarray) -> np.ndarray:
    """Unitary factor ``U`` of the polar decomposition ``a = U sqrt(a^dagger a)``.

    For rank-deficient input the null spaces are paired by the SVD, which
    completes the partial isometry to a unitary.
    """
    w, _, vh = np.linalg.svd(np.asarray(a, dtype=complex))
    return w @ vh


def gell_mann_basis(dim: int) -> list[np.ndarray]:
    """Hermitian, traceless, Hilbert-Schmidt orthonormal basis (``dim**2 - 1`` elements).

    For ``dim == 2`` this is ``(X, Y, Z) / sqrt(2)``.
    """
    basis = []
    for j in range(dim):
        for k in range(j + 1, dim):
            s = np.zeros((dim, dim), dtype=complex)
            s[j, k] = s[k, j] = 1
            a = np.zeros((dim, dim), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            basis.extend([s / math.sqrt(2), a / math.sqrt(2)])
    for l in range(1, dim):
        d = np.zeros((dim, dim), dtype=complex)
        d[np.arange(l), np.arange(l)] = 1
        d[l, l] = -l
        basis.append(d / math.sqrt(l * (l + 1)))
    return basis


def bloch_state(n: Sequence[float]) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return 0.5 * (I2 + n[0] * X + n[1] * Y + n[2] * Z)


# ---------------------------------------------------------------------------
# random objects (tests and demos only; callers pass their own Generator)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(dim: int, rng: np.random.Generator, n_kraus: int = 3) -> QuantumChannel:
    """Random CPTP map from a Stiefel isometry cut into Kraus blocks."""
    u = random_unitary(dim * n_kraus, rng)[:, :dim]
    return QuantumChannel(tuple(u[k * dim:(k + 1) * dim] for k in range(n_kraus)))
