"""Subsystem frames: isometries splitting a code's physical space into logical (x) gauge.

A frame ``V`` satisfies ``V U_m |k>_C = (Q_m |k>_L) (x) |m>_G`` for every
codeword ``k`` and every correctable error ``m``.  Composite operators are
ordered logical-first except where ``logical_first`` is False (teleportation,
where Alice's two qubits form the gauge and come first).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DimensionError, KLViolation, LeakageError, TruncationError
from .linalg import (
    I2, X, Z, DensityMatrix, QuantumChannel, is_hermitian, matrix_exponential,
    partial_trace, polar_unitary, tensor_product,
)

TOL_KL = 1e-9


@dataclass(frozen=True, eq=False)
class CodeSpec:
    codewords: np.ndarray  # (dim, K), columns are |k>_C

    def __post_init__(self):
        c = np.array(self.codewords, dtype=complex)
        if c.ndim != 2 or c.shape[1] > c.shape[0]:
            raise DimensionError(f"codewords must be a (dim, K) array, got {c.shape}")
        if np.abs(c.conj().T @ c - np.eye(c.shape[1])).max() > 1e-9:
            raise ValueError("codewords are not orthonormal")
        object.__setattr__(self, "codewords", c)

    @property
    def dim(self) -> int:
        return self.codewords.shape[0]

    @property
    def k(self) -> int:
        return self.codewords.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.codewords @ self.codewords.conj().T


@dataclass(frozen=True)
class KlReport:
    passes: bool
    d: list[float]
    offdiagonal_residual: float
    diagonal_residual: float


@dataclass(frozen=True, eq=False)
class SubsystemFrame:
    """Isometry from physical space onto a logical (x) gauge composite.

    ``logical_unitaries[i]`` and ``gauge_labels[i]`` belong to error ``i``
    (the i-th retained Kraus operator); ``probabilities[i]`` is its weight.
    """

    isometry: np.ndarray  # (K*G, dim_physical)
    dim_logical: int
    dim_gauge: int
    logical_unitaries: tuple[np.ndarray, ...] = ()
    probabilities: tuple[float, ...] = ()
    gauge_labels: tuple[str, ...] = ()
    logical_first: bool = True
    error_unitaries: tuple[np.ndarray, ...] = field(default=(), repr=False)
    codewords: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.isometry, dtype=complex)
        if v.shape[0] != self.dim_logical * self.dim_gauge:
            raise DimensionError("isometry rows must equal dim_logical * dim_gauge")
        object.__setattr__(self, "isometry", v)
        object.__setattr__(self, "logical_unitaries", tuple(np.asarray(q, dtype=complex) for q in self.logical_unitaries))
        object.__setattr__(self, "probabilities", tuple(float(d) for d in self.probabilities))
        object.__setattr__(self, "gauge_labels", tuple(str(g) for g in self.gauge_labels))

    @property
    def dim_physical(self) -> int:
        return self.isometry.shape[1]

    @property
    def composite_dims(self) -> tuple[int, int]:
        if self.logical_first:
            return (self.dim_logical, self.dim_gauge)
        return (self.dim_gauge, self.dim_logical)

    @property
    def logical_index(self) -> int:
        return 0 if self.logical_first else 1

    def gauge_index(self, label: str) -> int:
        """Gauge basis index of a label; bit-string labels read as binary."""
        return int(label, 2) if set(label) <= {"0", "1"} and len(label) > 1 else int(label)

    def gauge_ket(self, label: str) -> np.ndarray:
        e = np.zeros(self.dim_gauge, dtype=complex)
        e[self.gauge_index(label)] = 1
        return e

    def composite_ket(self, logical: np.ndarray, gauge: np.ndarray) -> np.ndarray:
        return np.kron(logical, gauge) if self.logical_first else np.kron(gauge, logical)

    def to_frame(self, op: np.ndarray) -> np.ndarray:
        """``V op V^dagger`` for a physical operator."""
        return self.isometry @ op @ self.isometry.conj().T

    def relation_residual(self) -> float:
        """Max violation of ``V U_m |k>_C = (Q_m|k>_L) (x) |m>_G`` over all (k, m)."""
        if self.codewords is None or not self.error_unitaries:
            raise ValueError("frame carries no codewords / error unitaries to check against")
        worst = 0.0
        eye = np.eye(self.dim_logical)
        for u, q, label in zip(self.error_unitaries, self.logical_unitaries, self.gauge_labels):
            g = self.gauge_ket(label)
            for k in range(self.dim_logical):
                lhs = self.isometry @ u @ self.codewords[:, k]
                rhs = self.composite_ket(q @ eye[:, k], g)
                worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst

    def to_json(self) -> str:
        def mat(a):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(a)]

        doc = {
            "dim_logical": self.dim_logical,
            "dim_gauge": self.dim_gauge,
            "dim_physical": self.dim_physical,
            "logical_first": self.logical_first,
            "isometry": mat(self.isometry),
            "logical_unitaries": [mat(q) for q in self.logical_unitaries],
            "probabilities": list(self.probabilities),
            "gauge_labels": list(self.gauge_labels),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SubsystemFrame":
        doc = json.loads(text)

        def mat(a):
            arr = np.asarray(a, dtype=float)
            return arr[..., 0] + 1j * arr[..., 1]

        return cls(
            isometry=mat(doc["isometry"]),
            dim_logical=doc["dim_logical"],
            dim_gauge=doc["dim_gauge"],
            logical_unitaries=tuple(mat(q) for q in doc["logical_unitaries"]),
            probabilities=tuple(doc["probabilities"]),
            gauge_labels=tuple(doc["gauge_labels"]),
            logical_first=doc["logical_first"],
        )


# ---------------------------------------------------------------------------
# Knill-Laflamme and frame synthesis


def check_kl(code: CodeSpec, ch: QuantumChannel, tol: float = TOL_KL) -> KlReport:
    if ch.dim_in != code.dim:
        raise DimensionError(f"channel acts on dim {ch.dim_in}, code lives in dim {code.dim}")
    p = code.projector
    fp = [f @ p for f in ch.kraus]
    d, off, diag = [], 0.0, 0.0
    for m, a in enumerate(fp):
        for n, b in enumerate(fp):
            block = a.conj().T @ b
            if m == n:
                dm = float(np.trace(block).real / code.k)
                d.append(dm)
                diag = max(diag, float(np.abs(block - dm * p).max()))
            else:
                off = max(off, float(np.abs(block).max()))
    return KlReport(off <= tol and diag <= tol, d, off, diag)


def _factor_gauge(w: np.ndarray, dim_l: int, dim_g: int, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Split columns ``w_k = (Q|k>) (x) |g>`` into (Q, |g>); |g> is snapped to a basis vector."""
    t = w.T.reshape(w.shape[1], dim_l, dim_g)  # [k, l, g]
    sigma = np.einsum("klg,klh->gh", t, t.conj())
    g = np.linalg.eigh(sigma)[1][:, -1]
    j = int(np.argmax(np.abs(g)))
    if abs(abs(g[j]) - 1) < 1e-8:
        g = np.zeros(dim_g, dtype=complex)
        g[j] = 1
    q = np.einsum("klg,g->lk", t, g.conj())
    rebuilt = np.einsum("lk,g->klg", q, g)
    if np.abs(rebuilt - t).max() > tol:
        raise KLViolation("error branch does not factor as logical (x) gauge under the supplied hint")
    return q, g


def build_frame(code: CodeSpec, ch: QuantumChannel, clifford_hint: np.ndarray | None = None,
                tol: float = TOL_KL) -> SubsystemFrame:
    """Synthesize a frame from a Kraus set satisfying the KL condition.

    Without a hint the basis of each error subspace is ``{U_m |k>_C}`` so every
    ``Q_m`` is the identity and the gauge index is the Kraus index.  With a
    unitary hint (for stabilizer codes, the decoding Clifford ``U_enc^dagger``
    with the logical qubit first) the basis follows the hint and ``Q_m`` is the
    induced logical unitary.
    """
    report = check_kl(code, ch, tol)
    if not report.passes:
        raise KLViolation(
            f"KL condition fails (offdiagonal {report.offdiagonal_residual:.2e}, "
            f"diagonal {report.diagonal_residual:.2e})"
        )
    p = code.projector
    kept = [m for m, dm in enumerate(report.d) if dm > tol]
    us = [polar_unitary(ch.kraus[m] @ p / math.sqrt(report.d[m])) for m in kept]
    for a in range(len(us)):
        for b in range(a + 1, len(us)):
            pa = us[a] @ p @ us[a].conj().T
            pb = us[b] @ p @ us[b].conj().T
            if np.abs(pa @ pb).max() > 1e-8:
                raise KLViolation("error subspaces are not orthogonal")
    k_dim = code.k
    probs = [report.d[m] for m in kept]

    if clifford_hint is None:
        m_dim = len(kept)
        rows = np.zeros((k_dim * m_dim, code.dim), dtype=complex)
        for m, u in enumerate(us):
            for k in range(k_dim):
                rows[k * m_dim + m] = (u @ code.codewords[:, k]).conj()
        return SubsystemFrame(rows, k_dim, m_dim, [np.eye(k_dim)] * m_dim, probs,
                              [str(m) for m in range(m_dim)], True, tuple(us), code.codewords)

    hint = np.asarray(clifford_hint, dtype=complex)
    if hint.shape != (code.dim, code.dim) or np.abs(hint @ hint.conj().T - np.eye(code.dim)).max() > 1e-9:
        raise ValueError("Clifford hint must be a unitary on the physical space")
    g_dim = code.dim // k_dim
    qs, labels, span_rows = [], [], []
    width = max(1, math.ceil(math.log2(g_dim))) if g_dim > 1 else 1
    for u in us:
        q, g = _factor_gauge(hint @ u @ code.codewords, k_dim, g_dim, 1e-8)
        j = int(np.argmax(np.abs(g)))
        qs.append(q)
        labels.append(format(j, f"0{width}b") if g_dim & (g_dim - 1) == 0 else str(j))
        for k in range(k_dim):
            span_rows.append(np.kron(np.eye(k_dim)[k], g))
    # V_S restricted to the direct sum of error subspaces
    target = np.array(span_rows)
    proj = target.conj().T @ target
    v = proj @ hint
    # keep the full square unitary when the subspaces exhaust the space
    if np.linalg.matrix_rank(proj, tol=1e-8) == code.dim:
        v = hint
    return SubsystemFrame(v, k_dim, g_dim, qs, probs, labels, True, tuple(us), code.codewords)


# ---------------------------------------------------------------------------
# prebuilt frames


def cnot(n: int, control: int, target: int) -> np.ndarray:
    """CNOT on ``n`` qubits (qubit 0 is the most significant bit)."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        bits = [(b >> (n - 1 - i)) & 1 for i in range(n)]
        if bits[control]:
            bits[target] ^= 1
        out[int("".join(map(str, bits)), 2), b] = 1
    return out


def single_qubit_op(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    return tensor_product(*[op if i == qubit else I2 for i in range(n)])


def three_qubit_code() -> CodeSpec:
    c = np.zeros((8, 2), dtype=complex)
    c[0, 0] = c[7, 1] = 1
    return CodeSpec(c)


def single_flip_channel(d: Sequence[float] = (0.7, 0.1, 0.1, 0.1)) -> QuantumChannel:
    """Kraus set ``{sqrt(d0) I, sqrt(d1) X1, sqrt(d2) X2, sqrt(d3) X3}``."""
    ops = [np.eye(8)] + [single_qubit_op(X, i, 3) for i in range(3)]
    return QuantumChannel(tuple(math.sqrt(w) * o for w, o in zip(d, ops)))


def three_qubit_frame(d: Sequence[float] = (0.7, 0.1, 0.1, 0.1)) -> SubsystemFrame:
    """Frame of the bit-flip repetition code with ``V_S = CNOT_12 CNOT_23``.

    Gauge labels are the syndrome bits (Z1Z2, Z2Z3); errors are ordered
    (none, X1, X2, X3) so ``Q = (I, X, I, I)``.
    """
    v = cnot(3, 0, 1) @ cnot(3, 1, 2)
    return build_frame(three_qubit_code(), single_flip_channel(d), clifford_hint=v)


def bell_state(m1: int, m2: int) -> np.ndarray:
    """``(I (x) X^m1 Z^m2) |Phi_00>``."""
    phi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    p = np.linalg.matrix_power(X, m1) @ np.linalg.matrix_power(Z, m2)
    return np.kron(I2, p) @ phi


def teleportation_bell_isometry() -> np.ndarray:
    """``sum_m |m1 m2><Phi_{m1 m2}|`` on Alice's pair (CNOT then Hadamard)."""
    return sum(np.outer(np.eye(4)[2 * m1 + m2], bell_state(m1, m2).conj())
               for m1 in (0, 1) for m2 in (0, 1))


def teleportation_frame() -> SubsystemFrame:
    """Frame on (A1 A2 B): gauge = Alice's pair (first), logical = Bob.

    The isometry is ``V_S (x) I_B``; ``Q_{m1 m2} = X^m1 Z^m2``.
    """
    v = np.kron(teleportation_bell_isometry(), I2)
    labels = ("00", "01", "10", "11")
    qs = [np.linalg.matrix_power(X, int(l[0])) @ np.linalg.matrix_power(Z, int(l[1])) for l in labels]
    return SubsystemFrame(v, 2, 4, qs, (0.25,) * 4, labels, logical_first=False)


# ---------------------------------------------------------------------------
# bosonic frame


def annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def displacement(beta: complex, n: int) -> np.ndarray:
    a = annihilation(n)
    return matrix_exponential(beta * a.conj().T - np.conj(beta) * a)


def squeezing(r: float, n: int) -> np.ndarray:
    """``S(r) = exp((r a^2 - r a^dagger 2) / 2)`` for real ``r``."""
    a = annihilation(n)
    return matrix_exponential(0.5 * r * (a @ a - a.conj().T @ a.conj().T))


def coherent_state(lam: complex, n: int, guard: float = 1e-8) -> np.ndarray:
    """Truncated coherent amplitudes; raises if the dropped weight exceeds ``guard``."""
    k = np.arange(n)
    logfact = np.array([math.lgamma(j + 1) for j in k])
    if lam == 0:
        amps = (k == 0).astype(complex)
    else:
        amps = np.exp(-abs(lam) ** 2 / 2 + k * np.log(complex(lam)) - logfact / 2)
    deficit = 1 - float(np.vdot(amps, amps).real)
    if deficit > guard:
        raise TruncationError(f"coherent state |{lam}> loses weight {deficit:.2e} at truncation {n}")
    return amps


def squeezed_cat_frame(alpha: float, r: float, n_gauge: int = 4, n_trunc: int = 500,
                       guard: float = 1e-8) -> SubsystemFrame:
    """Frame of the squeezed cat code built from squeezed displaced Fock states.

    Basis vectors ``S(r)(D(alpha) +/- (-1)^n D(-alpha))|n>`` for ``n < n_gauge``
    are orthonormalized by modified Gram-Schmidt in the order (0,+), (0,-),
    (1,+), ...  The logical factor is indexed (+, -): the two (squeezed) cat
    codewords, on which the logical Z acts as a swap.  ``n_trunc`` is the
    physical Fock truncation; each basis vector must keep its weight in the
    top tenth of the truncated space below ``guard``.
    """
    if alpha <= 0 or r < 0:
        raise ValueError("need alpha > 0 and r >= 0")
    s = squeezing(r, n_trunc) if r else np.eye(n_trunc)
    dp, dm = displacement(alpha, n_trunc), displacement(-alpha, n_trunc)
    tail = n_trunc - n_trunc // 10
    basis = []
    for n in range(n_gauge):
        for sign in (1, -1):
            w = s @ (dp[:, n] + sign * (-1) ** n * dm[:, n])
            for b in basis:
                w = w - np.vdot(b, w) * b
            norm = np.linalg.norm(w)
            if norm < 1e-10:
                raise ValueError("displaced Fock vectors are linearly dependent")
            w = w / norm
            if np.linalg.norm(w[tail:]) > guard:
                raise TruncationError(
                    f"basis vector (n={n}, {'+' if sign > 0 else '-'}) leaks {np.linalg.norm(w[tail:]):.1e} "
                    f"into the top of a {n_trunc}-level truncation"
                )
            basis.append(w)
    rows = np.array(basis).conj()
    order = [2 * n + si for si in range(2) for n in range(n_gauge)]
    return SubsystemFrame(rows[order], 2, n_gauge, gauge_labels=[str(n) for n in range(n_gauge)])


def squeezed_annihilation_target(alpha: float, r: float, n_gauge: int) -> np.ndarray:
    """``Z_L (x) (alpha e^-r + cosh r a_G - sinh r a_G^dagger)`` in the (+, -) logical basis."""
    ag = annihilation(n_gauge)
    return np.kron(X, alpha * math.exp(-r) * np.eye(n_gauge) + math.cosh(r) * ag - math.sinh(r) * ag.conj().T)


def annihilation_relation_residual(frame: SubsystemFrame, alpha: float, r: float, block: int = 1) -> float:
    """Operator-norm residual of ``V a V^dagger`` against the frame target.

    Only inputs with gauge excitation below ``block`` are compared (all output
    rows are kept), since the relation holds up to O(exp(-2 alpha^2))
    corrections that grow with the gauge excitation.
    """
    a = annihilation(frame.dim_physical)
    v = frame.isometry
    got = v @ a @ v.conj().T
    target = squeezed_annihilation_target(alpha, r, frame.dim_gauge)
    cols = [s * frame.dim_gauge + n for s in range(2) for n in range(block)]
    return float(np.linalg.norm((got - target)[:, cols], 2))


# ---------------------------------------------------------------------------


def logical_state(rho, frame: SubsystemFrame, tol: float = 1e-9) -> DensityMatrix:
    """``Tr_G[V rho V^dagger]``; raises if rho has weight outside the frame's domain."""
    m = np.asarray(rho)
    if m.shape != (frame.dim_physical,) * 2:
        raise DimensionError(f"state of dim {m.shape[0]} does not fit a frame on dim {frame.dim_physical}")
    mapped = frame.to_frame(m)
    leak = float(np.trace(m).real - np.trace(mapped).real)
    if leak > tol:
        raise LeakageError(f"state has weight {leak:.2e} outside the frame's error subspaces")
    reduced = partial_trace(mapped, frame.composite_dims, keep=[frame.logical_index])
    return DensityMatrix(reduced)
