"""Ready-made scenarios: continuous-feedback repetition code, teleportation, squeezed cat.

Each model bundles a frame, a GKSL generator on the logical (x) gauge
composite, an ``embed`` map placing a logical operator into the composite at
the family origin, and closed-form oracles for the reduced dynamics.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dynamics import GkslGenerator
from .exceptions import TruncationError
from .frames import (
    SubsystemFrame, annihilation, coherent_state, single_qubit_op, teleportation_frame,
    three_qubit_frame,
)
from .linalg import I2, X, Z, DensityMatrix, Superoperator, bit_flip, matrix_exponential, pauli_channel

# One cycle of the ancilla-based QEC circuit for the squeezed cat code acts as
# the Z_L (x) a_G dissipator for a duration with gamma * t = 2 pi^2 e^-r / alpha^2.
# Recorded for reference; no circuit model is implemented.


def circuit_cycle_gamma_t(alpha: float, r: float) -> float:
    return 2 * math.pi**2 * math.exp(-r) / alpha**2


def _ket(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi / np.linalg.norm(psi)


# ---------------------------------------------------------------------------
# closed forms


class ThreeQubitAnalytic(NamedTuple):
    f: float
    rate: float


def three_qubit_analytic(p: float, gamma: float, t: float) -> ThreeQubitAnalytic:
    """Logical flip weight ``f(t)`` and its canonical rate ``f'/(1 - 2f)``."""
    if not 0 <= p < 0.5:
        raise ValueError("p must be in [0, 0.5)")
    if t < 0:
        raise ValueError("t must be nonnegative")
    q = p * p * (3 - 2 * p)
    e = math.exp(-gamma * t)
    f = (1 - e) * q + e * p
    fdot = -gamma * e * p * (1 - p) * (1 - 2 * p)
    return ThreeQubitAnalytic(f, fdot / (1 - 2 * f))


class TeleportationAnalytic(NamedTuple):
    state: np.ndarray
    rate: float | None


def teleportation_analytic(gamma: float, t: float, psi=(1, 0), rho0=None,
                           want_rate: bool = True) -> TeleportationAnalytic:
    """Bob's state ``(1 - e^-gt)|psi><psi| + e^-gt rho0`` and the common Pauli rate.

    The rate is singular at ``t = 0``; requesting it there raises.
    """
    psi = _ket(psi)
    rho0 = np.eye(2) / 2 if rho0 is None else np.asarray(rho0)
    e = math.exp(-gamma * t)
    state = (1 - e) * np.outer(psi, psi.conj()) + e * rho0
    rate = None
    if want_rate:
        if t <= 0:
            raise ValueError("the canonical rate diverges at t = 0")
        rate = -gamma * e / (4 * (1 - e))
    return TeleportationAnalytic(state, rate)


class SqueezedCatAnalytic(NamedTuple):
    state: np.ndarray
    rate: float
    x_expectation: float


def squeezed_cat_analytic(lam: complex, gamma: float, t: float, c0: complex = 1 / math.sqrt(2),
                          c1: complex = 1 / math.sqrt(2)) -> SqueezedCatAnalytic:
    """Rephasing of a dephased logical qubit under the ``Z_L (x) a_G`` dissipator."""
    decay = math.exp(-2 * abs(lam) ** 2 * math.exp(-gamma * t))
    coh = c0 * np.conj(c1) * decay
    state = np.array([[abs(c0) ** 2, coh], [np.conj(coh), abs(c1) ** 2]], dtype=complex)
    rate = -abs(lam) ** 2 * gamma * math.exp(-gamma * t)
    return SqueezedCatAnalytic(state, rate, float(2 * coh.real))


def effective_displacement(beta: complex, r: float) -> complex:
    return beta.real * math.exp(r) + 1j * beta.imag * math.exp(-r)


def logical_phase_angle(beta: complex, alpha: float, r: float) -> float:
    """Angle ``theta`` of the logical factor ``exp(i theta Z_L)`` of a displacement error."""
    return 2 * alpha * math.exp(-r) * complex(beta).imag


def conditional_displacement(lam: complex, n_trunc: int, guard: float = 1e-8) -> np.ndarray:
    """``exp(Z_L (x) (lam a^+ - lam^* a))`` on a 2 x n_trunc composite."""
    a = annihilation(n_trunc)
    gen = lam * a.conj().T - np.conj(lam) * a
    plus, minus = matrix_exponential(gen), matrix_exponential(-gen)
    for sign, block in ((1, plus), (-1, minus)):
        ref = coherent_state(sign * lam, n_trunc, guard)
        if np.abs(block[:, 0] - ref).max() > math.sqrt(guard):
            raise TruncationError(f"displacement by {sign * lam} is not resolved at truncation {n_trunc}")
    out = np.zeros((2 * n_trunc,) * 2, dtype=complex)
    out[:n_trunc, :n_trunc] = plus
    out[n_trunc:, n_trunc:] = minus
    return out


def displacement_error_subsystem(beta: complex, alpha: float, r: float, n_trunc: int = 40) -> np.ndarray:
    """Displacement error ``D(beta)`` written in the squeezed-cat subsystem frame.

    ``exp(i theta Z_L) (x) I  x  exp(Z_L (x) (Lambda a^+ - Lambda^* a))`` with
    ``Lambda = Re(beta) e^r + i Im(beta) e^-r`` and ``theta = 2 alpha e^-r Im(beta)``.
    """
    beta = complex(beta)
    theta = logical_phase_angle(beta, alpha, r)
    phase = np.kron(np.diag([cmath.exp(1j * theta), cmath.exp(-1j * theta)]), np.eye(n_trunc))
    return phase @ conditional_displacement(effective_displacement(beta, r), n_trunc)


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True, eq=False)
class ThreeQubitModel:
    """Bit-flip repetition code: noise of strength ``p`` at the origin, then continuous feedback.

    Feedback jump operators are ``R_m = Q_m^+ (x) |0><m|_G`` at rate ``gamma``.
    """

    p: float
    gamma: float = 1.0
    frame: SubsystemFrame = field(default_factory=three_qubit_frame)

    def __post_init__(self):
        if not 0 <= self.p < 0.5:
            raise ValueError("p must be in [0, 0.5)")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    logical_dim = 2
    composite_dims = (2, 4)
    logical_index = 0

    @property
    def char_time(self) -> float:
        return 1 / self.gamma

    @property
    def jump_operators(self) -> list[np.ndarray]:
        g0 = self.frame.gauge_ket("00")
        return [np.kron(q.conj().T, np.outer(g0, self.frame.gauge_ket(lbl)))
                for q, lbl in zip(self.frame.logical_unitaries, self.frame.gauge_labels)]

    @property
    def generator(self) -> GkslGenerator:
        return GkslGenerator(8, dissipators=tuple((r, self.gamma) for r in self.jump_operators))

    def physical_noise(self, rho: np.ndarray) -> np.ndarray:
        for i in range(3):
            xi = single_qubit_op(X, i, 3)
            rho = (1 - self.p) * rho + self.p * xi @ rho @ xi
        return rho

    def embed(self, op: np.ndarray) -> np.ndarray:
        v = self.frame.isometry
        g0 = np.zeros((4, 4))
        g0[0, 0] = 1
        encoded = v.conj().T @ np.kron(op, g0) @ v
        return v @ self.physical_noise(encoded) @ v.conj().T

    def initial_state(self, psi=(1, 0)) -> DensityMatrix:
        psi = _ket(psi)
        return DensityMatrix(self.embed(np.outer(psi, psi.conj())), self.composite_dims)

    def analytic(self, t: float) -> ThreeQubitAnalytic:
        return three_qubit_analytic(self.p, self.gamma, t)

    def analytic_map(self, t: float) -> Superoperator:
        return bit_flip(self.analytic(t).f)

    def analytic_logical_state(self, t: float, psi=(1, 0)) -> np.ndarray:
        return self.analytic_map(t).apply(np.outer(_ket(psi), _ket(psi).conj()))

    def analytic_rate(self, t: float) -> float:
        return self.analytic(t).rate


@dataclass(frozen=True, eq=False)
class TeleportationModel:
    """Continuous Bell-outcome feedback; gauge = Alice's pair (first), logical = Bob.

    Jump operators ``R_m = |00><m| (x) Q_m^+`` at rate ``gamma``.  The logical
    input is the state Alice sends.
    """

    gamma: float = 1.0
    psi: tuple = (1, 0)
    frame: SubsystemFrame = field(default_factory=teleportation_frame)

    logical_dim = 2
    composite_dims = (4, 2)
    logical_index = 1

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        psi = _ket(self.psi)
        expected = sum(
            np.kron(np.outer(self.frame.gauge_ket(a), self.frame.gauge_ket(b)),
                    np.outer(qa @ psi, (qb @ psi).conj()))
            for qa, a in zip(self.frame.logical_unitaries, self.frame.gauge_labels)
            for qb, b in zip(self.frame.logical_unitaries, self.frame.gauge_labels)
        ) / 4
        if np.abs(expected - self.embed(np.outer(psi, psi.conj()))).max() > 1e-12:
            raise ValueError("teleportation frame does not produce the expected composite state")

    @property
    def char_time(self) -> float:
        return 1 / self.gamma

    @property
    def jump_operators(self) -> list[np.ndarray]:
        g0 = self.frame.gauge_ket("00")
        return [np.kron(np.outer(g0, self.frame.gauge_ket(lbl)), q.conj().T)
                for q, lbl in zip(self.frame.logical_unitaries, self.frame.gauge_labels)]

    @property
    def generator(self) -> GkslGenerator:
        return GkslGenerator(8, dissipators=tuple((r, self.gamma) for r in self.jump_operators))

    def embed(self, op: np.ndarray) -> np.ndarray:
        phi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        v = self.frame.isometry
        return v @ np.kron(op, np.outer(phi, phi)) @ v.conj().T

    def initial_state(self, psi=None) -> DensityMatrix:
        psi = _ket(self.psi if psi is None else psi)
        return DensityMatrix(self.embed(np.outer(psi, psi.conj())), self.composite_dims)

    def analytic_map(self, t: float) -> Superoperator:
        """Depolarizing map with Bloch contraction ``1 - e^-gt`` from Alice's input to Bob."""
        lam = 1 - math.exp(-self.gamma * t)
        return Superoperator.from_function(lambda u: lam * u + (1 - lam) * np.trace(u) * np.eye(2) / 2, 2)

    def analytic_logical_state(self, t: float, psi=None) -> np.ndarray:
        return teleportation_analytic(self.gamma, t, self.psi if psi is None else psi, want_rate=False).state

    def analytic_rate(self, t: float) -> float:
        return teleportation_analytic(self.gamma, t, self.psi).rate


@dataclass(frozen=True, eq=False)
class SqueezedCatModel:
    """Squeezed cat code simulated in its subsystem frame (logical qubit (x) gauge oscillator).

    The origin state is ``c0 |0>|Lambda> + c1 |1>|-Lambda>`` after a displacement
    error; the dissipator ``Z_L (x) a_G`` at rate ``gamma`` restores coherence.
    """

    alpha: float = 2.0
    r: float = 1.3
    lam: complex = 1.0
    gamma: float = 1.0
    n_trunc: int = 40
    c0: complex = 1 / math.sqrt(2)
    c1: complex = 1 / math.sqrt(2)
    logical_phase: float = 0.0

    logical_dim = 2
    logical_index = 0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.alpha <= 0 or self.r < 0:
            raise ValueError("need alpha > 0 and r >= 0")
        norm = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(norm - 1) > 1e-12:
            raise ValueError("c0, c1 must be normalized")
        object.__setattr__(self, "_disp", conditional_displacement(complex(self.lam), self.n_trunc))

    @classmethod
    def from_displacement(cls, beta: complex, alpha: float = 2.0, r: float = 1.3, **kw) -> "SqueezedCatModel":
        beta = complex(beta)
        return cls(alpha=alpha, r=r, lam=effective_displacement(beta, r),
                   logical_phase=logical_phase_angle(beta, alpha, r), **kw)

    @property
    def composite_dims(self) -> tuple[int, int]:
        return (2, self.n_trunc)

    @property
    def char_time(self) -> float:
        return 1 / self.gamma

    @property
    def generator(self) -> GkslGenerator:
        ld = np.kron(Z, annihilation(self.n_trunc))
        return GkslGenerator(2 * self.n_trunc, dissipators=((ld, self.gamma),))

    def embed(self, op: np.ndarray) -> np.ndarray:
        ph = np.diag([cmath.exp(1j * self.logical_phase), cmath.exp(-1j * self.logical_phase)])
        vac = np.zeros((self.n_trunc, self.n_trunc))
        vac[0, 0] = 1
        u = self._disp
        return u @ np.kron(ph @ op @ ph.conj().T, vac) @ u.conj().T

    def initial_state(self) -> DensityMatrix:
        c = np.array([self.c0, self.c1], dtype=complex)
        return DensityMatrix(self.embed(np.outer(c, c.conj())), self.composite_dims)

    def _phased(self) -> tuple[complex, complex]:
        return self.c0 * cmath.exp(1j * self.logical_phase), self.c1 * cmath.exp(-1j * self.logical_phase)

    def analytic(self, t: float) -> SqueezedCatAnalytic:
        c0, c1 = self._phased()
        return squeezed_cat_analytic(self.lam, self.gamma, t, c0, c1)

    def analytic_map(self, t: float) -> Superoperator:
        """Logical dephasing map with coherence factor ``exp(-2|Lambda|^2 e^-gt)``."""
        k = math.exp(-2 * abs(self.lam) ** 2 * math.exp(-self.gamma * t))
        pz = (1 - k) / 2
        ph = np.diag([cmath.exp(1j * self.logical_phase), cmath.exp(-1j * self.logical_phase)])
        return Superoperator(pauli_channel(0, 0, pz).matrix @ np.kron(ph.conj(), ph))

    def analytic_logical_state(self, t: float) -> np.ndarray:
        return self.analytic(t).state

    def analytic_rate(self, t: float) -> float:
        return self.analytic(t).rate


MODEL_KINDS = {
    "three_qubit": ThreeQubitModel,
    "teleportation": TeleportationModel,
    "squeezed_cat": SqueezedCatModel,
}
_ALIASES = {"THREE_QUBIT": "three_qubit", "TELEPORT": "teleportation", "TELEPORTATION": "teleportation",
            "SQUEEZED_CAT": "squeezed_cat"}


def build_model(kind: str, **params):
    """Construct a model bundle by name; parameter names follow the model dataclasses.

    ``Lambda`` is accepted as an alias of ``lam`` and ``psi`` may be a list of
    ``[re, im]`` pairs.
    """
    kind = _ALIASES.get(kind, kind)
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    params = dict(params)
    if "Lambda" in params:
        params["lam"] = params.pop("Lambda")
    if "psi" in params:
        params["psi"] = tuple(complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in params["psi"])
    if kind == "squeezed_cat" and "beta" in params:
        beta = params.pop("beta")
        beta = complex(*beta) if isinstance(beta, (list, tuple)) else complex(beta)
        return SqueezedCatModel.from_displacement(beta, **params)
    if "lam" in params and isinstance(params["lam"], (list, tuple)):
        params["lam"] = complex(*params["lam"])
    return MODEL_KINDS[kind](**params)
