"""Sampling-cost bounds for error mitigation and their reduction by error correction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import X, Y, Z, QuantumChannel, Superoperator, kraus_to_superoperator, trace_distance
from .measures import fibonacci_sphere

DENOM_GUARD = 1e-12


def _check_eps_delta(epsilon: float, delta: float) -> None:
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    if delta <= 0:
        raise ValueError("delta must be positive")


def base_samples(epsilon: float, delta: float) -> float:
    """Hoeffding count ``log(2/eps) / (2 delta^2)`` for noiseless estimation."""
    _check_eps_delta(epsilon, delta)
    return math.log(2 / epsilon) / (2 * delta**2)


@dataclass(frozen=True)
class QemBound:
    samples: float
    epsilon: float
    delta: float
    b_max: float = 0.0
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.samples > 0:
            raise ValueError("sample count must be positive")

    def to_dict(self) -> dict:
        return {"samples": self.samples, "epsilon": self.epsilon, "delta": self.delta,
                "b_max": self.b_max, "context": dict(self.context)}


def unbiased_bound(p: float, epsilon: float, delta: float) -> QemBound:
    """Samples for unbiased mitigation of a bit flip (or dephasing) of weight ``p``."""
    if not 0 <= p < 0.5:
        raise ValueError("p must be in [0, 0.5); the bound diverges at p = 1/2")
    m = base_samples(epsilon, delta) / (1 - 2 * p) ** 2
    return QemBound(m, epsilon, delta, context={"p": p})


def cost_after_qec(m_p: float, R: float) -> float:
    """``M_p exp(-4 R)``: cost once a decay-rate measure ``R`` has been accumulated."""
    if R < 0:
        raise ValueError("R must be nonnegative")
    return m_p * math.exp(-4 * R)


def _as_superop(ch) -> Superoperator:
    if isinstance(ch, Superoperator):
        return ch
    if isinstance(ch, QuantumChannel):
        return kraus_to_superoperator(ch)
    return Superoperator(np.asarray(ch))


def distinguishability_bound(rho, sigma, ch, epsilon: float, delta: float) -> QemBound:
    """``[D(rho, sigma) / D(E(rho), E(sigma))]^2 log(2/eps) / (2 delta^2)`` for one pair."""
    s = _as_superop(ch)
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    d_in = trace_distance(rho, sigma)
    d_out = trace_distance(s.apply(rho), s.apply(sigma))
    if d_out < DENOM_GUARD:
        raise ValueError("the noisy states are indistinguishable; the bound diverges")
    m = (d_in / d_out) ** 2 * base_samples(epsilon, delta)
    return QemBound(m, epsilon, delta, context={"d_in": d_in, "d_out": d_out})


def sweep_orthogonal_pairs(ch, epsilon: float, delta: float, n_grid: int = 256) -> QemBound:
    """Largest :func:`distinguishability_bound` over orthogonal pure qubit pairs on a Bloch grid."""
    paulis = np.array([X, Y, Z])
    best = None
    for n in fibonacci_sphere(n_grid):
        op = np.einsum("k,kij->ij", n, paulis)
        try:
            b = distinguishability_bound((np.eye(2) + op) / 2, (np.eye(2) - op) / 2, ch, epsilon, delta)
        except ValueError:
            continue
        if best is None or b.samples > best.samples:
            best = QemBound(b.samples, epsilon, delta, context={**b.context, "direction": n.tolist()})
    if best is None:
        raise ValueError("no distinguishable pair on the grid")
    return best
