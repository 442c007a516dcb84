"""Non-Markovianity quantifiers on logical map families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .dynamics import MapFamily, canonical_rates, default_step, intermediate_maps
from .linalg import X, Y, Z, superoperator_to_choi, trace_norm, vec

KINDS = ("RHP", "BLP", "DECAY_RATE")


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.generic):
        return x.item()
    return x


@dataclass(frozen=True)
class MeasureResult:
    kind: str
    value: float
    window: tuple[float, float]
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if not self.value >= 0:
            raise ValueError("measure values are nonnegative")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": float(self.value), "window": [float(w) for w in self.window],
                "diagnostics": _jsonable(self.diagnostics)}


@dataclass(frozen=True)
class BlpSearchConfig:
    n_grid: int = 64
    refine_iters: int = 20

    def __post_init__(self):
        if self.n_grid < 6:
            raise ValueError("n_grid must be at least 6")
        if self.refine_iters < 1:
            raise ValueError("refine_iters must be positive")


def _window_times(fam: MapFamily, t1: float, t3: float) -> np.ndarray:
    if t3 <= t1:
        raise ValueError("window must have t3 > t1")
    lo, hi = fam.grid_index(t1), fam.grid_index(t3)
    if lo is None or hi is None:
        raise ValueError(f"window [{t1:g}, {t3:g}] endpoints must lie on the family grid")
    return fam.times[lo:hi + 1]


def _trapezoid(y, x) -> float:
    return float(np.trapezoid(y, x)) if len(x) > 1 else 0.0


# ---------------------------------------------------------------------------
# RHP


def rhp_density(fam: MapFamily, t: float, delta: float | None = None) -> float:
    """``(||J(E_{t -> t+delta})||_1 - 1) / delta`` with the normalized Choi matrix."""
    if delta is None:
        delta = default_step(fam)
    if delta <= 0:
        raise ValueError("delta must be positive")
    return _rhp_densities(fam, [t], delta)[0]


def _rhp_densities(fam: MapFamily, ts, delta: float) -> np.ndarray:
    inter = intermediate_maps(fam, [(t, t + delta) for t in ts])
    return np.array([(trace_norm(superoperator_to_choi(m).matrix) - 1) / delta for m in inter])


def rhp_measure(fam: MapFamily, t1: float, t3: float, delta: float | None = None) -> MeasureResult:
    """Trapezoidal integral of :func:`rhp_density` over the grid points of the window.

    Without an evaluator, ``t + delta`` must itself be a grid point, so the
    last point of the window is sampled one step back.
    """
    if delta is None:
        delta = default_step(fam)
    ts = _window_times(fam, t1, t3)
    if fam.evaluator is None:
        ts = np.array([t for t in ts if fam.grid_index(t + delta) is not None])
    n = np.clip(_rhp_densities(fam, ts, delta), 0.0, None)
    return MeasureResult("RHP", _trapezoid(n, ts), (t1, t3),
                         {"times": ts, "density": n, "delta": delta})


# ---------------------------------------------------------------------------
# BLP


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` near-uniform unit vectors (deterministic)."""
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = math.pi * (3 - math.sqrt(5)) * k
    s = np.sqrt(1 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def _direction(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _backflow(maps: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Sum of positive trace-distance increments for the pair ``(I +- n.sigma)/2``."""
    ops = np.einsum("nk,kij->nij", dirs, np.array([X, Y, Z]))
    # trace distance of the pair = 1/2 ||E(n.sigma)||_1
    vecs = np.stack([vec(o) for o in ops])
    evolved = np.einsum("tab,nb->tna", maps, vecs)
    mats = evolved.reshape(evolved.shape[:2] + (2, 2)).swapaxes(-1, -2)
    mats = (mats + mats.conj().swapaxes(-1, -2)) / 2
    d = 0.5 * np.abs(np.linalg.eigvalsh(mats)).sum(axis=-1)
    return np.clip(np.diff(d, axis=0), 0, None).sum(axis=0)


def _golden_max(f, a: float, b: float, iters: int) -> tuple[float, float]:
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def blp_measure(fam: MapFamily, t1: float, t3: float, search: BlpSearchConfig | None = None) -> MeasureResult:
    """Largest trace-distance backflow over orthogonal pure qubit pairs.

    Candidates are Bloch directions on a Fibonacci grid; the best one is
    refined by alternating golden-section searches in polar and azimuthal
    angle within one grid spacing.  Ties go to the lowest grid index.
    """
    search = search or BlpSearchConfig()
    if fam.dim != 2:
        raise ValueError("BLP search is implemented for qubit families only")
    ts = _window_times(fam, t1, t3)
    maps = fam.maps_at(ts)
    dirs = fibonacci_sphere(search.n_grid)
    grid_vals = _backflow(maps, dirs)
    best = int(np.argmax(grid_vals))
    n0 = dirs[best]
    theta, phi = math.acos(np.clip(n0[2], -1, 1)), math.atan2(n0[1], n0[0])
    width = math.sqrt(4 * math.pi / search.n_grid)
    value = float(grid_vals[best])
    trace = [value]

    def score(th, ph):
        return float(_backflow(maps, _direction(th, ph)[None, :])[0])

    for _ in range(2):
        th, v = _golden_max(lambda x: score(x, phi), theta - width, theta + width, search.refine_iters)
        if v > value:
            theta, value = th, v
        ph, v = _golden_max(lambda x: score(theta, x), phi - width, phi + width, search.refine_iters)
        if v > value:
            phi, value = ph, v
        trace.append(value)
    n = _direction(theta, phi)
    return MeasureResult("BLP", value, (t1, t3), {
        "argmax_direction": n,
        "argmax_pair": [(np.eye(2) + s * np.einsum("k,kij->ij", n, np.array([X, Y, Z]))) / 2 for s in (1, -1)],
        "grid_best_index": best,
        "optimizer_trace": trace,
    })


# ---------------------------------------------------------------------------
# decay-rate measure


def decay_rate_measure(times: Sequence[float], rates: np.ndarray) -> MeasureResult:
    """``sum_k int (|g_k| - g_k)/2 dt`` by the trapezoidal rule; ``rates`` is (n_times, n_channels)."""
    times = np.asarray(times, dtype=float)
    rates = np.asarray(rates, dtype=float).reshape(len(times), -1)
    neg = (np.abs(rates) - rates) / 2
    per = [_trapezoid(neg[:, k], times) for k in range(rates.shape[1])]
    return MeasureResult("DECAY_RATE", float(sum(per)), (float(times[0]), float(times[-1])),
                         {"per_channel": per, "times": times, "rates": rates})


def rate_grid(t1: float, t3: float, n: int = 400, spacing: str = "linear") -> np.ndarray:
    """Sample grid for rate integration; ``log`` clusters points near ``t1 > 0``."""
    if spacing == "log":
        if t1 <= 0:
            raise ValueError("log spacing needs t1 > 0")
        return np.geomspace(t1, t3, n)
    return np.linspace(t1, t3, n)


def family_decay_rate(fam: MapFamily, times: Sequence[float], h: float | None = None) -> MeasureResult:
    """Decay-rate measure from canonical rates extracted on ``times``."""
    return decay_rate_measure(times, canonical_rates(fam, times, h))


def closed_form_R(kind: str, **params) -> float:
    """Closed-form decay-rate measures (Pauli rate convention).

    THREE_QUBIT(p, q): ``1/2 log((1-2q)/(1-2p))``
    SQUEEZED_CAT(lam, gamma_t): ``|lam|^2 (1 - e^-gamma_t)``
    TELEPORT(gamma, dt, T): ``3/4 log((1-e^-gT)/(1-e^-g dt))``; three channels
    each contribute a quarter of the log.
    """
    kind = kind.upper()
    if kind == "THREE_QUBIT":
        p, q = params["p"], params["q"]
        if not (0 <= p < 0.5 and 0 <= q < 0.5):
            raise ValueError("p and q must be in [0, 0.5)")
        return 0.5 * math.log((1 - 2 * q) / (1 - 2 * p))
    if kind == "SQUEEZED_CAT":
        lam = params["lam"]
        if isinstance(lam, complex) and lam.imag != 0:
            raise ValueError("closed form assumes real Lambda")
        return abs(lam) ** 2 * (1 - math.exp(-params["gamma_t"]))
    if kind == "TELEPORT":
        g, dt, big_t = params.get("gamma", 1.0), params["dt"], params["T"]
        if not 0 < dt < big_t:
            raise ValueError("need 0 < dt < T")
        return 0.75 * math.log((1 - math.exp(-g * big_t)) / (1 - math.exp(-g * dt)))
    raise ValueError(f"unknown kind {kind!r}")
