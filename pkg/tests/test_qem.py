import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmqip.dynamics import intermediate_map, logical_map_family
from nmqip.linalg import X, Z, QuantumChannel, Superoperator, bit_flip, random_density_matrix
from nmqip.measures import closed_form_R
from nmqip.models import TeleportationModel
from nmqip.qem import (
    QemBound, base_samples, cost_after_qec, distinguishability_bound, sweep_orthogonal_pairs, unbiased_bound,
)

EPS, DELTA = 0.05, 0.01
PLUS = np.full((2, 2), 0.5)
MINUS = np.array([[0.5, -0.5], [-0.5, 0.5]])


def dephasing(p):
    return QuantumChannel((math.sqrt(1 - p) * np.eye(2), math.sqrt(p) * Z))


def test_unbiased_examples():
    assert unbiased_bound(0, EPS, DELTA).samples == pytest.approx(math.log(40) / 2e-4, rel=1e-15)
    m = unbiased_bound(0.1, EPS, DELTA).samples
    assert m == pytest.approx(math.log(40) / (2e-4 * 0.64), rel=1e-15)
    assert m == pytest.approx(28819.4, abs=0.05)
    with pytest.raises(ValueError):
        unbiased_bound(0.5, EPS, DELTA)
    with pytest.raises(ValueError):
        unbiased_bound(0.1, 1.0, DELTA)
    with pytest.raises(ValueError):
        unbiased_bound(0.1, EPS, 0)


def test_unbiased_monotone_in_p():
    ms = [unbiased_bound(p, EPS, DELTA).samples for p in np.linspace(0, 0.49, 30)]
    assert np.all(np.diff(ms) > 0)


def test_reduced_cost_spot_value():
    m = unbiased_bound(0.1, EPS, DELTA).samples
    reduced = cost_after_qec(m, closed_form_R("THREE_QUBIT", p=0.1, q=0.028))
    # exact value of M(0.028); the rounded R = 0.082757 gives 20697.6 as well
    assert reduced == pytest.approx(unbiased_bound(0.028, EPS, DELTA).samples, rel=1e-12)
    assert reduced == pytest.approx(20697.6, abs=0.1)
    assert cost_after_qec(m, 0.082757) == pytest.approx(20697.6, abs=0.1)


def test_cost_after_qec_basic():
    assert cost_after_qec(123.0, 0) == 123.0
    with pytest.raises(ValueError):
        cost_after_qec(1.0, -1e-3)
    vals = [cost_after_qec(1.0, r) for r in np.linspace(0, 3, 20)]
    assert np.all(np.diff(vals) < 0)


def test_squeezed_cat_reduction_factor():
    r = closed_form_R("SQUEEZED_CAT", lam=0.5, gamma_t=80)
    assert cost_after_qec(1.0, r) == pytest.approx(math.exp(-1), rel=1e-12)
    assert math.exp(-1) == pytest.approx(0.367879, abs=1e-6)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(st.floats(0, 0.499), st.floats(0, 1))
def test_identity_unbiased_after_qec(p, frac):
    q = p * frac
    m_p = unbiased_bound(p, EPS, DELTA).samples
    got = cost_after_qec(m_p, closed_form_R("THREE_QUBIT", p=p, q=q))
    assert got == pytest.approx(unbiased_bound(q, EPS, DELTA).samples, rel=1e-12)


def test_distinguishability_identity_channel():
    rng = np.random.default_rng(0)
    rho, sigma = random_density_matrix(2, rng), random_density_matrix(2, rng)
    b = distinguishability_bound(rho, sigma, Superoperator.identity(2), EPS, DELTA)
    assert b.samples == pytest.approx(base_samples(EPS, DELTA), rel=1e-12)


def test_dephasing_pm_pair_reproduces_unbiased():
    for p in (0.0, 0.1, 0.3, 0.45):
        b = distinguishability_bound(PLUS, MINUS, dephasing(p), EPS, DELTA)
        assert b.samples == pytest.approx(unbiased_bound(p, EPS, DELTA).samples, rel=1e-12)
        # the sweep cannot do worse than the x-axis pair, and for dephasing that pair is the worst
        sw = sweep_orthogonal_pairs(dephasing(p), EPS, DELTA, n_grid=64)
        assert sw.samples <= b.samples * (1 + 1e-12)
    assert distinguishability_bound(PLUS, MINUS, bit_flip(0.2), EPS, DELTA).samples == pytest.approx(
        base_samples(EPS, DELTA))


def test_indistinguishable_pair_rejected():
    erase = Superoperator.from_function(lambda u: np.trace(u) * np.eye(2) / 2, 2)
    with pytest.raises(ValueError):
        distinguishability_bound(PLUS, MINUS, erase, EPS, DELTA)
    with pytest.raises(ValueError):
        sweep_orthogonal_pairs(erase, EPS, DELTA, n_grid=16)


def test_teleportation_intermediate_map_bound():
    # Bloch contraction c(t) = 1 - e^-t; per-channel Pauli rate g(t) = -e^-t / (4 c(t)).
    # E_{s->t} scales the Bloch vector by c(t)/c(s) = exp(-4 int g) = exp(4 R_k), R_k = int |g|.
    s, t = 0.3, 1.7
    fam = logical_map_family(TeleportationModel(1.0), np.linspace(0.1, 2, 20))
    inter = intermediate_map(fam, s, t)
    r_k = 0.25 * math.log((1 - math.exp(-t)) / (1 - math.exp(-s)))
    want = base_samples(EPS, DELTA) * math.exp(-8 * r_k)
    got = distinguishability_bound(PLUS, MINUS, inter, EPS, DELTA)
    assert got.samples == pytest.approx(want, rel=1e-6)
    # closed_form_R sums the three channels
    assert 3 * r_k == pytest.approx(closed_form_R("TELEPORT", gamma=1, dt=s, T=t), rel=1e-12)


def test_qem_bound_record():
    with pytest.raises(ValueError):
        QemBound(0.0, EPS, DELTA)
    d = unbiased_bound(0.2, EPS, DELTA).to_dict()
    assert d["b_max"] == 0 and d["context"] == {"p": 0.2}
