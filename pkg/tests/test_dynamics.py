import math

import numpy as np
import pytest

from nmqip.dynamics import (
    GkslGenerator, canonical_decompose, canonical_rates, family_from_function, generator_from_family,
    hs_to_pauli_rate, intermediate_map, logical_map_family, pauli_to_hs_rate, propagate,
)
from nmqip.exceptions import GeneratorError, SingularMapError
from nmqip.linalg import (
    X, Y, Z, bit_flip, cp_check, matrix_exponential, pauli_channel, random_density_matrix, superoperator_to_choi,
    trace_norm,
)
from nmqip.models import SqueezedCatModel, TeleportationModel, ThreeQubitModel


def dephasing_lindbladian(gamma):
    """Brute-force vectorized Lindbladian of rho -> gamma (Z rho Z - rho)."""
    return gamma * (np.kron(Z.conj(), Z) - np.eye(4))


def test_generator_matches_hand_assembly():
    gen = GkslGenerator(2, dissipators=((Z, 0.3),))
    assert np.abs(gen.superoperator() - dephasing_lindbladian(0.3)).max() < 1e-15
    rho = random_density_matrix(2, np.random.default_rng(0))
    assert np.abs(gen.apply(rho) - 0.3 * (Z @ rho @ Z - rho)).max() < 1e-15


def test_generator_rejects_negative_rate():
    with pytest.raises(ValueError):
        GkslGenerator(2, dissipators=((Z, -0.1),))


def test_propagate_invariants():
    rng = np.random.default_rng(1)
    h = rng.normal(size=(3, 3))
    ops = tuple((rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)), 0.4) for _ in range(2))
    gen = GkslGenerator(3, hamiltonian=h + h.T, dissipators=ops)
    traj = propagate(gen, random_density_matrix(3, rng), np.linspace(0, 3, 31))
    for s in traj.matrices:
        assert abs(np.trace(s) - 1) < 1e-10
        assert np.abs(s - s.conj().T).max() < 1e-10


def test_propagate_teleportation_fixed_point():
    m = TeleportationModel(1.0, (1, 0))
    fixed = np.zeros((8, 8))
    fixed[0, 0] = 1  # |00>_G |0>_B
    traj = propagate(m.generator, fixed, np.linspace(0, 4, 9), m.composite_dims)
    assert np.abs(traj.matrices - fixed).max() < 1e-12


def test_propagate_squeezed_cat_x_expectation():
    m = SqueezedCatModel(lam=1.0)
    traj = propagate(m.generator, m.initial_state(), [0.0, 8.0], m.composite_dims)
    xl = np.kron(X, np.eye(m.n_trunc))
    x0, x8 = (np.trace(xl @ s).real for s in traj.matrices)
    assert x0 == pytest.approx(0.135335283, abs=1e-8)
    assert x8 == pytest.approx(math.exp(-2 * math.exp(-8)), abs=1e-6)


def test_sparse_path_matches_dense():
    m = SqueezedCatModel(lam=0.5, n_trunc=12)
    from nmqip.dynamics import Evolver
    import nmqip.dynamics as dyn
    rho = np.asarray(m.initial_state()).reshape(-1, order="F")
    ts = [0.1, 0.35, 0.35001, 1.2]
    dense = Evolver(m.generator).evolve(rho, ts)
    limit = dyn.DENSE_DIM_LIMIT
    try:
        dyn.DENSE_DIM_LIMIT = 0
        sparse = Evolver(m.generator).evolve(rho, ts)
    finally:
        dyn.DENSE_DIM_LIMIT = limit
    assert np.abs(dense - sparse).max() < 1e-11


def test_family_endpoints_three_qubit():
    p = 0.1
    m = ThreeQubitModel(p)
    fam = logical_map_family(m, [0.0, 40.0])
    assert np.abs(fam.maps[0] - bit_flip(p).matrix).max() < 1e-12
    assert np.abs(fam.maps[1] - bit_flip(p * p * (3 - 2 * p)).matrix).max() < 1e-12


def test_family_degenerate_grid():
    fam = logical_map_family(ThreeQubitModel(0.1), [0.0])
    assert fam.maps.shape == (1, 4, 4)
    assert np.abs(intermediate_map(fam, 0.0, 0.0).matrix - np.eye(4)).max() < 1e-12


def test_family_trace_preserving():
    fam = logical_map_family(TeleportationModel(), np.linspace(0, 3, 13))
    tr = np.array([1, 0, 0, 1])
    for m in fam.maps:
        assert np.abs(tr @ m - tr).max() < 1e-9


def test_discrete_intermediate_map_is_not_cp():
    p = 0.1
    fam = logical_map_family(ThreeQubitModel(p), [0.0, 40.0])
    inter = intermediate_map(fam, 0.0, 40.0)
    assert np.abs(inter.matrix - bit_flip(-p * (1 - p)).matrix).max() < 1e-9
    rep = cp_check(superoperator_to_choi(inter))
    assert not rep.is_cp
    assert rep.min_eigenvalue == pytest.approx(-0.09, abs=1e-9)


def test_bit_flip_composition_rule():
    # F_b o F_a = F_{a + b - 2ab}: F_p then F_{-p(1-p)} gives F_{p^2(3-2p)}
    for p in (0.05, 0.1, 0.3):
        a, b = p, -p * (1 - p)
        comp = bit_flip(b).matrix @ bit_flip(a).matrix
        assert np.abs(comp - bit_flip(a + b - 2 * a * b).matrix).max() < 1e-15
        assert np.abs(comp - bit_flip(p * p * (3 - 2 * p)).matrix).max() < 1e-15


def test_intermediate_composition_invariant():
    fam = logical_map_family(ThreeQubitModel(0.2), np.linspace(0, 4, 9))
    for t, s in ((0.5, 1.5), (1.0, 4.0), (0.0, 2.0)):
        inter = intermediate_map(fam, t, s)
        assert np.abs(inter.matrix @ fam.map_at(t).matrix - fam.map_at(s).matrix).max() < 1e-8


def test_teleportation_singular_at_origin():
    fam = logical_map_family(TeleportationModel(), [0.0, 1.0])
    with pytest.raises(SingularMapError):
        intermediate_map(fam, 0.0, 1.0)
    with pytest.raises(SingularMapError):
        generator_from_family(fam, 0.0)


def test_semigroup_generator_recovered():
    lind = dephasing_lindbladian(0.7) + 0.2 * (np.kron(X.conj(), X) - np.eye(4))
    fam = family_from_function(lambda t: matrix_exponential(lind * t), np.linspace(0, 2, 5))
    h = 1e-3
    # finite-difference bias is about h^2 ||L||^3 / 6 (central) and h^2 ||L||^3 / 3 (one-sided)
    bound = h**2 * np.linalg.norm(lind, 2) ** 3
    gen = generator_from_family(fam, 1.0, h=h)
    assert np.abs(gen.matrix - lind).max() < bound / 6 * 1.5
    near_origin = generator_from_family(fam, 0.0, h=h)
    assert np.abs(near_origin.matrix - lind).max() < bound / 3 * 1.5


def test_three_qubit_generator_is_bit_flip_type():
    m = ThreeQubitModel(0.1)
    fam = logical_map_family(m, np.linspace(0, 3, 7))
    for t in (0.5, 1.0, 2.5):
        gen = generator_from_family(fam, t).matrix
        rate = m.analytic(t).rate
        want = rate * (np.kron(X.conj(), X) - np.eye(4))
        assert np.abs(gen - want).max() < 1e-6


def test_teleportation_generator_is_depolarizing_type():
    m = TeleportationModel()
    fam = logical_map_family(m, np.linspace(0.1, 2, 5))
    t = math.log(2)
    gen = generator_from_family(fam, t).matrix
    rate = -0.25
    want = rate * sum(np.kron(p.conj(), p) - np.eye(4) for p in (X, Y, Z))
    assert np.abs(gen - want).max() < 1e-6
    dec = canonical_decompose(gen, time=t)
    assert np.abs(dec.pauli_rates - rate).max() < 1e-6


def test_canonical_dephasing_conventions():
    gamma = 0.35
    dec = canonical_decompose(dephasing_lindbladian(gamma))
    assert np.abs(dec.rates - [0, 0, 2 * gamma]).max() < 1e-12
    assert np.abs(dec.pauli_rates - [0, 0, gamma]).max() < 1e-12
    assert hs_to_pauli_rate(2 * gamma, 2) == pytest.approx(gamma)
    assert pauli_to_hs_rate(gamma, 2) == pytest.approx(2 * gamma)
    op = dec.lindblad_ops[2]
    assert abs(abs(np.trace(op.conj().T @ Z)) - math.sqrt(2)) < 1e-12


def test_canonical_reassembly_random():
    rng = np.random.default_rng(3)
    for d in (2, 3, 4):
        h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        ops = tuple((rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)), float(rng.uniform(0.1, 1)))
                    for _ in range(3))
        lind = GkslGenerator(d, hamiltonian=h + h.conj().T, dissipators=ops).superoperator()
        dec = canonical_decompose(lind)
        assert np.abs(dec.superoperator() - lind).max() < 1e-8
        assert np.all(dec.rates > -1e-10)
        assert np.abs(dec.hamiltonian - dec.hamiltonian.conj().T).max() < 1e-12


def test_canonical_rejects_non_generator():
    bad = np.zeros((4, 4), dtype=complex)
    bad[1, 2] = 1.0  # not Hermiticity preserving
    with pytest.raises(GeneratorError):
        canonical_decompose(bad)


def test_rate_error_is_second_order_in_h():
    m = ThreeQubitModel(0.2)
    fam = logical_map_family(m, np.linspace(0, 3, 7))
    exact = m.analytic(1.0).rate
    errs = [abs(canonical_rates(fam, [1.0], h)[0, 0] - exact) for h in (0.08, 0.04)]
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_three_qubit_rates_negative():
    m = ThreeQubitModel(0.3)
    ts = np.linspace(0.1, 8, 40)
    rates = canonical_rates(logical_map_family(m, ts), ts)
    assert np.all(rates[:, 0] < 0)
    assert np.abs(rates[:, 1:]).max() < 1e-9


def test_propagate_rejects_bad_state():
    gen = GkslGenerator(2, dissipators=((Z, 1.0),))
    with pytest.raises(ValueError):
        propagate(gen, np.diag([2.0, -1.0]), [0, 1])


def test_trace_norm_of_non_cp_choi():
    # first-order intermediate map with one negative rate: Choi trace norm 1 + 2|g| dt
    g, dt = -0.3, 1e-3
    s = pauli_channel(g * dt, 0, 0)
    assert trace_norm(superoperator_to_choi(s).matrix) == pytest.approx(1 + 2 * abs(g) * dt, abs=1e-12)
