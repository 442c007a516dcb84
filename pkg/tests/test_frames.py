import itertools
import math

import numpy as np
import pytest

from nmqip.exceptions import DimensionError, LeakageError, TruncationError
from nmqip.frames import (
    CodeSpec, SubsystemFrame, annihilation, annihilation_relation_residual, bell_state, build_frame, check_kl,
    cnot, coherent_state, displacement, logical_state, single_flip_channel, single_qubit_op, squeezed_cat_frame,
    squeezing, teleportation_bell_isometry, teleportation_frame, three_qubit_code, three_qubit_frame,
)
from nmqip.linalg import I2, X, Y, Z, QuantumChannel, partial_trace, random_density_matrix, vec

# three-qubit repetition code frame: physical ket -> (logical, gauge)
TABLE = {
    "000": (0, "00"), "001": (0, "01"), "010": (0, "11"), "100": (1, "10"),
    "111": (1, "00"), "110": (1, "01"), "101": (1, "11"), "011": (0, "10"),
}


def ket(bits: str) -> np.ndarray:
    e = np.zeros(2 ** len(bits))
    e[int(bits, 2)] = 1
    return e


def test_table_rows_bit_exact():
    fr = three_qubit_frame()
    for phys, (k, g) in TABLE.items():
        out = fr.isometry @ ket(phys)
        want = np.kron(np.eye(2)[k], ket(g))
        assert np.array_equal(out, want), phys


def test_check_kl_examples():
    triv = CodeSpec(np.eye(2))
    rep = check_kl(triv, QuantumChannel((np.eye(2),)))
    assert rep.passes and np.allclose(rep.d, [1])
    code = three_qubit_code()
    assert check_kl(code, single_flip_channel()).passes
    x12 = single_qubit_op(X, 0, 3) @ single_qubit_op(X, 1, 3)
    bad = QuantumChannel((math.sqrt(0.5) * x12, math.sqrt(0.5) * single_qubit_op(X, 2, 3)))
    rep = check_kl(code, bad)
    assert not rep.passes
    # oracle: P X1X2X3 P is logical X (unit entries), weighted by sqrt(d d') = 1/2
    p = code.projector
    expected = 0.5 * np.abs(p @ x12 @ single_qubit_op(X, 2, 3) @ p).max()
    assert expected == pytest.approx(0.5)
    assert rep.offdiagonal_residual == pytest.approx(expected, rel=1e-12)


def test_build_frame_trivial():
    fr = build_frame(CodeSpec(np.eye(2)), QuantumChannel((np.eye(2),)))
    assert np.abs(fr.isometry - np.eye(2)).max() < 1e-14
    assert np.allclose(fr.probabilities, [1])
    assert np.abs(fr.logical_unitaries[0] - np.eye(2)).max() < 1e-14


def test_build_frame_with_clifford_hint():
    hint = cnot(3, 0, 1) @ cnot(3, 1, 2)
    fr = build_frame(three_qubit_code(), single_flip_channel(), clifford_hint=hint)
    assert list(fr.gauge_labels) == ["00", "10", "11", "01"]
    want_q = [I2, X, I2, I2]
    for q, w in zip(fr.logical_unitaries, want_q):
        assert np.abs(q - w).max() < 1e-12
    assert fr.relation_residual() < 1e-10


def test_build_frame_raw_relation_and_orthogonality():
    code = three_qubit_code()
    ch = single_flip_channel((0.55, 0.2, 0.15, 0.1))
    fr = build_frame(code, ch)
    assert fr.relation_residual() <= 1e-10
    projs = [u @ code.projector @ u.conj().T for u in fr.error_unitaries]
    for a, b in itertools.combinations(projs, 2):
        assert np.linalg.norm(a @ b, 2) <= 1e-10


def _is_pauli_string(m: np.ndarray) -> bool:
    coeffs = []
    for ps in itertools.product((I2, X, Y, Z), repeat=3):
        p = ps[0]
        for q in ps[1:]:
            p = np.kron(p, q)
        coeffs.append(np.trace(p @ m) / 8)
    coeffs = np.abs(coeffs)
    return np.sum(coeffs > 1e-12) == 1 and abs(coeffs.max() - 1) < 1e-12


def test_three_qubit_frame_is_clifford():
    v = three_qubit_frame().isometry
    assert np.abs(v @ v.conj().T - np.eye(8)).max() < 1e-14
    for q in range(3):
        for p in (X, Y, Z):
            assert _is_pauli_string(v @ single_qubit_op(p, q, 3) @ v.conj().T)


def test_teleportation_frame_examples():
    fr = teleportation_frame()
    vs = teleportation_bell_isometry()
    assert np.abs(vs @ bell_state(0, 0) - ket("00")).max() < 1e-14
    rng = np.random.default_rng(11)
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    psi /= np.linalg.norm(psi)
    phi = bell_state(0, 0)
    out = fr.isometry @ np.kron(psi, phi)
    want = sum(np.kron(fr.gauge_ket(g), q @ psi) for q, g in zip(fr.logical_unitaries, fr.gauge_labels)) / 2
    assert np.abs(out - want).max() < 1e-14
    red = partial_trace_bob(np.outer(out, out.conj()))
    assert np.abs(red - np.eye(2) / 2).max() < 1e-14


def partial_trace_bob(rho):
    return partial_trace(rho, (4, 2), keep=[1])


def test_teleportation_pre_feedback_state_is_mixed():
    fr = teleportation_frame()
    psi = np.array([0.6, 0.8j])
    phys = np.kron(psi, bell_state(0, 0))
    out = logical_state(np.outer(phys, phys.conj()), fr)
    assert np.abs(out.matrix - np.eye(2) / 2).max() < 1e-14


def test_logical_state_examples():
    fr = three_qubit_frame()
    code = three_qubit_code()
    zero = code.codewords[:, 0]
    out = logical_state(np.outer(zero, zero), fr)
    assert np.abs(out.matrix - np.diag([1, 0])).max() < 1e-14
    rng = np.random.default_rng(12)
    rho_l = random_density_matrix(2, rng)
    w = code.codewords
    rho_c = w @ rho_l @ w.conj().T
    ch = single_flip_channel()
    noisy = ch.apply(rho_c)
    want = sum(d * q @ rho_l @ q.conj().T for d, q in zip(fr.probabilities, fr.logical_unitaries))
    assert np.abs(logical_state(noisy, fr).matrix - want).max() < 1e-12


def test_logical_state_as_superoperator():
    # logical_state o noise o encode equals sum_m d_m Q_m . Q_m^+ on all matrix units
    fr = three_qubit_frame((0.4, 0.3, 0.2, 0.1))
    code = three_qubit_code()
    ch = single_flip_channel((0.4, 0.3, 0.2, 0.1))
    w = code.codewords
    mix = sum(d * np.kron(q.conj(), q) for d, q in zip(fr.probabilities, fr.logical_unitaries))
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2))
            unit[i, j] = 1
            got = fr.isometry @ ch.apply(w @ unit @ w.conj().T) @ fr.isometry.conj().T
            red = partial_trace(got, fr.composite_dims, keep=[0])
            assert np.abs(vec(red) - mix @ vec(unit)).max() < 1e-9


def test_logical_state_leakage():
    fr = three_qubit_frame()
    # a frame built from {I, X1} covers only half the space
    code = three_qubit_code()
    ch = QuantumChannel((math.sqrt(0.5) * np.eye(8), math.sqrt(0.5) * single_qubit_op(X, 0, 3)))
    small = build_frame(code, ch)
    bad = ket("010")
    with pytest.raises(LeakageError):
        logical_state(np.outer(bad, bad), small)
    with pytest.raises(DimensionError):
        logical_state(np.eye(4) / 4, fr)


def test_frame_json_round_trip():
    fr = three_qubit_frame()
    back = SubsystemFrame.from_json(fr.to_json())
    assert np.array_equal(back.isometry, fr.isometry)
    assert back.gauge_labels == fr.gauge_labels
    assert all(np.array_equal(a, b) for a, b in zip(back.logical_unitaries, fr.logical_unitaries))


def test_coherent_state_guard():
    amp = coherent_state(1.0, 40)
    assert abs(np.linalg.norm(amp) - 1) < 1e-12
    with pytest.raises(TruncationError):
        coherent_state(4.0, 10)


def test_squeezed_cat_frame_plain_cat_codewords():
    alpha, n = 2.0, 120
    fr = squeezed_cat_frame(alpha, 0.0, n_gauge=2, n_trunc=n)
    vac = np.eye(n)[0]
    for s, sign in ((0, 1), (1, -1)):
        cat = displacement(alpha, n) @ vac + sign * displacement(-alpha, n) @ vac
        cat /= np.linalg.norm(cat)
        out = fr.isometry @ cat
        want = np.kron(np.eye(2)[s], np.eye(2)[0])
        assert np.abs(np.abs(out) - np.abs(want)).max() < 1e-10


def test_squeezed_cat_frame_isometry_and_relation():
    fr = squeezed_cat_frame(2.0, 1.3, n_gauge=4, n_trunc=500)
    v = fr.isometry
    assert np.abs(v @ v.conj().T - np.eye(v.shape[0])).max() < 1e-10
    assert annihilation_relation_residual(fr, 2.0, 1.3) <= 1e-2


def test_squeezing_is_unitary_on_low_block():
    s = squeezing(0.5, 80)
    vac = s[:, 0]
    assert abs(np.linalg.norm(vac) - 1) < 1e-10
    # <n> of a squeezed vacuum is sinh^2 r
    assert np.vdot(vac, np.arange(80) * vac).real == pytest.approx(math.sinh(0.5) ** 2, abs=1e-9)


def test_annihilation_matrix():
    a = annihilation(4)
    assert np.allclose(np.diag(a, 1), np.sqrt([1, 2, 3]))
