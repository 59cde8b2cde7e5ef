import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oqsim.algebra import DOWN, UP, DensityMatrix, embed, identity, pauli, random_density_matrix, random_ket
from oqsim.errors import InvalidArgumentError
from oqsim.qec import (
    SYNDROMES, build_repetition_code, cycle_map, logical_error_ratio, logical_flip_probability, minkowski_match,
    single_qubit_coherence, single_qubit_decay, two_qubit_logical_demo,
)
from oqsim.superop import check_quantum_map, trace_preservation_error

DIMS = (2, 2, 2)


# single qubit -------------------------------------------------------------------

def test_coherence_times_pure_decay():
    g = 0.7
    rep = single_qubit_coherence(g)
    assert rep.T1 == pytest.approx(1 / g, rel=1e-10)
    assert rep.T2 == pytest.approx(2 / g, rel=1e-10)
    assert np.allclose(sorted(-rep.spectrum.eigenvalues.real), [0, g / 2, g / 2, g], atol=1e-10)


def test_coherence_times_pure_dephasing():
    rep = single_qubit_coherence(0.0, 0.5)
    assert rep.T1 == np.inf
    assert rep.T2 == pytest.approx(1.0)
    assert np.sum(np.abs(rep.spectrum.eigenvalues) < 1e-12) == 2


def test_coherence_all_zero_is_not_error():
    rep = single_qubit_coherence(0.0, 0.0)
    assert rep.T1 == np.inf and rep.T2 == np.inf


def test_doubling_decay_halves_T1():
    assert single_qubit_coherence(2.4).T1 == pytest.approx(single_qubit_coherence(1.2).T1 / 2)


def test_negative_rates_rejected():
    with pytest.raises(InvalidArgumentError):
        single_qubit_coherence(-1.0)
    with pytest.raises(InvalidArgumentError):
        two_qubit_logical_demo(1.0, -1.0)


def test_single_qubit_decay_formula():
    rho = DensityMatrix(np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]]))
    out = single_qubit_decay(rho, 1.0, 0.0)
    assert np.allclose(out, rho.data)
    late = single_qubit_decay(rho, 1.0, 50.0)
    assert late[DOWN, DOWN] == pytest.approx(1.0) and abs(late[UP, DOWN]) < 1e-10


# two qubits ---------------------------------------------------------------------

@pytest.mark.parametrize("g1,g2", [(1.0, 1.0), (0.3, 3.0), (1.0, 10.0), (0.0, 1.0), (1.0, 0.0)])
def test_two_qubit_logical_subsystem(g1, g2):
    rep = two_qubit_logical_demo(g1, g2, n_states=20)
    assert rep.minkowski_max_dev <= 1e-8
    assert rep.reduced_max_dev <= 1e-8


def test_perfect_memory_when_qubit_one_is_isolated():
    rho = DensityMatrix(np.array([[0.6, 0.3j], [-0.3j, 0.4]]))
    assert np.allclose(single_qubit_decay(rho, 0.0, 10.0), rho.data)


def test_spectrum_with_silent_second_qubit_is_fourfold():
    rep = two_qubit_logical_demo(1.0, 0.0, n_states=2)
    vals = np.sort_complex(np.round(rep.joint_eigenvalues, 9))
    ref = np.sort_complex(np.repeat([0, -0.5, -0.5, -1.0], 4).astype(complex))
    assert np.allclose(vals, ref, atol=1e-9)


def test_minkowski_match():
    assert minkowski_match([1, 2, 3], [3, 1, 2]) == 0.0
    assert minkowski_match([0, 0], [0, 1e-3]) == pytest.approx(1e-3)
    with pytest.raises(InvalidArgumentError):
        minkowski_match([1], [1, 2])


# repetition code -------------------------------------------------------------------

@pytest.fixture(scope="module")
def code():
    return build_repetition_code()


def test_code_projectors_and_gates(code):
    P = [code.projectors[s].data for s in SYNDROMES]
    assert np.allclose(sum(P), np.eye(8), atol=1e-14)
    for i in range(4):
        assert np.allclose(P[i] @ P[i], P[i])
        for j in range(i + 1, 4):
            assert np.allclose(P[i] @ P[j], 0)
    for s in SYNDROMES:
        O = code.recoveries[s].data
        assert np.allclose(O @ O.conj().T, np.eye(8)) and np.allclose(O, O.conj().T)
    assert code.recoveries[(1, 1)].allclose(identity(DIMS))
    # P_{1,1} projects on span{|000>, |111>}
    k0, k1 = (w.data for w in code.codewords)
    assert np.allclose(code.projectors[(1, 1)].data, np.outer(k0, k0) + np.outer(k1, k1))


def encoded(alpha, beta, code):
    v = alpha * code.codewords[0].data + beta * code.codewords[1].data
    return v / np.linalg.norm(v)


def test_code_space_syndrome(code):
    assert code.syndrome(encoded(0.6, 0.8j, code)) == (1, 1)


@pytest.mark.parametrize("site,syn", [(0, (-1, 1)), (1, (-1, -1)), (2, (1, -1))])
def test_single_flip_syndromes(code, site, syn):
    psi = embed(pauli("x"), site, DIMS).data @ encoded(0.6, 0.8, code)
    assert code.syndrome(psi) == syn


def test_syndrome_rejects_superposed_errors(code):
    psi = encoded(1, 1, code) + embed(pauli("x"), 0, DIMS).data @ encoded(1, 1, code)
    with pytest.raises(InvalidArgumentError):
        code.syndrome(psi / np.linalg.norm(psi))


@settings(max_examples=40)
@given(st.integers(0, 2), st.integers(0, 2 ** 31 - 1))
def test_single_error_corrected_exactly(code, site, seed):
    rng = np.random.default_rng(seed)
    a = random_ket(2, rng).data
    psi = encoded(a[0], a[1], code)
    err = embed(pauli("x"), site, DIMS).data @ psi
    R = code.recovery_superop()
    out = (R.data @ np.outer(err, err.conj()).ravel()).reshape(8, 8)
    fid = np.real(psi.conj() @ out @ psi)
    assert abs(fid - 1) <= 1e-12


def test_recovery_is_quantum_map(code):
    assert check_quantum_map(code.recovery_superop()).is_valid()


@pytest.mark.parametrize("gt", [1e-3, 0.1, 1.0])
def test_cycle_map_is_quantum_map(gt):
    cm = cycle_map(1.0, gt)
    assert check_quantum_map(cm.E).is_valid()
    assert np.all(np.abs(cm.eigenvalues) <= 1 + 1e-10)
    assert np.min(np.abs(cm.eigenvalues - 1)) < 1e-10


def test_cycle_map_preserves_trace_of_random_states():
    cm = cycle_map(1.0, 0.3)
    rng = np.random.default_rng(0)
    for _ in range(5):
        rho = random_density_matrix(8, rng).data
        out = (cm.E.data @ rho.ravel()).reshape(8, 8)
        assert abs(np.trace(out) - 1) <= 1e-10
    assert trace_preservation_error(cm.E) <= 1e-10


def test_cycle_map_tiny_period():
    g = 1.0
    cm = cycle_map(g, 1e-6 / g)
    for lab in "IXYZ":
        assert abs(cm.logical_rate(lab)) <= 1e-4 * g


@pytest.mark.parametrize("gt", [0.001, 0.01, 0.05, 0.1, 0.2, 0.5])
def test_logical_rate_matches_majority_vote_oracle(gt):
    g = 1.3
    tau = gt / g
    cm = cycle_map(g, tau)
    pl = logical_flip_probability(g, tau)
    assert cm.logical["Z"] == pytest.approx(1 - 2 * pl, abs=1e-12)
    assert cm.logical_error_rate == pytest.approx(-np.log(1 - 2 * pl) / tau, rel=1e-8)


def test_logical_labels_stable_across_tau():
    for gt in (0.01, 0.05, 0.1, 0.2):
        cm = cycle_map(1.0, gt)
        assert cm.logical["I"] == pytest.approx(1.0, abs=1e-10)
        assert cm.logical["X"] == pytest.approx(1.0, abs=1e-10)
        assert cm.logical["Y"] == pytest.approx(cm.logical["Z"], abs=1e-10)


def test_four_slow_logical_timescales():
    g, tau = 1.0, 0.01
    cm = cycle_map(g, tau)
    slow = np.sum(np.abs(cm.lambda_eff) <= 10 * g * g * tau)
    assert slow >= 4


def test_logical_rate_below_bare_rate():
    g = 1.0
    for row in logical_error_ratio(g, [0.1, 0.05, 0.02, 0.01]):
        assert row.lambda_eff_logical < row.bare_rate == 2 * g
        assert row.ratio < 1


def test_logical_rate_linear_in_tau():
    g = 1.0
    taus = np.array([0.01, 0.02, 0.04])
    lam = np.array([r.lambda_eff_logical for r in logical_error_ratio(g, taus)])
    fit = np.polyfit(taus, lam, 1)
    resid = lam - np.polyval(fit, taus)
    r2 = 1 - resid @ resid / np.sum((lam - lam.mean()) ** 2)
    assert r2 > 0.99
    assert abs(np.polyval(fit, 0.0)) < 0.05 * lam[-1]


def test_ratio_monotone_and_vanishes():
    taus = np.linspace(0.005, 0.2, 12)
    ratio = np.array([r.ratio for r in logical_error_ratio(1.0, taus)])
    assert np.all(np.diff(ratio) > 0)
    assert ratio[0] < 0.02


def test_zero_rate_gives_not_applicable_ratio():
    rows = logical_error_ratio(0.0, [0.1, 0.2])
    for r in rows:
        assert r.lambda_eff_logical == 0 and r.bare_rate == 0 and np.isnan(r.ratio)


def test_invalid_periods():
    with pytest.raises(InvalidArgumentError):
        cycle_map(1.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        logical_error_ratio(1.0, [0.1, -0.1])
