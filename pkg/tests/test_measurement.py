import numpy as np
import pytest
from hypothesis import given, strategies as st

from oqsim.algebra import UP, DensityMatrix, Ket, Operator, basis, fock, identity, pauli, random_density_matrix
from oqsim.errors import ImpossibleOutcomeError, InvalidArgumentError
from oqsim.measurement import (
    PovmSet, ProjectiveSet, apply_read, apply_unread, outcome_probabilities, photodetector,
    projective_from_observable, random_povm, sample_outcome, validate_povm,
)
from oqsim.superop import check_quantum_map

seeds = st.integers(0, 2**32 - 1)
PLUS = DensityMatrix.from_ket(Ket([1, 1]))


def z_projectors():
    return projective_from_observable(pauli("z"))


def test_photodetector_is_povm_not_projective():
    rep = validate_povm(photodetector())
    assert rep.is_povm and not rep.is_projective and rep.ok


def test_z_projectors_are_projective():
    zs = z_projectors()
    assert zs.labels == [1.0, -1.0]
    rep = validate_povm(zs)
    assert rep.is_projective and rep.ok


def test_trivial_measurement():
    assert validate_povm(PovmSet([("only", identity(3))])).ok


def test_incomplete_set_reported():
    rep = validate_povm(PovmSet([("a", Operator(np.diag([1, 0])))]))
    assert not rep.is_povm and rep.completeness_error == pytest.approx(1)


def test_fake_projective_set_reported():
    rep = validate_povm(ProjectiveSet(list(photodetector().outcomes)))
    assert not rep.ok and any("projective" in p for p in rep.problems)


def test_set_validation():
    with pytest.raises(InvalidArgumentError):
        PovmSet([])
    with pytest.raises(InvalidArgumentError):
        PovmSet([("x", identity(2)), ("x", identity(2))])


def test_click_on_single_photon():
    rho, p = apply_read(DensityMatrix.from_ket(fock(1, 1)), photodetector(), "click")
    assert p == pytest.approx(1)
    assert rho.allclose(np.diag([1, 0]))


def test_repeatable_projective_read():
    up = DensityMatrix.from_ket(basis(2, UP))
    rho, p = apply_read(up, z_projectors(), 1.0)
    assert p == pytest.approx(1) and rho.allclose(up)


def test_born_rule_on_plus():
    rho, p = apply_read(PLUS, z_projectors(), 1.0)
    assert p == pytest.approx(0.5)
    assert rho.allclose(DensityMatrix.from_ket(basis(2, UP)))


def test_impossible_outcome():
    with pytest.raises(ImpossibleOutcomeError):
        apply_read(DensityMatrix.from_ket(basis(2, UP)), z_projectors(), -1.0)


def test_unread_examples():
    assert apply_unread(PLUS, z_projectors()).allclose(np.eye(2) / 2)
    up = DensityMatrix.from_ket(basis(2, UP))
    assert apply_unread(up, z_projectors()).allclose(up)
    mixed = DensityMatrix.maximally_mixed(2)
    assert apply_unread(mixed, z_projectors()).allclose(mixed)
    assert apply_unread(mixed, projective_from_observable(pauli("x"))).allclose(mixed)


@given(seeds, st.integers(2, 4), st.integers(1, 4))
def test_random_povm_properties(seed, dim, n):
    rng = np.random.default_rng(seed)
    mset = random_povm(dim, n, rng)
    assert validate_povm(mset).is_povm
    assert check_quantum_map(mset.superop()).is_valid()
    rho = random_density_matrix(dim, rng)
    probs = outcome_probabilities(rho, mset)
    assert sum(probs.values()) == pytest.approx(1, abs=1e-10)
    avg = sum(p * apply_read(rho, mset, lab)[0].data for lab, p in probs.items() if p > 1e-14)
    assert np.max(np.abs(avg - apply_unread(rho, mset).data)) <= 1e-12


def test_sampling_frequencies():
    rng = np.random.default_rng(7)
    zs = z_projectors()
    draws = [sample_outcome(PLUS, zs, rng) for _ in range(100_000)]
    assert np.mean(np.array(draws) == 1.0) == pytest.approx(0.5, abs=0.01)


def test_sampling_deterministic_cases():
    up = DensityMatrix.from_ket(basis(2, UP))
    rng = np.random.default_rng(0)
    assert {sample_outcome(up, z_projectors(), rng) for _ in range(100)} == {1.0}
    a = [sample_outcome(PLUS, z_projectors(), np.random.default_rng(5)) for _ in range(3)]
    b = [sample_outcome(PLUS, z_projectors(), np.random.default_rng(5)) for _ in range(3)]
    assert a == b


def test_degenerate_observable_groups_projectors():
    obs = Operator(np.diag([2.0, 1.0, 2.0]))
    ps = projective_from_observable(obs)
    assert ps.labels == [2.0, 1.0]
    assert ps[2.0].allclose(np.diag([1, 0, 1]))
