import numpy as np
import pytest
from hypothesis import given, strategies as st

from oqsim.algebra import (
    DOWN, UP, DensityMatrix, HilbertSpace, Ket, Operator, annihilation, basis, bell_states, commutator,
    creation, embed, expectation, fock, identity, number, partial_trace, pauli, random_density_matrix,
    random_hermitian, tensor,
)
from oqsim.errors import InvalidArgumentError

seeds = st.integers(0, 2**32 - 1)


def test_hilbert_space_total_dim():
    assert HilbertSpace((2, 3, 4)).total_dim == 24


def test_annihilation_cutoff_one():
    a = annihilation(1)
    assert np.array_equal(a.data, [[0, 1], [0, 0]])


def test_annihilation_lowers_fock_one():
    assert np.allclose((annihilation(3) @ fock(3, 1)).data, fock(3, 0).data)


@pytest.mark.parametrize("cutoff", [1, 4, 30])
def test_number_diagonal(cutoff):
    a = annihilation(cutoff)
    for n in range(cutoff + 1):
        assert expectation(a.dag() @ a, fock(cutoff, n)) == pytest.approx(n)
    assert np.allclose((creation(cutoff) @ a).data, number(cutoff).data)


def test_annihilation_rejects_zero_cutoff():
    with pytest.raises(InvalidArgumentError):
        annihilation(0)


def test_truncated_commutator_defect_on_top_level():
    c = 6
    a = annihilation(c)
    comm = commutator(a, a.dag()).data
    assert np.allclose(comm[:c, :c], np.eye(c))
    assert comm[c, c] == pytest.approx(-c)
    off = comm - np.diag(np.diag(comm))
    assert np.allclose(off, 0)


def test_pauli_conventions():
    assert np.array_equal(pauli("z").data, np.diag([1, -1]))
    up, down = basis(2, UP), basis(2, DOWN)
    assert np.allclose((pauli("minus") @ up).data, down.data)
    assert np.allclose((pauli("x") @ pauli("x")).data, np.eye(2))
    sp = (pauli("x") + 1j * pauli("y")) / 2
    assert pauli("plus").allclose(sp)


def test_tensor_examples():
    assert identity((2, 2)).allclose(tensor(identity(2), identity(2)))
    ud = basis((2, 2), (UP, DOWN))
    out = tensor(pauli("z"), identity(2)) @ ud
    assert np.allclose(out.data, ud.data)
    assert tensor(annihilation(2), pauli("x")).dims == (3, 2)
    with pytest.raises(InvalidArgumentError):
        tensor()


@given(seeds)
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(d, rng) for d in (2, 3, 2))
    left = tensor(a, tensor(b, c)).data
    right = tensor(tensor(a, b), c).data
    assert np.max(np.abs(left - right)) <= 1e-14


def test_embed_examples():
    sx = pauli("x")
    assert embed(sx, 0, (2, 2)).allclose(tensor(sx, identity(2)))
    assert embed(sx, 1, (2, 2)).allclose(tensor(identity(2), sx))
    a = annihilation(2)
    assert embed(a, 0, (3,)).allclose(a)
    with pytest.raises(InvalidArgumentError):
        embed(sx, 0, (3, 2))


@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_partial_trace_of_product(seed, da, db):
    rng = np.random.default_rng(seed)
    ra, rb = random_density_matrix(da, rng), random_density_matrix(db, rng)
    joint = tensor(ra, rb)
    assert partial_trace(joint, [0]).allclose(ra, atol=1e-12)
    assert partial_trace(joint, [1]).allclose(rb, atol=1e-12)


def test_partial_trace_bell_is_maximally_mixed():
    psi = bell_states()["psi-"]
    red = partial_trace(DensityMatrix.from_ket(psi), [0])
    assert red.allclose(np.eye(2) / 2)


def test_partial_trace_keeps_order_and_trace(rng):
    rho = random_density_matrix(12, rng)
    rho = DensityMatrix(rho.data, (2, 3, 2))
    red = partial_trace(rho, [2, 0])
    assert red.dims == (2, 2)
    assert abs(red.trace() - 1) <= 1e-12
    with pytest.raises(InvalidArgumentError):
        partial_trace(rho, [])


def test_expectation_examples(rng):
    assert expectation(pauli("z"), basis(2, UP)) == pytest.approx(1)
    assert expectation(number(30), fock(30, 10)) == pytest.approx(10)
    rho = random_density_matrix(5, rng)
    assert expectation(identity(5), rho) == pytest.approx(1)
    with pytest.raises(InvalidArgumentError):
        expectation(identity(4), rho)


@given(seeds)
def test_hermitian_expectation_is_real(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(4, rng)
    assert abs(expectation(h, random_density_matrix(4, rng)).imag) <= 1e-10


def test_density_matrix_validation():
    DensityMatrix(np.diag([0.3, 0.7]))
    with pytest.raises(InvalidArgumentError, match="trace"):
        DensityMatrix(np.diag([1.0, 1.0]))
    with pytest.raises(InvalidArgumentError, match="Hermitian"):
        DensityMatrix([[0.5, 0.2], [0.0, 0.5]])
    with pytest.raises(InvalidArgumentError, match="negative"):
        DensityMatrix(np.diag([1.5, -0.5]))
    # within tolerance is accepted
    DensityMatrix(np.diag([1.0 + 1e-9, -1e-9]))


def test_ket_normalizes():
    k = Ket([3, 4])
    assert k.norm() == pytest.approx(1)
    assert abs(bell_states()["psi+"].overlap(bell_states()["psi-"])) <= 1e-15


def test_bell_convention():
    psi = bell_states()["psi-"].data
    assert psi[np.ravel_multi_index((UP, DOWN), (2, 2))] == pytest.approx(1 / np.sqrt(2))
    assert psi[np.ravel_multi_index((DOWN, UP), (2, 2))] == pytest.approx(-1 / np.sqrt(2))


def test_operator_space_mismatch():
    with pytest.raises(InvalidArgumentError):
        identity((2, 2)) + identity(4)
    with pytest.raises(InvalidArgumentError):
        Operator(np.zeros((2, 3)))
