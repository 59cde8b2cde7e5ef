import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from oqsim.algebra import (
    DOWN, UP, DensityMatrix, Operator, annihilation, basis, embed, expectation, fock, number, pauli,
    random_density_matrix, random_hermitian, random_ket,
)
from oqsim.dynamics import (
    EnvBenchParams, RepeatedInteractionParams, TimeGrid, default_dt, environment_hamiltonian, evolve_closed,
    evolve_master, oscillation_amplitude, random_environment_benchmark, repeated_interaction_kraus,
    repeated_interaction_map, revival_time,
)
from oqsim.errors import CapabilityError, InvalidArgumentError, NumericError
from oqsim.superop import LindbladModel, build_liouvillian, check_quantum_map, spectral_evolve, spectrum

seeds = st.integers(0, 2**32 - 1)


def test_time_grid_validation():
    g = TimeGrid(0.0, 1.0, 0.3)
    assert g.n_steps == 3 and g.step == pytest.approx(1 / 3)
    assert g.times()[-1] == pytest.approx(1.0)
    assert list(TimeGrid(0, 1, 0.1, sample_every=4).sample_steps()) == [0, 4, 8, 10]
    for bad in [(1, 0, 0.1), (0, 1, 0), (0, 1, 2.0), (0, 1, 0.1, 0)]:
        with pytest.raises(InvalidArgumentError):
            TimeGrid(*bad)


def test_default_dt():
    model = LindbladModel(2.0 * number(3), [(1.0, annihilation(3))])
    assert default_dt(model) == pytest.approx(0.01 / 6.0)


def test_damped_cavity_law():
    c = 30
    a = annihilation(c)
    model = LindbladModel(number(c), [(1.0, a)])
    grid = TimeGrid(0, 5, 1e-3, sample_every=100)
    states = evolve_master(model, DensityMatrix.from_ket(fock(c, 10)), grid)
    n = np.array([expectation(number(c), r).real for r in states])
    ref = 10 * np.exp(-grid.times())
    assert np.max(np.abs(n - ref) / ref) <= 1e-6


def test_parity_conserved_under_two_photon_loss():
    c = 6
    a = annihilation(c)
    model = LindbladModel(number(c), [(0.8, a @ a)])
    P = Operator(sla.expm(1j * np.pi * number(c).data))
    states = evolve_master(model, DensityMatrix.from_ket(fock(c, 3)), TimeGrid(0, 3, 1e-3, 100))
    p = np.array([expectation(P, r).real for r in states])
    assert np.max(np.abs(p - p[0])) <= 1e-8


def test_zero_model_is_static(rng):
    rho = random_density_matrix(3, rng)
    states = evolve_master(LindbladModel(Operator(np.zeros((3, 3)))), rho, TimeGrid(0, 1, 0.1))
    assert all(np.array_equal(s.data, states[0].data) for s in states)
    assert states[0].allclose(rho, atol=1e-15)


def test_large_step_warns_and_blows_up():
    c = 5
    model = LindbladModel(number(c), [(50.0, annihilation(c))])
    with pytest.warns(RuntimeWarning):
        with pytest.raises(NumericError, match="step"):
            evolve_master(model, DensityMatrix.from_ket(fock(c, 5)), TimeGrid(0, 5, 0.5))


@settings(max_examples=15)
@given(seeds, st.integers(2, 4))
def test_master_matches_spectral(seed, d):
    rng = np.random.default_rng(seed)
    H = random_hermitian(d, rng)
    jumps = [(float(rng.uniform(0.2, 1)), Operator(rng.standard_normal((d, d)) / np.sqrt(d))) for _ in range(2)]
    model = LindbladModel(H, jumps)
    s = spectrum(build_liouvillian(model))
    rho0 = random_density_matrix(d, rng)
    grid = TimeGrid(0, 2, default_dt(model), sample_every=max(1, int(0.1 / default_dt(model))))
    for t, r in zip(grid.times(), evolve_master(model, rho0, grid)):
        assert abs(r.trace() - 1) <= 1e-8
        assert np.linalg.eigvalsh(r.data).min() >= -1e-6
        assert np.linalg.norm(r.data - spectral_evolve(rho0, s, t).data) <= 1e-6


def test_closed_phase_and_populations():
    w = 1.3
    kets = evolve_closed(0.5 * w * pauli("z"), basis(2, UP), TimeGrid(0, 2, 1e-3, 100))
    times = TimeGrid(0, 2, 1e-3, 100).times()
    for t, k in zip(times, kets):
        assert abs(k.data[UP]) == pytest.approx(1, abs=1e-12)
        assert k.data[UP] == pytest.approx(np.exp(-0.5j * w * t), abs=1e-9)


@given(seeds)
@settings(max_examples=20)
def test_closed_energy_conserved(seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(4, rng)
    psi = random_ket(4, rng)
    kets = evolve_closed(H, psi, TimeGrid(0, 1, 1e-3, 100))
    e = np.array([expectation(H, k).real for k in kets])
    assert np.max(np.abs(e - e[0])) <= 1e-8 * max(1.0, abs(e[0]))
    assert all(abs(k.norm() - 1) <= 1e-12 for k in kets)


def test_closed_rabi_period():
    g = 0.7
    dims = (2, 2)
    sp, sm = embed(pauli("plus"), 0, dims), embed(pauli("minus"), 0, dims)
    sp2, sm2 = embed(pauli("plus"), 1, dims), embed(pauli("minus"), 1, dims)
    H = g * (sp @ sm2 + sm @ sp2)
    grid = TimeGrid(0, np.pi / g, 1e-3)
    kets = evolve_closed(H, basis(dims, (UP, DOWN)), grid)
    pe = np.array([expectation(sp @ sm, k).real for k in kets])
    assert pe[-1] == pytest.approx(1, abs=1e-9)
    assert pe[len(pe) // 2] == pytest.approx(0, abs=1e-6)
    assert np.allclose(pe, np.cos(g * grid.times()) ** 2, atol=1e-9)


def test_closed_rejects_non_hermitian():
    with pytest.raises(InvalidArgumentError):
        evolve_closed(pauli("plus"), basis(2, UP), TimeGrid(0, 1, 0.1))


# environment benchmark ------------------------------------------------------

def test_envbench_no_modes_is_frozen():
    t, exc = random_environment_benchmark(EnvBenchParams(M=0), TimeGrid(0, 100, 1.0))
    assert np.all(exc == 1.0)


def test_envbench_single_mode_matches_rabi_formula():
    for seed in range(5):
        p = EnvBenchParams(M=1, seed=seed)
        omegas, gs = p.draw()
        delta = omegas[0] - p.omega
        grid = TimeGrid(0, 2e4, 1.0)
        _, exc = random_environment_benchmark(p, grid)
        ref = 4 * gs[0] ** 2 / (4 * gs[0] ** 2 + delta ** 2)
        assert oscillation_amplitude(exc) == pytest.approx(ref, rel=1e-3)


def test_envbench_exact_matches_rk4():
    p = EnvBenchParams(M=4, gbar1=0.1, seed=2)
    grid = TimeGrid(0, 50, 0.01, sample_every=50)
    _, a = random_environment_benchmark(p, grid, method="exact")
    _, b = random_environment_benchmark(p, grid, method="rk4")
    assert np.max(np.abs(a - b)) <= 1e-8


def test_envbench_rwa_close_to_full_coupling():
    p = EnvBenchParams(M=3, gbar1=0.01, seed=1)
    grid = TimeGrid(0, 300, 1.0)
    _, rwa = random_environment_benchmark(p, grid)
    _, full = random_environment_benchmark(EnvBenchParams(M=3, gbar1=0.01, seed=1, rwa=False), grid)
    assert np.max(np.abs(rwa - full)) <= 0.02


def test_envbench_full_coupling_limit():
    with pytest.raises(CapabilityError):
        environment_hamiltonian(EnvBenchParams(M=11, rwa=False))


def test_envbench_reproducible():
    p = EnvBenchParams(M=8, seed=3)
    grid = TimeGrid(0, 1000, 5.0)
    assert np.array_equal(random_environment_benchmark(p, grid)[1], random_environment_benchmark(p, grid)[1])


def test_envbench_revival_grows_with_modes():
    grid = TimeGrid(0, 2000, 0.5)
    for seed in range(5):
        revivals = [revival_time(*random_environment_benchmark(EnvBenchParams(M=M, gbar1=0.1, seed=seed), grid))
                    for M in (2, 4, 8)]
        assert np.all(np.isfinite(revivals)) and revivals[0] < revivals[1] < revivals[2]


def test_revival_time_helper():
    t = np.linspace(0, 10, 101)
    assert revival_time(t, np.ones_like(t)) == np.inf
    exc = np.cos(np.pi * t / 10) ** 2
    assert revival_time(t, exc) == pytest.approx(7.5, abs=0.11)


def test_envbench_params_validation():
    for kw in [dict(M=-1), dict(gbar1=0), dict(rel_sigma=1.0)]:
        with pytest.raises(InvalidArgumentError):
            EnvBenchParams(**kw)


# repeated interactions ---------------------------------------------------------

def test_zero_coupling_cycle_is_identity():
    res = repeated_interaction_map(RepeatedInteractionParams(0.0, 0.1, 10, cutoff=3))
    assert np.allclose(res.cycle_map.data, np.eye(16))
    assert res.gamma_eff == 0.0


@pytest.mark.parametrize("cutoff", [1, 2, 4])
def test_cycle_map_is_quantum_map(cutoff):
    res = repeated_interaction_map(RepeatedInteractionParams(1.0, 0.05, 50, cutoff=cutoff, omega=0.3))
    assert check_quantum_map(res.cycle_map).is_valid()


def test_zeno_rate_matches_closed_form():
    g, tau = 1.0, 0.05
    res = repeated_interaction_map(RepeatedInteractionParams(g, tau, 2000))
    exact = -2 * np.log(np.cos(g * tau)) / tau
    assert res.gamma_eff == pytest.approx(exact, rel=1e-10)
    assert res.gamma_eff == pytest.approx(g * g * tau, rel=0.05)
    k = np.arange(len(res.photon_number))
    assert np.allclose(res.photon_number, np.cos(g * tau) ** (2 * k), rtol=1e-10)


def test_zeno_rate_linear_in_tau():
    taus = np.array([0.0125, 0.025, 0.05])
    rates = np.array([repeated_interaction_map(RepeatedInteractionParams(1.0, t, 4000)).gamma_eff for t in taus])
    slope = rates @ taus / (taus @ taus)
    assert np.max(np.abs(rates - slope * taus)) <= 0.01 * rates.max()
    assert rates[1] / rates[0] == pytest.approx(2, rel=0.01)


def test_kraus_complete():
    ks = repeated_interaction_kraus(RepeatedInteractionParams(0.8, 0.3, 1, cutoff=3, omega=1.0))
    total = sum(k.data.conj().T @ k.data for k in ks)
    assert np.allclose(total, np.eye(4), atol=1e-12)


def test_large_coupling_warns():
    with pytest.warns(RuntimeWarning):
        repeated_interaction_map(RepeatedInteractionParams(1.0, 0.3, 20))
