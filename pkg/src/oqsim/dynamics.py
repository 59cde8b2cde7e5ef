"""Deterministic time evolution.

Fixed-step RK4 for the master equation and for closed pure-state dynamics,
plus two numerical experiments on emergent irreversibility: a qubit coupled
to randomly drawn bosonic modes, and a cavity repeatedly interacting with
freshly reset ancilla qubits.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .algebra import (
    DOWN,
    UP,
    DensityMatrix,
    Ket,
    Operator,
    annihilation,
    basis,
    density_matrix_violations,
    embed,
    pauli,
)
from .errors import CapabilityError, InvalidArgumentError, NumericError
from .superop import LindbladModel, SuperOp, kraus_superop


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    dt: float
    sample_every: int = 1

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise InvalidArgumentError(f"need t1 > t0, got [{self.t0}, {self.t1}]")
        if not self.dt > 0:
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")
        if (self.t1 - self.t0) / self.dt < 1 - 1e-12:
            raise InvalidArgumentError("time window shorter than one step")
        if int(self.sample_every) < 1:
            raise InvalidArgumentError("sample_every must be a positive integer")

    @property
    def n_steps(self) -> int:
        return max(1, int(round((self.t1 - self.t0) / self.dt)))

    @property
    def step(self) -> float:
        # exact step so the grid lands on t1
        return (self.t1 - self.t0) / self.n_steps

    def sample_steps(self) -> np.ndarray:
        steps = np.arange(0, self.n_steps + 1, self.sample_every)
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps

    def times(self) -> np.ndarray:
        return self.t0 + self.sample_steps() * self.step


def default_dt(model: LindbladModel) -> float:
    scale = max([r * np.linalg.norm(op.data, 2) ** 2 for r, op in model.jumps] + [np.linalg.norm(model.H.data, 2), 1e-12])
    return 0.01 / scale


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve_master(model: LindbladModel, rho0: DensityMatrix, grid: TimeGrid,
                  trace_drift_per_time=1e-8, psd_floor=-1e-8) -> list[DensityMatrix]:
    """RK4 integration of d rho/dt = L rho, Hermitized every step."""
    if rho0.dims != model.dims:
        raise InvalidArgumentError(f"state on {rho0.dims}, model on {model.dims}")
    model.validate()
    h = grid.step
    rate_scale = sum(r * np.linalg.norm(op.data, 2) ** 2 for r, op in model.jumps)
    stiff = rate_scale + np.linalg.norm(model.H.data, 2)
    if stiff > 0 and h > 0.1 / stiff:
        warnings.warn(f"dt = {h:.3g} exceeds the recommended 0.1/{stiff:.3g}", RuntimeWarning, stacklevel=2)

    hd = model.H.data
    heff = hd - 0.5j * sum((r * op.data.conj().T @ op.data for r, op in model.jumps), np.zeros_like(hd))
    jumps = [(np.sqrt(r) * op.data) for r, op in model.jumps if r > 0]

    def f(rho):
        a = -1j * (heff @ rho)
        out = a + a.conj().T
        for g in jumps:
            out += g @ rho @ g.conj().T
        return out

    rho = np.array(rho0.data, dtype=complex)
    rho = 0.5 * (rho + rho.conj().T)
    samples = set(grid.sample_steps().tolist())
    out = [DensityMatrix(rho, model.dims, check=False)]
    for step in range(1, grid.n_steps + 1):
        rho = _rk4(f, rho, h)
        rho = 0.5 * (rho + rho.conj().T)
        if step in samples:
            t = step * h
            drift = abs(np.trace(rho) - 1.0)
            if drift > trace_drift_per_time * max(t, 1.0):
                raise NumericError(f"trace drift {drift:.3g} at step {step} (t = {grid.t0 + t:.6g})")
            problems = density_matrix_violations(rho, trace_tol=np.inf, psd_floor=psd_floor)
            if problems:
                raise NumericError(f"invalid state at step {step}: {'; '.join(problems)}")
            out.append(DensityMatrix(rho, model.dims, check=False))
    return out


def evolve_closed(H: Operator, psi0: Ket, grid: TimeGrid) -> list[Ket]:
    """RK4 Schroedinger evolution with per-step renormalization."""
    if not H.is_hermitian():
        raise InvalidArgumentError("Hamiltonian is not Hermitian")
    if psi0.dims != H.dims:
        raise InvalidArgumentError(f"state on {psi0.dims}, Hamiltonian on {H.dims}")
    hm = -1j * H.data
    h = grid.step
    psi = psi0.data.copy()
    samples = set(grid.sample_steps().tolist())
    out = [Ket(psi, H.dims, normalize=False)]
    for step in range(1, grid.n_steps + 1):
        psi = _rk4(lambda y: hm @ y, psi, h)
        psi /= np.linalg.norm(psi)
        if step in samples:
            out.append(Ket(psi, H.dims, normalize=False))
    return out


# ---------------------------------------------------------------------------
# qubit coupled to random bosonic modes

@dataclass(frozen=True)
class EnvBenchParams:
    M: int = 20
    omega: float = 1.0
    gbar1: float = 1e-3
    rel_sigma: float = 0.05
    seed: int = 0
    rwa: bool = True

    def __post_init__(self):
        if self.M < 0:
            raise InvalidArgumentError("M must be >= 0")
        if not self.gbar1 > 0:
            raise InvalidArgumentError("gbar1 must be positive")
        if not 0 <= self.rel_sigma < 1:
            raise InvalidArgumentError("rel_sigma must lie in [0, 1)")

    def draw(self):
        """Mode frequencies and couplings; g_i is centred on gbar1 / M."""
        rng = np.random.default_rng(self.seed)
        if self.M == 0:
            return np.zeros(0), np.zeros(0)
        omegas = rng.normal(self.omega, self.rel_sigma * self.omega, self.M)
        gbar = self.gbar1 / self.M
        gs = rng.normal(gbar, self.rel_sigma * gbar, self.M)
        return omegas, gs


MAX_FULL_MODES = 10


def environment_hamiltonian(p: EnvBenchParams) -> tuple[Operator, Ket]:
    """Hamiltonian and initial state |up; 0...0> for the benchmark.

    With ``rwa`` the model is restricted to the single-excitation sector,
    basis (|up; vac>, |down; 1_1>, ..., |down; 1_M>). Otherwise every mode is
    truncated to occupation <= 1 and the qubit couples through sx.
    """
    omegas, gs = p.draw()
    M = p.M
    if p.rwa:
        h = np.zeros((M + 1, M + 1), dtype=complex)
        h[0, 0] = p.omega / 2
        h[np.arange(1, M + 1), np.arange(1, M + 1)] = -p.omega / 2 + omegas
        h[0, 1:] = gs
        h[1:, 0] = gs
        psi0 = np.zeros(M + 1, dtype=complex)
        psi0[0] = 1.0
        return Operator(h), Ket(psi0, normalize=False)
    if M > MAX_FULL_MODES:
        raise CapabilityError(f"full coupling limited to M <= {MAX_FULL_MODES}; use rwa=True")
    dims = (2,) + (2,) * M
    b = annihilation(1)
    H = p.omega / 2 * embed(pauli("z"), 0, dims)
    sx = embed(pauli("x"), 0, dims)
    for i in range(M):
        bi = embed(b, i + 1, dims)
        H = H + omegas[i] * (bi.dag() @ bi) + gs[i] * (sx @ (bi + bi.dag()))
    psi0 = basis(dims, (UP,) + (0,) * M)
    return H, psi0


def random_environment_benchmark(p: EnvBenchParams, grid: TimeGrid, method="exact") -> tuple[np.ndarray, np.ndarray]:
    """Excitation <sp sm>(t) of the qubit; returns (times, excitation).

    ``method="rk4"`` integrates with :func:`evolve_closed`. The default
    ``"exact"`` diagonalizes the (time-independent) Hamiltonian once, which
    keeps windows spanning many revival periods cheap.
    """
    H, psi0 = environment_hamiltonian(p)
    if p.M == 0:
        # lone qubit: only a phase accumulates
        return grid.times(), np.ones(len(grid.times()))
    if method == "rk4":
        kets = evolve_closed(H, psi0, grid)
        amps = np.array([k.data for k in kets])
        times = grid.times()
    elif method == "exact":
        times = grid.times()
        w, V = np.linalg.eigh(H.data)
        c = V.conj().T @ psi0.data
        phases = np.exp(-1j * np.outer(times - grid.t0, w))
        amps = (phases * c) @ V.T
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    if p.rwa:
        exc = np.abs(amps[:, 0]) ** 2
    else:
        d = amps.shape[1]
        exc = np.sum(np.abs(amps[:, : d // 2]) ** 2, axis=1)  # qubit is factor 0, |up> first
    return times, exc


def revival_time(times, excitation, decayed=np.exp(-1), revived=0.5) -> float:
    """First time the excitation climbs back to ``revived`` after having
    fallen to ``decayed``; ``inf`` if either never happens in the window."""
    exc = np.asarray(excitation)
    low = np.nonzero(exc <= decayed)[0]
    if low.size == 0:
        return np.inf
    back = np.nonzero(exc[low[0]:] >= revived)[0]
    if back.size == 0:
        return np.inf
    return float(times[low[0] + back[0]])


def oscillation_amplitude(excitation) -> float:
    """Peak-to-peak excursion of the excitation trace."""
    exc = np.asarray(excitation)
    return float(exc.max() - exc.min())


# ---------------------------------------------------------------------------
# cavity measured through repeated ancilla interactions

@dataclass(frozen=True)
class RepeatedInteractionParams:
    g: float
    tau: float
    n_cycles: int
    cutoff: int = 1
    omega: float = 0.0

    def __post_init__(self):
        if self.g < 0 or not self.tau > 0 or self.n_cycles < 1 or self.cutoff < 1:
            raise InvalidArgumentError(f"invalid repeated-interaction parameters {self}")


@dataclass
class RepeatedInteractionResult:
    gamma_eff: float
    cycle_map: SuperOp
    times: np.ndarray
    photon_number: np.ndarray
    kraus: list[Operator]


def repeated_interaction_kraus(p: RepeatedInteractionParams) -> list[Operator]:
    """Cavity Kraus operators of one couple-then-measure-and-reset cycle.

    Cavity (x) detector with H = w (a^dag a + sz/2) + g (a^dag sm + a sp). The
    detector starts in its ground state; the unread measurement
    {1 (x) |g><g|, 1 (x) |g><e|} resets it, so the cavity sees
    K_j = <j| U |g> for detector outcome j in {g, e}.
    """
    dims = (p.cutoff + 1, 2)
    a = embed(annihilation(p.cutoff), 0, dims)
    sm = embed(pauli("minus"), 1, dims)
    sz = embed(pauli("z"), 1, dims)
    H = p.omega * (a.dag() @ a + 0.5 * sz) + p.g * (a.dag() @ sm + a @ sm.dag())
    U = sla.expm(-1j * p.tau * H.data).reshape(p.cutoff + 1, 2, p.cutoff + 1, 2)
    return [Operator(U[:, j, :, DOWN], (p.cutoff + 1,)) for j in (DOWN, UP)]


def repeated_interaction_map(p: RepeatedInteractionParams, fit_efoldings=5.0) -> RepeatedInteractionResult:
    """Compose n_cycles couple/measure/reset cycles on the cavity.

    Starting from Fock |cutoff>, fits log<n> against time (least squares over
    the first ``fit_efoldings`` e-foldings or all cycles, whichever is
    shorter) to get the effective damping rate.
    """
    if p.g * p.tau > 0.2:
        warnings.warn(f"g*tau = {p.g * p.tau:.3g} is not small; rate fit may be poor", RuntimeWarning, stacklevel=2)
    kraus = repeated_interaction_kraus(p)
    E = kraus_superop(kraus)
    d = p.cutoff + 1
    rho = np.zeros((d, d), dtype=complex)
    rho[p.cutoff, p.cutoff] = 1.0
    v = rho.reshape(-1)
    nvec = np.arange(d, dtype=float)
    ns = [float(p.cutoff)]
    for _ in range(p.n_cycles):
        v = E.data @ v
        ns.append(float(np.real(v.reshape(d, d).diagonal()) @ nvec))
    ns = np.array(ns)
    times = p.tau * np.arange(p.n_cycles + 1)
    if p.g == 0:
        return RepeatedInteractionResult(0.0, E, times, ns, kraus)
    if np.any(np.diff(ns) > 1e-12):
        raise NumericError("photon number is not monotonically decaying; cannot fit a rate")
    keep = ns > ns[0] * np.exp(-fit_efoldings)
    keep &= ns > 1e-300
    if keep.sum() < 2:
        keep[:2] = True
    slope, _ = np.polyfit(times[keep], np.log(ns[keep]), 1)
    return RepeatedInteractionResult(float(-slope), E, times, ns, kraus)
