"""Quantum-trajectory unravelings of a Lindblad model.

Three schemes are supported:

``counting``
    photon-counting jumps; no-jump steps evolve under the effective
    Hamiltonian and are renormalized.
``counting_with_offset``
    counting after the substitution G -> G + beta, H -> H - (i beta / 2)(G - G^dag)
    which leaves the master equation unchanged.
``homodyne_ideal``
    the diffusive beta -> infinity limit, integrated by Euler-Maruyama.

Every trajectory draws from its own Philox stream keyed by (seed, index),
so a trajectory is reproducible on its own and independent of how an
ensemble is batched or threaded. Trajectories are propagated in batches as
rows of one array.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .algebra import DOWN, UP, Ket, Operator, basis, bell_states, embed, pauli
from .errors import CapabilityError, InvalidArgumentError, NumericError
from .superop import LindbladModel


SCHEMES = ("counting", "counting_with_offset", "homodyne_ideal")
WARN_STEP_PROB = 0.1
MAX_STEP_PROB = 0.5
_CHUNK = 512  # random numbers drawn per trajectory at a time
THREADS_ENV = "OQSIM_THREADS"


@dataclass
class TrajectoryConfig:
    dt: float
    t_max: float
    seed: int = 0
    scheme: str = "counting"
    beta: float = 0.0
    observables: Sequence[Operator] = ()
    store_states: bool = False
    conditional_no_jump: bool = False
    sample_every: int = 1

    def __post_init__(self):
        if not self.dt > 0 or not self.t_max > 0:
            raise InvalidArgumentError("dt and t_max must be positive")
        if self.scheme not in SCHEMES:
            raise InvalidArgumentError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not np.isfinite(self.beta):
            raise InvalidArgumentError("beta must be finite")
        if int(self.sample_every) < 1:
            raise InvalidArgumentError("sample_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_max / self.dt)))

    @property
    def step(self) -> float:
        return self.t_max / self.n_steps

    def sample_steps(self) -> np.ndarray:
        steps = np.arange(0, self.n_steps + 1, self.sample_every)
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps

    def times(self) -> np.ndarray:
        return self.sample_steps() * self.step


@dataclass
class TrajectoryResult:
    times: np.ndarray
    expect: np.ndarray  # (n_samples, n_observables), complex
    jumps: list[tuple[float, int]]
    seed: int
    index: int
    scheme: str
    states: np.ndarray | None = None  # (n_samples, d) when stored


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def effective_hamiltonian(model: LindbladModel) -> Operator:
    """H - (i/2) sum_mu g_mu G_mu^dag G_mu (normalization handled elsewhere)."""
    h = model.H.data.astype(complex)
    for r, op in model.jumps:
        h = h - 0.5j * r * (op.data.conj().T @ op.data)
    return Operator(h, model.dims)


def offset_model(model: LindbladModel, beta: float) -> LindbladModel:
    """Unit-rate model with G -> sqrt(g) G + beta and H -> H - (i beta/2)(G - G^dag)."""
    if len(model.jumps) != 1:
        raise CapabilityError("the offset substitution is defined for a single jump channel")
    r, op = model.jumps[0]
    g = np.sqrt(r) * op.data
    d = g.shape[0]
    h = model.H.data - 0.5j * beta * (g - g.conj().T)
    h = 0.5 * (h + h.conj().T)
    return LindbladModel(Operator(h, model.dims), [(1.0, Operator(g + beta * np.eye(d), model.dims))])


class _Streams:
    """Per-trajectory random streams, consumed in fixed-size chunks."""

    def __init__(self, rngs, kind):
        self.rngs = rngs
        self.kind = kind
        self.buf = None
        self.pos = _CHUNK

    def next(self) -> np.ndarray:
        if self.pos == _CHUNK:
            draw = (lambda g: g.random(_CHUNK)) if self.kind == "uniform" else (lambda g: g.standard_normal(_CHUNK))
            self.buf = np.stack([draw(g) for g in self.rngs], axis=1)
            self.pos = 0
        out = self.buf[self.pos]
        self.pos += 1
        return out


def _initial_kets(state, rngs, dims) -> np.ndarray:
    if isinstance(state, Ket):
        if abs(state.norm() - 1) > 1e-8:
            raise InvalidArgumentError("initial ket must be normalized")
        return np.tile(state.data, (len(rngs), 1))
    # mixed state: each trajectory starts from an eigenvector drawn with its weight
    w, v = np.linalg.eigh(state.data)
    w = np.clip(w, 0.0, None)
    cdf = np.cumsum(w) / w.sum()
    idx = [min(int(np.searchsorted(cdf, g.random(), side="right")), len(w) - 1) for g in rngs]
    return v[:, idx].T.copy()


def _expect(obs_mats, psi):
    # psi: (N, d); returns (N, n_obs)
    if not obs_mats:
        return np.zeros((psi.shape[0], 0), dtype=complex)
    return np.stack([np.einsum("nd,nd->n", psi.conj(), psi @ o.T) for o in obs_mats], axis=1)


def _simulate_batch(model: LindbladModel, state, cfg: TrajectoryConfig, indices) -> list[TrajectoryResult]:
    if cfg.scheme == "counting_with_offset":
        model = offset_model(model, cfg.beta)
    if state.dims != model.dims:
        raise InvalidArgumentError(f"state on {state.dims}, model on {model.dims}")
    model.validate()
    rngs = [trajectory_rng(cfg.seed, i) for i in indices]
    psi = _initial_kets(state, rngs, model.dims)
    obs = [o.data for o in cfg.observables]
    for o in cfg.observables:
        if o.dims != model.dims:
            raise InvalidArgumentError("observable lives on a different space")
    h = cfg.step
    n = len(indices)
    samples = cfg.sample_steps()
    is_sample = np.zeros(cfg.n_steps + 1, dtype=bool)
    is_sample[samples] = True
    expect = np.zeros((n, len(samples), len(obs)), dtype=complex)
    states = np.zeros((n, len(samples), psi.shape[1]), dtype=complex) if cfg.store_states else None
    jumps = [[] for _ in range(n)]
    expect[:, 0] = _expect(obs, psi)
    if states is not None:
        states[:, 0] = psi
    k_sample = 1

    if cfg.scheme == "homodyne_ideal":
        step = _homodyne_stepper(model, h, _Streams(rngs, "normal"))
    else:
        step = _counting_stepper(model, h, _Streams(rngs, "uniform"), cfg.conditional_no_jump, jumps)

    for k in range(1, cfg.n_steps + 1):
        psi = step(psi, k * h)
        if is_sample[k]:
            expect[:, k_sample] = _expect(obs, psi)
            if states is not None:
                states[:, k_sample] = psi
            k_sample += 1
    times = cfg.times()
    return [
        TrajectoryResult(times, expect[i], jumps[i], cfg.seed, int(idx), cfg.scheme,
                         None if states is None else states[i])
        for i, idx in enumerate(indices)
    ]


def _counting_stepper(model, h, streams, no_jump, jumps):
    ops = [np.sqrt(r) * op.data for r, op in model.jumps if r > 0]
    chan = [i for i, (r, _) in enumerate(model.jumps) if r > 0]
    heff = effective_hamiltonian(model).data
    prop_t = sla.expm(-1j * h * heff).T
    ops_t = [g.T for g in ops]
    state = {"warned": False}

    def step(psi, t):
        u = streams.next()
        if ops and not no_jump:
            g_psi = np.stack([psi @ gt for gt in ops_t])  # (n_ch, N, d)
            p = h * np.sum(np.abs(g_psi) ** 2, axis=2)  # (n_ch, N)
            cum = np.cumsum(p, axis=0)
            ptot = cum[-1]
            pmax = float(ptot.max())
            if pmax > MAX_STEP_PROB:
                raise NumericError(f"jump probability {pmax:.3g} per step at t = {t:.6g}; reduce dt")
            if pmax > WARN_STEP_PROB and not state["warned"]:
                warnings.warn(f"jump probability {pmax:.3g} per step exceeds {WARN_STEP_PROB}", RuntimeWarning, stacklevel=3)
                state["warned"] = True
            jumped = u < ptot
        else:
            jumped = np.zeros(psi.shape[0], dtype=bool)
        new = psi @ prop_t
        if jumped.any():
            for i in np.nonzero(jumped)[0]:
                mu = int(np.searchsorted(cum[:, i], u[i], side="right"))
                v = g_psi[mu, i]
                new[i] = v
                jumps[i].append((t, chan[mu]))
        norms = np.linalg.norm(new, axis=1)
        if np.any(norms == 0):
            raise NumericError(f"state annihilated at t = {t:.6g}")
        return new / norms[:, None]

    return step


def _homodyne_stepper(model, h, streams):
    if len(model.jumps) != 1:
        raise CapabilityError("homodyne unraveling is implemented for exactly one jump channel")
    r, op = model.jumps[0]
    g = np.sqrt(r) * op.data
    gt = g.T
    gdg_t = (g.conj().T @ g).T
    prop_t = sla.expm(-1j * h * model.H.data).T
    sqh = np.sqrt(h)

    def step(psi, t):
        dw = sqh * streams.next()
        g_psi = psi @ gt
        x = 2.0 * np.real(np.einsum("nd,nd->n", psi.conj(), g_psi))  # <G + G^dag>
        drift = -0.5 * (psi @ gdg_t) + 0.5 * x[:, None] * g_psi - (x ** 2 / 8.0)[:, None] * psi
        noise = dw[:, None] * (g_psi - 0.5 * x[:, None] * psi)
        new = (psi + h * drift + noise) @ prop_t
        return new / np.linalg.norm(new, axis=1)[:, None]

    return step


def _n_threads(workers):
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_ensemble(model: LindbladModel, state, cfg: TrajectoryConfig, n_traj: int,
                 first_index=0, workers=None, batch=100) -> list[TrajectoryResult]:
    """Run trajectories ``first_index .. first_index + n_traj - 1``."""
    if n_traj < 1:
        raise InvalidArgumentError("n_traj must be >= 1")
    idx = list(range(first_index, first_index + n_traj))
    chunks = [idx[i:i + batch] for i in range(0, n_traj, batch)]
    nthreads = _n_threads(workers)
    if nthreads == 1 or len(chunks) == 1:
        parts = [_simulate_batch(model, state, cfg, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            parts = list(ex.map(lambda c: _simulate_batch(model, state, cfg, c), chunks))
    return [r for part in parts for r in part]


def run_counting(model: LindbladModel, psi0, cfg: TrajectoryConfig, index=0) -> TrajectoryResult:
    if cfg.scheme != "counting":
        cfg = _with_scheme(cfg, "counting")
    return _simulate_batch(model, psi0, cfg, [index])[0]


def run_counting_with_offset(model: LindbladModel, beta: float, psi0, cfg: TrajectoryConfig, index=0) -> TrajectoryResult:
    cfg = _with_scheme(cfg, "counting_with_offset", beta=beta)
    return _simulate_batch(model, psi0, cfg, [index])[0]


def run_homodyne(model: LindbladModel, psi0, cfg: TrajectoryConfig, index=0) -> TrajectoryResult:
    if len(model.jumps) != 1:
        raise CapabilityError("homodyne unraveling is implemented for exactly one jump channel")
    cfg = _with_scheme(cfg, "homodyne_ideal")
    return _simulate_batch(model, psi0, cfg, [index])[0]


def _with_scheme(cfg, scheme, **kw):
    from dataclasses import replace
    return replace(cfg, scheme=scheme, **kw)


@dataclass
class EnsembleStats:
    times: np.ndarray
    mean: np.ndarray  # (n_samples, n_obs) complex
    stderr: np.ndarray  # (n_samples, n_obs) real; nan for a single trajectory
    n: int


def ensemble_average(results: Sequence[TrajectoryResult], observables=None) -> EnsembleStats:
    """Pointwise mean and standard error (sample std / sqrt N)."""
    if not results:
        raise InvalidArgumentError("no trajectories to average")
    t0 = results[0].times
    for r in results[1:]:
        if r.times.shape != t0.shape or not np.allclose(r.times, t0, rtol=0, atol=1e-12):
            raise InvalidArgumentError("trajectories do not share a time grid")
    data = np.stack([r.expect for r in results])
    if observables is not None:
        data = data[:, :, list(observables)]
    n = data.shape[0]
    mean = data.mean(axis=0)
    if n > 1:
        stderr = np.sqrt(np.var(data.real, axis=0, ddof=1) + np.var(data.imag, axis=0, ddof=1) ) / np.sqrt(n)
    else:
        stderr = np.full(mean.shape, np.nan)
    return EnsembleStats(t0, mean, stderr, n)


# ---------------------------------------------------------------------------
# two qubits with local and collective decay

def state_transfer_model(gamma1, gamma2, gamma_c, omega1=1.0, omega2=1.0) -> LindbladModel:
    if min(gamma1, gamma2, gamma_c) < 0:
        raise InvalidArgumentError("rates must be non-negative")
    dims = (2, 2)
    sz1, sz2 = embed(pauli("z"), 0, dims), embed(pauli("z"), 1, dims)
    sm1, sm2 = embed(pauli("minus"), 0, dims), embed(pauli("minus"), 1, dims)
    H = 0.5 * omega1 * sz1 + 0.5 * omega2 * sz2
    return LindbladModel(H, [(gamma1, sm1), (gamma2, sm2), (gamma_c, (sm1 + sm2) / np.sqrt(2))])


def state_transfer_observables() -> list[Operator]:
    """[<sp sm> of qubit 1, <sp sm> of qubit 2, |Psi-><Psi-|]."""
    dims = (2, 2)
    n1 = embed(pauli("plus") @ pauli("minus"), 0, dims)
    n2 = embed(pauli("plus") @ pauli("minus"), 1, dims)
    return [n1, n2, bell_states(dims)["psi-"].proj()]


def state_transfer_scenario(gamma1, gamma2, gamma_c, cfg: TrajectoryConfig, omega1=1.0, omega2=1.0,
                            index=0) -> TrajectoryResult:
    """Counting trajectory from |e, g> recording both excitations and the |Psi-> fidelity."""
    from dataclasses import replace
    model = state_transfer_model(gamma1, gamma2, gamma_c, omega1, omega2)
    cfg = replace(cfg, scheme="counting", observables=state_transfer_observables())
    return _simulate_batch(model, basis((2, 2), (UP, DOWN)), cfg, [index])[0]
