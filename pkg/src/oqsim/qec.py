"""Liouvillian view of error correction.

Covers single-qubit T1/T2 from the spectrum, a logical qubit hidden in a
two-qubit space, and the three-qubit bit-flip repetition code with a
periodic detect-and-recover cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .algebra import (
    DOWN,
    UP,
    DensityMatrix,
    Ket,
    Operator,
    basis,
    embed,
    identity,
    partial_trace,
    pauli,
    random_density_matrix,
    tensor,
)
from .errors import InvalidArgumentError, NumericError
from .superop import (
    LindbladModel,
    Spectrum,
    SuperOp,
    build_liouvillian,
    kraus_superop,
    spectrum,
    vectorize,
)

ZERO_RATE = 1e-12


# ---------------------------------------------------------------------------
# single qubit

@dataclass
class CoherenceReport:
    T1: float
    T2: float
    spectrum: Spectrum

    @property
    def rates(self) -> tuple[float, float]:
        return 1.0 / self.T1, 1.0 / self.T2


def qubit_model(gamma1: float, gamma_phi: float = 0.0) -> LindbladModel:
    if gamma1 < 0 or gamma_phi < 0:
        raise InvalidArgumentError("rates must be non-negative")
    return LindbladModel(Operator(np.zeros((2, 2))), [(gamma1, pauli("minus")), (gamma_phi, pauli("z"))])


def single_qubit_coherence(gamma1: float, gamma_phi: float = 0.0) -> CoherenceReport:
    """T1 from the population eigenvalue, T2 from the coherence eigenvalue."""
    s = spectrum(build_liouvillian(qubit_model(gamma1, gamma_phi)))
    pop, coh = 0.0, 0.0
    for lam, r in zip(s.eigenvalues, s.right):
        m = r.data
        offdiag = abs(m[0, 1]) + abs(m[1, 0])
        if offdiag > abs(m[0, 0]) + abs(m[1, 1]):
            coh = max(coh, -lam.real)
        else:
            pop = max(pop, -lam.real)
    inv = lambda r: np.inf if r < ZERO_RATE else 1.0 / r
    return CoherenceReport(inv(pop), inv(coh), s)


def single_qubit_decay(rho: Operator, gamma: float, t: float) -> np.ndarray:
    """Closed-form state of gamma*D[sm] at time t (index UP is the excited level)."""
    m = np.array(rho.data, dtype=complex)
    out = np.empty_like(m)
    pe = m[UP, UP].real * np.exp(-gamma * t)
    out[UP, UP] = pe
    out[DOWN, DOWN] = 1.0 - pe
    out[UP, DOWN] = m[UP, DOWN] * np.exp(-gamma * t / 2)
    out[DOWN, UP] = m[DOWN, UP] * np.exp(-gamma * t / 2)
    return out


# ---------------------------------------------------------------------------
# two uncoupled qubits

@dataclass
class TwoQubitReport:
    joint_eigenvalues: np.ndarray
    minkowski_eigenvalues: np.ndarray
    minkowski_max_dev: float
    reduced_max_dev: float
    times: np.ndarray
    n_states: int


def minkowski_match(a, b) -> float:
    """Largest mismatch of an optimal one-to-one pairing of two eigenvalue multisets."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise InvalidArgumentError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def two_qubit_logical_demo(gamma1: float, gamma2: float, n_states=20, times=None, seed=0) -> TwoQubitReport:
    """Check that qubit 1 inside gamma1 D[sm1] + gamma2 D[sm2] behaves as a lone qubit."""
    if gamma1 < 0 or gamma2 < 0:
        raise InvalidArgumentError("rates must be non-negative")
    dims = (2, 2)
    joint = LindbladModel(Operator(np.zeros((4, 4)), dims),
                          [(gamma1, embed(pauli("minus"), 0, dims)), (gamma2, embed(pauli("minus"), 1, dims))])
    L = build_liouvillian(joint)
    lam = np.linalg.eigvals(L.data)
    l1 = np.linalg.eigvals(build_liouvillian(qubit_model(gamma1)).data)
    l2 = np.linalg.eigvals(build_liouvillian(qubit_model(gamma2)).data)
    mink = (l1[:, None] + l2[None, :]).ravel()
    dev_spec = minkowski_match(lam, mink)

    if times is None:
        scale = max(gamma1, gamma2, 1.0)
        times = np.linspace(0.0, 5.0 / scale, 11)
    times = np.asarray(times, dtype=float)
    rng = np.random.default_rng(seed)
    props = [sla.expm(L.data * t) for t in times]
    dev = 0.0
    for k in range(n_states):
        # alternate product states and correlated joint states
        if k % 2 == 0:
            rho0 = tensor(random_density_matrix(2, rng), random_density_matrix(2, rng)).data
        else:
            rho0 = random_density_matrix(4, rng).data
        r1_0 = partial_trace(DensityMatrix(rho0, dims), [0])
        v0 = vectorize(rho0)
        for t, p in zip(times, props):
            rt = (p @ v0).reshape(4, 4)
            red = partial_trace(Operator(rt, dims), [0]).data
            dev = max(dev, float(np.max(np.abs(red - single_qubit_decay(r1_0, gamma1, t)))))
    return TwoQubitReport(lam, mink, dev_spec, dev, times, n_states)


# ---------------------------------------------------------------------------
# three-qubit repetition code

SYNDROMES = ((1, 1), (-1, 1), (-1, -1), (1, -1))


@dataclass
class RepetitionCode:
    projectors: dict[tuple[int, int], Operator]
    recoveries: dict[tuple[int, int], Operator]
    codewords: tuple[Ket, Ket]  # |000>, |111>

    dims = (2, 2, 2)

    def syndrome(self, state) -> tuple[int, int]:
        """Deterministic syndrome of a state lying in one syndrome subspace."""
        m = state.data if isinstance(state, (Ket, Operator)) else np.asarray(state)
        rho = np.outer(m, m.conj()) if m.ndim == 1 else m
        probs = {s: float(np.real(np.trace(p.data @ rho))) for s, p in self.projectors.items()}
        best = max(probs, key=probs.get)
        if probs[best] < 1 - 1e-10:
            raise InvalidArgumentError("state is spread over several syndrome subspaces")
        return best

    def recovery_superop(self) -> SuperOp:
        return kraus_superop([self.recoveries[s] @ self.projectors[s] for s in SYNDROMES])

    def logical_basis(self) -> dict[str, Operator]:
        """Orthonormal (Hilbert-Schmidt) logical operators on the code space."""
        k0 = basis(self.dims, (0, 0, 0)).data
        k1 = basis(self.dims, (1, 1, 1)).data
        o = lambda a, b: np.outer(a, b.conj())
        s = 1 / np.sqrt(2)
        return {
            "I": Operator(s * (o(k0, k0) + o(k1, k1)), self.dims),
            "X": Operator(s * (o(k0, k1) + o(k1, k0)), self.dims),
            "Y": Operator(s * (-1j * o(k0, k1) + 1j * o(k1, k0)), self.dims),
            "Z": Operator(s * (o(k0, k0) - o(k1, k1)), self.dims),
        }


def build_repetition_code() -> RepetitionCode:
    dims = (2, 2, 2)
    z = [embed(pauli("z"), j, dims).data for j in range(3)]
    one = np.eye(8)
    proj = {}
    for m1, m2 in SYNDROMES:
        p = 0.5 * (one + m1 * z[0] @ z[1]) @ (0.5 * (one + m2 * z[1] @ z[2]))
        proj[(m1, m2)] = Operator(p, dims)
    rec = {
        (1, 1): identity(dims),
        (-1, 1): embed(pauli("x"), 0, dims),
        (-1, -1): embed(pauli("x"), 1, dims),
        (1, -1): embed(pauli("x"), 2, dims),
    }
    words = (basis(dims, (0, 0, 0)), basis(dims, (1, 1, 1)))
    return RepetitionCode(proj, rec, words)


def bit_flip_model(gamma: float, n_qubits=3) -> LindbladModel:
    if gamma < 0:
        raise InvalidArgumentError("gamma must be non-negative")
    dims = (2,) * n_qubits
    return LindbladModel(Operator(np.zeros((2 ** n_qubits,) * 2), dims),
                         [(gamma, embed(pauli("x"), j, dims)) for j in range(n_qubits)])


@dataclass
class CycleMap:
    tau: float
    E: SuperOp
    eigenvalues: np.ndarray  # all eigenvalues of E, sorted by decreasing modulus
    lambda_eff: np.ndarray  # ln|eps| / tau, -inf for eps = 0
    phases: np.ndarray  # arg(eps) / tau
    logical: dict[str, complex]  # label -> eigenvalue of E for I, X, Y, Z

    def logical_rate(self, label: str) -> float:
        """Decay rate |ln|eps|| / tau of one logical eigenvalue."""
        return -np.log(abs(self.logical[label])) / self.tau + 0.0

    @property
    def logical_error_rate(self) -> float:
        """The logical bit-flip rate (decay of Z_L)."""
        return self.logical_rate("Z")


def cycle_map(gamma: float, tau: float, code: RepetitionCode | None = None) -> CycleMap:
    """E = R exp(L tau) for the bit-flip channel on all three qubits."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    code = code or build_repetition_code()
    L = build_liouvillian(bit_flip_model(gamma))
    free = sla.expm(L.data * tau)
    E = SuperOp(code.recovery_superop().data @ free, L.dims)
    w, v = np.linalg.eig(E.data)
    if not np.all(np.isfinite(w)):
        raise NumericError("non-finite cycle-map eigenvalues")
    order = np.argsort(-np.abs(w), kind="stable")
    w, v = w[order], v[:, order]

    # label eigenvalues by overlap of their eigenmatrices with the logical basis
    labels = list(code.logical_basis())
    lb = np.stack([vectorize(op) for op in code.logical_basis().values()])
    vn = v / np.linalg.norm(v, axis=0)
    overlap = np.abs(lb.conj() @ vn)  # (4, 64)
    rows, cols = linear_sum_assignment(-overlap)
    logical = {labels[r]: complex(w[c]) for r, c in zip(rows, cols)}

    with np.errstate(divide="ignore"):
        lam = np.log(np.abs(w)) / tau
    return CycleMap(tau, E, w, lam, np.angle(w) / tau, logical)


def logical_flip_probability(gamma: float, tau: float) -> float:
    """Majority-vote failure probability for independent flips over one period."""
    p = 0.5 * (1 - np.exp(-2 * gamma * tau))
    return 3 * p ** 2 * (1 - p) + p ** 3


@dataclass
class RatioRow:
    tau: float
    lambda_eff_logical: float
    bare_rate: float
    ratio: float


def logical_error_ratio(gamma: float, taus) -> list[RatioRow]:
    """Logical bit-flip rate of the corrected code against the bare rate 2*gamma."""
    rows = []
    for tau in taus:
        if not tau > 0:
            raise InvalidArgumentError("tau values must be positive")
        lam = cycle_map(gamma, tau).logical_error_rate
        bare = 2.0 * gamma
        ratio = lam / bare if bare > 0 else np.nan
        rows.append(RatioRow(float(tau), float(lam), bare, float(ratio)))
    return rows
