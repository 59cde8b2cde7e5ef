"""Superoperators acting on row-major vectorized operators.

``vec([[a, b], [c, d]]) = (a, b, c, d)``. With this convention left
multiplication ``O X`` is ``O (x) 1`` and right multiplication ``X O`` is
``1 (x) O^T``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .algebra import DensityMatrix, Operator, density_matrix_violations
from .errors import CapabilityError, InvalidArgumentError, NotASymmetryError, NumericError

logger = logging.getLogger(__name__)

DENSE_DIM_LIMIT = 32
ZERO_TOL = 1e-8
COND_LIMIT = 1e10


class SuperOp:
    """Matrix of side d**2 acting on vectorized d x d operators."""

    __slots__ = ("data", "dims")
    __array_priority__ = 100

    def __init__(self, data, dims):
        data = np.asarray(data, dtype=complex)
        dims = tuple(dims)
        d = int(np.prod(dims))
        if data.shape != (d * d, d * d):
            raise InvalidArgumentError(f"superoperator shape {data.shape} incompatible with dims {dims}")
        self.data = data
        self.dims = dims

    @property
    def d(self) -> int:
        return int(np.prod(self.dims))

    def __repr__(self):
        return f"SuperOp(dims={self.dims}, side={self.data.shape[0]})"

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def _check(self, other):
        if self.dims != other.dims:
            raise InvalidArgumentError(f"space mismatch: {self.dims} vs {other.dims}")

    def __add__(self, other):
        if isinstance(other, SuperOp):
            self._check(other)
            return SuperOp(self.data + other.data, self.dims)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SuperOp):
            self._check(other)
            return SuperOp(self.data - other.data, self.dims)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return SuperOp(self.data * scalar, self.dims)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SuperOp):
            self._check(other)
            return SuperOp(self.data @ other.data, self.dims)
        if isinstance(other, Operator):
            if other.dims != self.dims:
                raise InvalidArgumentError(f"space mismatch: {self.dims} vs {other.dims}")
            return Operator((self.data @ other.data.reshape(-1)).reshape(other.shape), other.dims)
        return NotImplemented

    def apply(self, op: Operator) -> Operator:
        return self @ op


def vectorize(op) -> np.ndarray:
    m = op.data if isinstance(op, Operator) else np.asarray(op)
    return np.array(m, dtype=complex).reshape(-1)


def devectorize(v, dims=None) -> Operator:
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise InvalidArgumentError(f"vector length {v.size} is not a perfect square")
    return Operator(v.reshape(d, d), dims)


def left_action(op: Operator) -> SuperOp:
    return SuperOp(np.kron(op.data, np.eye(op.shape[0])), op.dims)


def right_action(op: Operator) -> SuperOp:
    return SuperOp(np.kron(np.eye(op.shape[0]), op.data.T), op.dims)


def sandwich(a: Operator, b: Operator | None = None) -> SuperOp:
    """Superoperator X -> A X B^dag (B defaults to A)."""
    b = a if b is None else b
    return SuperOp(np.kron(a.data, b.data.conj()), a.dims)


def dissipator(gamma: float, op: Operator) -> SuperOp:
    """gamma * (G X G^dag - {G^dag G, X}/2)."""
    if gamma < 0:
        raise InvalidArgumentError(f"rate must be non-negative, got {gamma}")
    g = op.data
    gg = g.conj().T @ g
    eye = np.eye(g.shape[0])
    m = np.kron(g, g.conj()) - 0.5 * np.kron(gg, eye) - 0.5 * np.kron(eye, gg.T)
    return SuperOp(gamma * m, op.dims)


@dataclass
class LindbladModel:
    """Hamiltonian plus (rate, jump operator) channels.

    Rates are kept separate from the operators: ``(g, G)`` is the channel
    ``g * D[G]``, equivalent to the unit-rate channel ``D[sqrt(g) * G]``.
    """

    H: Operator
    jumps: list[tuple[float, Operator]] = field(default_factory=list)

    def __post_init__(self):
        self.jumps = [(float(r), op) for r, op in self.jumps]
        for r, op in self.jumps:
            if r < 0:
                raise InvalidArgumentError(f"negative rate {r}")
            if op.dims != self.H.dims:
                raise InvalidArgumentError(f"jump operator on {op.dims}, Hamiltonian on {self.H.dims}")

    @property
    def dims(self):
        return self.H.dims

    @property
    def d(self) -> int:
        return self.H.shape[0]

    def validate(self):
        if not self.H.is_hermitian():
            raise InvalidArgumentError("Hamiltonian is not Hermitian")

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        """Direct evaluation of -i[H, rho] + sum_mu g_mu D[G_mu] rho."""
        h = self.H.data
        out = -1j * (h @ rho - rho @ h)
        for r, op in self.jumps:
            g = op.data
            gd = g.conj().T
            gg = gd @ g
            out += r * (g @ rho @ gd - 0.5 * (gg @ rho + rho @ gg))
        return out

    def scaled(self, factor: float) -> "LindbladModel":
        """Same Hamiltonian, every rate multiplied by ``factor``."""
        return LindbladModel(self.H, [(r * factor, op) for r, op in self.jumps])


def build_liouvillian(model: LindbladModel) -> SuperOp:
    model.validate()
    h = model.H.data
    eye = np.eye(h.shape[0])
    m = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    total = SuperOp(m, model.dims)
    for r, op in model.jumps:
        total = total + dissipator(r, op)
    return total


def trace_preservation_error(s: SuperOp, generator=False) -> float:
    """max |vec(1)^dag S - target|, target 0 for generators and vec(1)^dag for maps."""
    tr = vectorize(np.eye(s.d))
    row = tr.conj() @ s.data
    if not generator:
        row = row - tr.conj()
    return float(np.max(np.abs(row)))


def choi_matrix(s: SuperOp) -> np.ndarray:
    """sum_kl |k><l| (x) S(|k><l|)."""
    d = s.d
    t = s.data.reshape(d, d, d, d)  # [i, j, k, l] : (S X)_ij = sum S_ijkl X_kl
    return t.transpose(2, 0, 3, 1).reshape(d * d, d * d)


@dataclass
class MapReport:
    trace_error: float
    choi_min_eig: float
    hermiticity_error: float

    def is_valid(self, trace_tol=1e-10, psd_floor=-1e-8) -> bool:
        return self.trace_error <= trace_tol and self.choi_min_eig >= psd_floor


def check_quantum_map(s: SuperOp) -> MapReport:
    """Trace preservation and complete positivity (Choi test) of a map."""
    c = choi_matrix(s)
    herm = float(np.max(np.abs(c - c.conj().T)))
    lam = np.linalg.eigvalsh(0.5 * (c + c.conj().T))
    return MapReport(trace_preservation_error(s), float(lam.min()), herm)


# ---------------------------------------------------------------------------
# spectrum

@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    right: list[Operator]
    left: list[Operator]
    residuals: np.ndarray
    diagonalizable: bool
    condition: float
    dims: tuple[int, ...]
    # rows of the inverse eigenvector matrix, cached for projections
    _left_rows: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return len(self.eigenvalues)

    def zero_count(self, tol=ZERO_TOL) -> int:
        return int(np.sum(np.abs(self.eigenvalues) < tol))


def _normalize_right(vec, is_zero):
    m = vec.reshape(int(round(np.sqrt(vec.size))), -1)
    tr = np.trace(m)
    if is_zero and abs(tr) > 1e-10:
        return vec / tr
    vec = vec / np.linalg.norm(vec)
    k = np.argmax(np.abs(vec) > np.abs(vec).max() * (1 - 1e-9))
    return vec * np.exp(-1j * np.angle(vec[k]))


def _sort_key(lam, vec, decimals=9):
    entries = tuple(np.round(np.concatenate([vec.real, vec.imag]), decimals) + 0.0)
    return (round(abs(lam.real), decimals) + 0.0, round(lam.imag, decimals) + 0.0, entries)


def spectrum(L: SuperOp, max_dim=DENSE_DIM_LIMIT) -> Spectrum:
    """Full eigendecomposition, sorted by |Re lambda|, then Im, then entries."""
    if L.d > max_dim:
        raise CapabilityError(
            f"dense spectrum limited to d <= {max_dim} (superoperator side {max_dim ** 2}); got d = {L.d}"
        )
    try:
        lam, R = np.linalg.eig(L.data)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    is_zero = np.abs(lam) < ZERO_TOL * scale
    lam = np.where(is_zero, 0.0, lam)
    cols = [_normalize_right(R[:, j], is_zero[j]) for j in range(len(lam))]
    order = sorted(range(len(lam)), key=lambda j: _sort_key(lam[j], cols[j]))
    lam = lam[order]
    R = np.stack([cols[j] for j in order], axis=1)
    cond = float(np.linalg.cond(R))
    residuals = np.linalg.norm(L.data @ R - R * lam, axis=0)
    diagonalizable = bool(np.isfinite(cond) and cond <= COND_LIMIT)
    if diagonalizable:
        Linv = np.linalg.inv(R)
    else:
        logger.warning("eigenvector matrix condition number %.3g: suspected exceptional point", cond)
        Linv = np.linalg.pinv(R)
    dims = L.dims
    right = [Operator(R[:, j].reshape(L.d, L.d), dims) for j in range(R.shape[1])]
    # Tr[sigma_j^dag rho_k] = vec(sigma_j)^H vec(rho_k) = (Linv R)_jk
    left = [Operator(Linv[j].conj().reshape(L.d, L.d), dims) for j in range(R.shape[1])]
    return Spectrum(lam, right, left, residuals, diagonalizable, cond, dims, Linv)


def steady_states(L: SuperOp, tol=1e-9) -> list[Operator]:
    """Basis of ker L made of Hermitian operators.

    Elements that are valid density matrices come back as ``DensityMatrix``;
    traceless or indefinite kernel elements come back as plain ``Operator``.
    """
    d = L.d
    if d > DENSE_DIM_LIMIT:
        return [_steady_state_inverse_iteration(L)]
    u, s, vh = np.linalg.svd(L.data)
    scale = max(1.0, s[0]) if s.size else 1.0
    k = int(np.sum(s < tol * scale))
    if k == 0:
        raise NumericError(f"Liouvillian has no kernel (smallest singular value {s[-1]:.3g})")
    kernel = vh[-k:].conj()
    mats = [v.reshape(d, d) for v in kernel]
    herm = _hermitian_basis(mats)
    if len(herm) > 1:
        herm = _simplify_commuting(herm)
    out = []
    for m in herm:
        tr = np.trace(m).real
        if abs(tr) > 1e-8:
            m = m / tr
            if not density_matrix_violations(m, trace_tol=1e-8, herm_tol=1e-8):
                out.append(DensityMatrix(0.5 * (m + m.conj().T), L.dims, check=False))
                continue
        out.append(Operator(m, L.dims))
    return out


def _steady_state_inverse_iteration(L: SuperOp, iters=50) -> DensityMatrix:
    d = L.d
    shift = 1e-10 * max(1.0, float(np.abs(L.data).max()))
    lu = sla.lu_factor(L.data - shift * np.eye(d * d))
    v = vectorize(np.eye(d) / d)
    for _ in range(iters):
        w = sla.lu_solve(lu, v)
        w /= np.linalg.norm(w)
        if np.linalg.norm(w - v) < 1e-13:
            v = w
            break
        v = w
    m = v.reshape(d, d)
    m = m / np.trace(m)
    return DensityMatrix(0.5 * (m + m.conj().T), L.dims, check=False)


def _hermitian_basis(mats):
    """Real-linearly independent Hermitian matrices spanning the same complex space."""
    cands = []
    for m in mats:
        cands.append(0.5 * (m + m.conj().T))
        cands.append(0.5j * (m - m.conj().T))
    flat = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cands])
    q, r, piv = sla.qr(flat.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > 1e-9 * max(diag[0], 1e-300)))
    rank = min(rank, len(mats))
    return [cands[i] for i in piv[:rank]]


def _simplify_commuting(herm):
    """If the kernel elements commute, return a basis with disjoint supports."""
    for i in range(len(herm)):
        for j in range(i + 1, len(herm)):
            if np.max(np.abs(herm[i] @ herm[j] - herm[j] @ herm[i])) > 1e-9:
                return herm
    weights = np.sqrt(np.arange(2, len(herm) + 2, dtype=float))
    generic = sum(w * h for w, h in zip(weights, herm))
    _, U = np.linalg.eigh(generic)
    diags = []
    for h in herm:
        t = U.conj().T @ h @ U
        if np.max(np.abs(t - np.diag(np.diag(t)))) > 1e-8:
            return herm
        diags.append(np.diag(t).real)
    rows = _rref(np.array(diags))
    return [U @ np.diag(r) @ U.conj().T for r in rows]


def _rref(a, tol=1e-9):
    a = a.astype(float).copy()
    nrow, ncol = a.shape
    r = 0
    for c in range(ncol):
        if r == nrow:
            break
        p = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[p, c]) < tol:
            continue
        a[[r, p]] = a[[p, r]]
        a[r] /= a[r, c]
        for k in range(nrow):
            if k != r:
                a[k] -= a[k, c] * a[r]
        r += 1
    a[np.abs(a) < tol] = 0.0
    return a[:r]


def liouvillian_gap(s: Spectrum, tol=ZERO_TOL) -> float:
    """Smallest nonzero |Re lambda| (asymptotic decay rate)."""
    re = np.abs(s.eigenvalues.real)
    n_zero = int(np.sum(np.abs(s.eigenvalues) < tol))
    decaying = re[re > tol]
    if decaying.size == 0:
        raise NumericError("no decaying eigenvalue: every mode is stationary or purely oscillating")
    if n_zero > 1:
        warnings.warn(
            f"{n_zero}-fold degenerate zero eigenvalue; gap reported for the decaying sector only",
            RuntimeWarning,
            stacklevel=2,
        )
    return float(decaying.min())


def decompose(rho0: Operator, s: Spectrum) -> np.ndarray:
    """Coefficients c_j = Tr[sigma_j^dag rho0]."""
    if not s.diagonalizable:
        raise CapabilityError(
            f"spectrum is not diagonalizable (cond {s.condition:.3g}); possible exceptional point"
        )
    return s._left_rows @ vectorize(rho0)


def reconstruct(coeffs, s: Spectrum) -> Operator:
    d = s.right[0].shape[0]
    m = sum(c * r.data for c, r in zip(coeffs, s.right))
    return Operator(np.asarray(m).reshape(d, d), s.dims)


def spectral_evolve(rho0: Operator, s: Spectrum, t: float) -> DensityMatrix:
    c = decompose(rho0, s)
    R = np.stack([vectorize(r) for r in s.right], axis=1)
    v = R @ (c * np.exp(s.eigenvalues * t))
    d = s.right[0].shape[0]
    m = v.reshape(d, d)
    return DensityMatrix(0.5 * (m + m.conj().T), s.dims, check=False)


# ---------------------------------------------------------------------------
# symmetries

def _unitarity_error(V: Operator) -> float:
    return float(np.max(np.abs(V.data.conj().T @ V.data - np.eye(V.shape[0]))))


@dataclass
class SymmetryReport:
    strong: bool
    hamiltonian_norm: float
    jump_norms: list[float]


def check_strong_symmetry(model: LindbladModel, V: Operator, tol=1e-10) -> SymmetryReport:
    if _unitarity_error(V) > 1e-10:
        raise InvalidArgumentError("symmetry operator must be unitary")
    v = V.data
    hn = float(np.linalg.norm(model.H.data @ v - v @ model.H.data))
    jn = [float(np.linalg.norm(op.data @ v - v @ op.data)) for _, op in model.jumps]
    strong = hn < tol and all(x < tol for x in jn)
    return SymmetryReport(strong, hn, jn)


@dataclass
class WeakSymmetryBlocks:
    labels: np.ndarray  # eigenphase of U for each basis element |m><n| of V's eigenbasis
    sectors: list[np.ndarray]
    block_sizes: list[int]
    max_cross: float
    verified: bool
    basis: np.ndarray  # unitary whose columns are V's eigenvectors


def weak_symmetry_blocks(L: SuperOp, V: Operator, tol=1e-10) -> WeakSymmetryBlocks:
    """Group vectorized basis elements by eigenphase of U = V (x) V*."""
    if _unitarity_error(V) > 1e-10:
        raise InvalidArgumentError("symmetry operator must be unitary")
    U = np.kron(V.data, V.data.conj())
    comm = float(np.max(np.abs(L.data @ U - U @ L.data)))
    if comm > 1e-8:
        raise NotASymmetryError(f"[L, V (x) V*] has max entry {comm:.3g}")
    T, W = sla.schur(V.data, output="complex")
    phases = np.diag(T)
    WW = np.kron(W, W.conj())
    Lr = WW.conj().T @ L.data @ WW
    eig = np.outer(phases, phases.conj()).reshape(-1)
    labels = np.angle(eig)
    # group by eigenvalue on the unit circle, not by angle, to avoid the -pi/pi seam
    sectors = []
    assigned = np.full(eig.size, -1)
    for i in range(eig.size):
        if assigned[i] >= 0:
            continue
        members = np.where((assigned < 0) & (np.abs(eig - eig[i]) < 1e-8))[0]
        assigned[members] = len(sectors)
        sectors.append(members)
    cross = np.abs(Lr[assigned[:, None] != assigned[None, :]])
    max_cross = float(cross.max(initial=0.0))
    sizes = sorted((len(s) for s in sectors), reverse=True)
    return WeakSymmetryBlocks(labels, sectors, sizes, max_cross, max_cross <= tol, W)


def propagator(L: SuperOp, t: float) -> SuperOp:
    """exp(L t) by scaling and squaring."""
    return SuperOp(sla.expm(L.data * t), L.dims)


def kraus_superop(kraus: Sequence[Operator]) -> SuperOp:
    total = sandwich(kraus[0])
    for k in kraus[1:]:
        total = total + sandwich(k)
    return total


def identity_superop(dims) -> SuperOp:
    d = int(np.prod(dims))
    return SuperOp(np.eye(d * d), dims)


def liouvillian_matrix_element(model: LindbladModel, m, n, p, q) -> complex:
    """Tr[xi_(m,n)^dag L xi_(p,q)] computed from the Lindblad right-hand side."""
    d = model.d
    xi = np.zeros((d, d), dtype=complex)
    xi[p, q] = 1.0
    return complex(model.rhs(xi)[m, n])
