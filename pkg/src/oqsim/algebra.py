"""Operators and states on finite tensor-product Hilbert spaces.

Basis conventions used throughout the package:

* bosonic modes use ascending Fock order ``|0>, |1>, ...`` truncated at a cutoff;
* qubits put the excited state first, ``|up> = |e>`` at index 0, so that
  ``sz = diag(+1, -1)`` and ``sm |up> = |down>``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_FLOOR = -1e-8


@dataclass(frozen=True)
class HilbertSpace:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise InvalidArgumentError(f"invalid tensor dimensions {self.dims!r}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.dims)


def _as_dims(dims) -> tuple[int, ...]:
    if isinstance(dims, HilbertSpace):
        return dims.dims
    if np.isscalar(dims):
        return (int(dims),)
    return tuple(int(d) for d in dims)


class Operator:
    """Dense square matrix tagged with its tensor-factor dimensions."""

    __slots__ = ("data", "dims")
    __array_priority__ = 100

    def __init__(self, data, dims=None):
        data = np.array(data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise InvalidArgumentError(f"operator must be square, got shape {data.shape}")
        dims = (data.shape[0],) if dims is None else _as_dims(dims)
        if int(np.prod(dims)) != data.shape[0]:
            raise InvalidArgumentError(
                f"dims {dims} do not match matrix side {data.shape[0]}"
            )
        self.data = data
        self.dims = dims

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.dims)

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims},\n{self.data!r})"

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "Operator"):
        if self.dims != other.dims:
            raise InvalidArgumentError(f"space mismatch: {self.dims} vs {other.dims}")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.data + other.data, self.dims)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.data - other.data, self.dims)
        return NotImplemented

    def __neg__(self):
        return Operator(-self.data, self.dims)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return Operator(self.data * scalar, self.dims)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if np.isscalar(scalar):
            return Operator(self.data / scalar, self.dims)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, Ket):
            if self.dims != other.dims:
                raise InvalidArgumentError(f"space mismatch: {self.dims} vs {other.dims}")
            return Ket(self.data @ other.data, self.dims, normalize=False)
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.data @ other.data, self.dims)
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.data.conj().T, self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def is_hermitian(self, tol=HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T), initial=0.0) <= tol)

    def allclose(self, other, atol=1e-12) -> bool:
        other = other.data if isinstance(other, Operator) else np.asarray(other)
        return bool(np.allclose(self.data, other, rtol=0.0, atol=atol))


class Ket:
    """State vector tagged with tensor-factor dimensions."""

    __slots__ = ("data", "dims")

    def __init__(self, data, dims=None, normalize=True):
        data = np.array(data, dtype=complex).reshape(-1)
        dims = (data.size,) if dims is None else _as_dims(dims)
        if int(np.prod(dims)) != data.size:
            raise InvalidArgumentError(f"dims {dims} do not match vector length {data.size}")
        if normalize:
            nrm = np.linalg.norm(data)
            if nrm == 0:
                raise InvalidArgumentError("cannot normalize the zero vector")
            data = data / nrm
        self.data = data
        self.dims = dims

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.dims)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"Ket(dims={self.dims}, {self.data!r})"

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def normalized(self) -> "Ket":
        return Ket(self.data, self.dims)

    def overlap(self, other: "Ket") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.data, other.data))

    def proj(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.data, self.data.conj()), self.dims, check=False)


def density_matrix_violations(matrix, trace_tol=TRACE_TOL, herm_tol=HERMITIAN_TOL,
                              psd_floor=PSD_FLOOR) -> list[str]:
    """Return human-readable reasons why ``matrix`` is not a density matrix."""
    m = np.asarray(matrix, dtype=complex)
    problems = []
    tr = np.trace(m)
    if abs(tr - 1.0) > trace_tol:
        problems.append(f"trace {tr.real:.12g}{tr.imag:+.3g}i != 1")
    herm_err = np.max(np.abs(m - m.conj().T), initial=0.0)
    if herm_err > herm_tol:
        problems.append(f"not Hermitian (max |rho - rho^dag| = {herm_err:.3g})")
    else:
        lam_min = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
        if lam_min < psd_floor:
            problems.append(f"negative eigenvalue {lam_min:.3g}")
    return problems


class DensityMatrix(Operator):
    """Operator validated to be Hermitian, unit-trace and positive semidefinite."""

    __slots__ = ()

    def __init__(self, data, dims=None, check=True, **tols):
        super().__init__(data, dims)
        if check:
            problems = density_matrix_violations(self.data, **tols)
            if problems:
                raise InvalidArgumentError("invalid density matrix: " + "; ".join(problems))

    @classmethod
    def from_ket(cls, ket: Ket) -> "DensityMatrix":
        return cls(np.outer(ket.data, ket.data.conj()), ket.dims, check=False)

    @classmethod
    def maximally_mixed(cls, dims) -> "DensityMatrix":
        dims = _as_dims(dims)
        n = int(np.prod(dims))
        return cls(np.eye(n) / n, dims, check=False)

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))


# constructors ---------------------------------------------------------------

def annihilation(cutoff: int) -> Operator:
    """Bosonic lowering operator on Fock states 0..cutoff."""
    if int(cutoff) < 1:
        raise InvalidArgumentError(f"cutoff must be >= 1, got {cutoff}")
    return Operator(np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1))


def creation(cutoff: int) -> Operator:
    return annihilation(cutoff).dag()


def number(cutoff: int) -> Operator:
    return Operator(np.diag(np.arange(cutoff + 1, dtype=float)))


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    # (sx + i sy)/2 and (sx - i sy)/2 with |up> at index 0
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
}


def pauli(axis: str) -> Operator:
    try:
        return Operator(_PAULI[axis])
    except KeyError:
        raise InvalidArgumentError(f"unknown Pauli axis {axis!r}") from None


def identity(dims) -> Operator:
    dims = _as_dims(dims)
    return Operator(np.eye(int(np.prod(dims))), dims)


def basis(dims, indices) -> Ket:
    """Product basis ket; ``indices`` gives one level per tensor factor."""
    dims = _as_dims(dims)
    indices = (indices,) if np.isscalar(indices) else tuple(indices)
    if len(indices) != len(dims) or any(not 0 <= i < d for i, d in zip(indices, dims)):
        raise InvalidArgumentError(f"basis indices {indices} invalid for dims {dims}")
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[np.ravel_multi_index(indices, dims)] = 1.0
    return Ket(v, dims, normalize=False)


def fock(cutoff: int, n: int) -> Ket:
    return basis((cutoff + 1,), (n,))


UP, DOWN = 0, 1


def tensor(*ops):
    """Kronecker product of operators (or kets) in the given order."""
    if len(ops) == 1 and isinstance(ops[0], (list, tuple)):
        ops = tuple(ops[0])
    if not ops:
        raise InvalidArgumentError("tensor() needs at least one factor")
    dims = tuple(d for op in ops for d in op.dims)
    data = reduce(np.kron, (op.data for op in ops))
    if all(isinstance(op, Ket) for op in ops):
        return Ket(data, dims, normalize=False)
    if any(isinstance(op, Ket) for op in ops):
        raise InvalidArgumentError("cannot mix kets and operators in tensor()")
    return Operator(data, dims)


def embed(op: Operator, site: int, dims) -> Operator:
    """Place ``op`` on tensor factor ``site`` with identities elsewhere."""
    dims = _as_dims(dims)
    if not 0 <= site < len(dims):
        raise InvalidArgumentError(f"site {site} out of range for dims {dims}")
    if op.shape[0] != dims[site]:
        raise InvalidArgumentError(
            f"operator of dimension {op.shape[0]} cannot act on factor of dimension {dims[site]}"
        )
    left = int(np.prod(dims[:site]))
    right = int(np.prod(dims[site + 1:]))
    data = np.kron(np.kron(np.eye(left), op.data), np.eye(right))
    return Operator(data, dims)


def partial_trace(rho: Operator, keep: Iterable[int]) -> Operator:
    """Trace out every factor not listed in ``keep``; kept order is preserved."""
    keep = sorted(set(int(k) for k in keep))
    dims = rho.dims
    n = len(dims)
    if not keep:
        raise InvalidArgumentError("keep must name at least one site")
    if keep[0] < 0 or keep[-1] >= n:
        raise InvalidArgumentError(f"keep {keep} out of range for {n} factors")
    letters = string.ascii_letters
    row = list(letters[:n])
    col = [row[i] if i not in keep else letters[n + i] for i in range(n)]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    t = rho.data.reshape(dims + dims)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    kept_dims = tuple(dims[i] for i in keep)
    side = int(np.prod(kept_dims))
    red = red.reshape(side, side)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(red, kept_dims, check=False)
    return Operator(red, kept_dims)


def expectation(op: Operator, state) -> complex:
    """<psi|O|psi> for kets, Tr[O rho] for operators."""
    if op.dims != state.dims:
        raise InvalidArgumentError(f"space mismatch: {op.dims} vs {state.dims}")
    if isinstance(state, Ket):
        return complex(np.vdot(state.data, op.data @ state.data))
    return complex(np.einsum("ij,ji->", op.data, state.data))


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def random_density_matrix(dim: int, rng: np.random.Generator, rank=None) -> DensityMatrix:
    """Ginibre-ensemble density matrix."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho), check=False)


def random_ket(dim: int, rng: np.random.Generator) -> Ket:
    return Ket(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def random_hermitian(dim: int, rng: np.random.Generator, scale=1.0) -> Operator:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Operator(scale * (g + g.conj().T) / 2)


def bell_states(dims: Sequence[int] = (2, 2)) -> dict[str, Ket]:
    """Psi+/- = (|e,g> +/- |g,e>)/sqrt(2) and Phi+/- on two qubits."""
    eg = basis(dims, (UP, DOWN)).data
    ge = basis(dims, (DOWN, UP)).data
    ee = basis(dims, (UP, UP)).data
    gg = basis(dims, (DOWN, DOWN)).data
    return {
        "psi+": Ket(eg + ge, dims),
        "psi-": Ket(eg - ge, dims),
        "phi+": Ket(ee + gg, dims),
        "phi-": Ket(ee - gg, dims),
    }
