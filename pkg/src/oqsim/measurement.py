"""Projective and generalized (POVM) measurements."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from .algebra import DensityMatrix, Operator
from .errors import ImpossibleOutcomeError, InvalidArgumentError
from .superop import SuperOp, kraus_superop

ZERO_PROB = 1e-14


@dataclass
class PovmSet:
    """Measurement operators M_r keyed by outcome label, sum M_r^dag M_r = 1."""

    outcomes: list[tuple[Hashable, Operator]]

    def __post_init__(self):
        if not self.outcomes:
            raise InvalidArgumentError("a measurement needs at least one outcome")
        dims = self.outcomes[0][1].dims
        labels = [lab for lab, _ in self.outcomes]
        if len(set(labels)) != len(labels):
            raise InvalidArgumentError("duplicate outcome labels")
        if any(op.dims != dims for _, op in self.outcomes):
            raise InvalidArgumentError("measurement operators act on different spaces")

    @property
    def labels(self):
        return [lab for lab, _ in self.outcomes]

    @property
    def dims(self):
        return self.outcomes[0][1].dims

    def __getitem__(self, label) -> Operator:
        for lab, op in self.outcomes:
            if lab == label:
                return op
        raise KeyError(label)

    def superop(self) -> SuperOp:
        """The unread (averaged) measurement as a superoperator."""
        return kraus_superop([op for _, op in self.outcomes])


class ProjectiveSet(PovmSet):
    """POVM whose operators are orthogonal projectors."""


@dataclass
class PovmReport:
    completeness_error: float
    is_povm: bool
    hermiticity_error: float = np.nan
    idempotence_error: float = np.nan
    orthogonality_error: float = np.nan
    is_projective: bool = False
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def validate_povm(mset: PovmSet, tol=1e-10) -> PovmReport:
    ops = [op.data for _, op in mset.outcomes]
    d = ops[0].shape[0]
    comp = float(np.max(np.abs(sum(m.conj().T @ m for m in ops) - np.eye(d))))
    herm = max(float(np.max(np.abs(m - m.conj().T))) for m in ops)
    idem = max(float(np.max(np.abs(m @ m - m))) for m in ops)
    orth = 0.0
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            orth = max(orth, float(np.max(np.abs(ops[i] @ ops[j]))))
    projective = comp <= tol and max(herm, idem, orth) <= tol
    problems = []
    if comp > tol:
        problems.append(f"completeness violated by {comp:.3g}")
    if isinstance(mset, ProjectiveSet) and not projective:
        problems.append(
            f"not projective (hermiticity {herm:.3g}, idempotence {idem:.3g}, orthogonality {orth:.3g})"
        )
    return PovmReport(comp, comp <= tol, herm, idem, orth, projective, problems)


def outcome_probabilities(rho: Operator, mset: PovmSet) -> dict:
    return {
        lab: float(np.real(np.einsum("ij,ji->", op.data.conj().T @ op.data, rho.data)))
        for lab, op in mset.outcomes
    }


def apply_read(rho: Operator, mset: PovmSet, label) -> tuple[DensityMatrix, float]:
    """Post-measurement state for outcome ``label`` and its probability."""
    m = mset[label].data
    out = m @ rho.data @ m.conj().T
    p = float(np.real(np.trace(out)))
    if p <= ZERO_PROB:
        raise ImpossibleOutcomeError(f"outcome {label!r} has probability {p:.3g}")
    out = out / p
    return DensityMatrix(0.5 * (out + out.conj().T), rho.dims, check=False), p


def apply_unread(rho: Operator, mset: PovmSet) -> DensityMatrix:
    out = sum(op.data @ rho.data @ op.data.conj().T for _, op in mset.outcomes)
    return DensityMatrix(0.5 * (out + out.conj().T), rho.dims, check=False)


def sample_outcome(rho: Operator, mset: PovmSet, rng: np.random.Generator):
    probs = outcome_probabilities(rho, mset)
    labels = list(probs)
    p = np.clip(np.array([probs[k] for k in labels]), 0.0, None)
    k = int(np.searchsorted(np.cumsum(p) / p.sum(), rng.random(), side="right"))
    return labels[min(k, len(labels) - 1)]


def projective_from_observable(obs: Operator, decimals=10) -> ProjectiveSet:
    """Eigenprojectors of a Hermitian observable, labelled by eigenvalue."""
    w, v = np.linalg.eigh(obs.data)
    groups: dict[float, list[int]] = {}
    for i, x in enumerate(np.round(w, decimals) + 0.0):
        groups.setdefault(float(x), []).append(i)
    outcomes = []
    for val in sorted(groups, reverse=True):
        cols = v[:, groups[val]]
        outcomes.append((val, Operator(cols @ cols.conj().T, obs.dims)))
    return ProjectiveSet(outcomes)


def random_povm(dim: int, n_outcomes: int, rng: np.random.Generator) -> PovmSet:
    """M_r = K_r S^{-1/2} with S = sum K_s^dag K_s for Gaussian K_r."""
    ks = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(n_outcomes)]
    s = sum(k.conj().T @ k for k in ks)
    w, v = np.linalg.eigh(s)
    s_inv_sqrt = v @ np.diag(w ** -0.5) @ v.conj().T
    return PovmSet([(r, Operator(k @ s_inv_sqrt)) for r, k in enumerate(ks)])


def photodetector() -> PovmSet:
    """{|0><0|, |0><1|} on a single-photon Fock space (|0> first)."""
    return PovmSet([
        ("no_click", Operator([[1, 0], [0, 0]])),
        ("click", Operator([[0, 1], [0, 0]])),
    ])
