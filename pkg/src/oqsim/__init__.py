"""Open quantum system toolkit: Lindblad dynamics, Liouvillian spectra,
measurements, quantum trajectories and error-correction analysis."""

__version__ = "0.1.0"

from .algebra import (  # noqa: F401
    DensityMatrix,
    HilbertSpace,
    Ket,
    Operator,
    annihilation,
    basis,
    creation,
    embed,
    expectation,
    fock,
    identity,
    number,
    partial_trace,
    pauli,
    tensor,
)
from .superop import LindbladModel, SuperOp, build_liouvillian, spectrum, steady_states  # noqa: F401
