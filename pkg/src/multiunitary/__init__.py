"""Search, verification and use of 2-unitary matrices and AME(4,d) states."""

from .tensor_core import (
    apply_local,
    flatten,
    partial_transpose,
    reshuffle,
    swap,
    unitarity_defect,
)
from .metrics import (
    entangling_power,
    gate_metrics,
    gate_typicality,
    operator_entanglement,
    schmidt_spectrum,
    two_unitarity_defect,
)

__version__ = "0.1.0"
