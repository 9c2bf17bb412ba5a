"""Exact penalty decomposition solvers for zero-norm sparse recovery."""

from .epd import EpdParams, SolverReport, default_params, epd_ideal, epd_practical, update_weights
from .linop import LinearOperator, dense_operator, partial_dct, partial_hadamard
from .metrics import nnzx, recovery_record, relerr_res, support_diagnostics
from .problems import ProblemInstance, add_noise, gen_caltech, gen_instance, gen_matrix, gen_signal
from .shrinkage import shrink

__version__ = "0.1.0"

__all__ = [
    "EpdParams", "SolverReport", "default_params", "epd_ideal", "epd_practical", "update_weights",
    "LinearOperator", "dense_operator", "partial_dct", "partial_hadamard",
    "nnzx", "recovery_record", "relerr_res", "support_diagnostics",
    "ProblemInstance", "add_noise", "gen_caltech", "gen_instance", "gen_matrix", "gen_signal",
    "shrink",
]
