"""Variable-frequency AC optimal power flow."""

from .ipm import IpmOptions, IpmResult
from .model import OpfModel
from .solver import (
    OpfProblem,
    OpfSolution,
    SolverOptions,
    SweepRow,
    TransferResult,
    frequency_sweep,
    max_transfer,
    max_transfer_sweep,
    regime_breakpoints,
    solve_opf,
    sweep_csv,
    transfer_csv,
    variable_frequency_solve,
)

__all__ = [
    "IpmOptions",
    "IpmResult",
    "OpfModel",
    "OpfProblem",
    "OpfSolution",
    "SolverOptions",
    "SweepRow",
    "TransferResult",
    "frequency_sweep",
    "max_transfer",
    "max_transfer_sweep",
    "regime_breakpoints",
    "solve_opf",
    "sweep_csv",
    "transfer_csv",
    "variable_frequency_solve",
]
