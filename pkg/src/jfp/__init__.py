"""Jacobi fractional polynomial spectral methods for fractional integral equations."""

from .basis import JFPParams
from .fracint import FracIntMatrix, algorithm1, algorithm2, pseudo_stabilized
from .heatwave import PeriodicIC, evaluate_xt, fourier_decompose, solve_heatwave
from .mittag_leffler import ml_eval, ml_solution
from .precision import Irrational, PrecisionContext
from .solver import (FIEProblem, SideCondition, Reconstruction, Term, Unknown, evaluate, select_basis, solve,
                     solve_auto, solve_bordered)

__version__ = "0.1.0"

__all__ = [
    "JFPParams",
    "FracIntMatrix",
    "algorithm1",
    "algorithm2",
    "pseudo_stabilized",
    "PeriodicIC",
    "fourier_decompose",
    "solve_heatwave",
    "evaluate_xt",
    "ml_eval",
    "ml_solution",
    "Irrational",
    "PrecisionContext",
    "FIEProblem",
    "Term",
    "Unknown",
    "SideCondition",
    "Reconstruction",
    "select_basis",
    "solve",
    "solve_auto",
    "solve_bordered",
    "evaluate",
]
