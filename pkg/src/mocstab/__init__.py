"""Method-of-characteristics schemes for counter-propagating wave systems and their von Neumann stability."""

from .models import (
    ConstantSolution,
    CouplingModel,
    Family,
    GNSoliton,
    KinkSolution,
    linearize,
    model_by_name,
    solution_by_name,
)
from .schemes import FieldState, PeriodicGrid, SimulationReport, run_simulation
from .smallmat import ConvergenceError, QuadraticPencil, eigenvalues, quad_eigenvalues
from .vonneumann import SchemeKind, StabilityClass, SweepResult, classify_system, sweep

__all__ = [
    "ConstantSolution",
    "ConvergenceError",
    "CouplingModel",
    "Family",
    "FieldState",
    "GNSoliton",
    "KinkSolution",
    "PeriodicGrid",
    "QuadraticPencil",
    "SchemeKind",
    "SimulationReport",
    "StabilityClass",
    "SweepResult",
    "classify_system",
    "eigenvalues",
    "linearize",
    "model_by_name",
    "quad_eigenvalues",
    "run_simulation",
    "solution_by_name",
    "sweep",
]

__version__ = "0.1.0"
