"""Controlled stochastic Landau–Lifshitz–Bloch dynamics with Marcus-type jump noise."""

from .control import (
    AdditiveForcing,
    ControlGrid,
    ControlProblem,
    CostSpec,
    KappaWeight,
    OrdinaryControl,
    StateScaledForcing,
    YoungMeasure,
    monte_carlo_cost,
)
from .dynamics import PhysicalConstants, llb_drift
from .grid import Field, Grid, norm
from .integrator import SimConfig, SimulationError, Trajectory, simulate
from .levy import AtomicMeasure, PowerLawMeasure, UniformMeasure, sample_prm
from .marcus import MaterialField, G_op, H_op, b_op, phi
from .optimize import OptimizerConfig, cross_entropy_minimize, project_to_dirac

__all__ = [
    "AdditiveForcing",
    "AtomicMeasure",
    "ControlGrid",
    "ControlProblem",
    "CostSpec",
    "Field",
    "G_op",
    "Grid",
    "H_op",
    "KappaWeight",
    "MaterialField",
    "OptimizerConfig",
    "OrdinaryControl",
    "PhysicalConstants",
    "PowerLawMeasure",
    "SimConfig",
    "SimulationError",
    "StateScaledForcing",
    "Trajectory",
    "UniformMeasure",
    "YoungMeasure",
    "b_op",
    "cross_entropy_minimize",
    "llb_drift",
    "monte_carlo_cost",
    "norm",
    "phi",
    "project_to_dirac",
    "sample_prm",
    "simulate",
]
