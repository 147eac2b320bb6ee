"""Simulator for a regularized Cahn-Hilliard system perturbed by a maximal
monotone operator, with sliding-mode control experiments."""

from .field import Field, Grid
from .graphs import HilbertOperator, MonotoneGraph, SmoothPerturbation
from .kernels import BACKEND_NAME
from .stepper import ModelParams, SimState, prepare_initial_state, run, step

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "Field",
    "Grid",
    "HilbertOperator",
    "ModelParams",
    "MonotoneGraph",
    "SimState",
    "SmoothPerturbation",
    "prepare_initial_state",
    "run",
    "step",
]
