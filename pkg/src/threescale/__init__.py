"""Geometric and numerical analysis of a three-timescale predator-prey food chain."""
from .model import (AssumptionWarning, DimensionalParams, Equilibrium, Frame, Params,
                    Scales, State, equilibria, jacobian, nondimensionalize, paper_params,
                    phi, chi, psi, vector_field)

__version__ = "0.1.0"
