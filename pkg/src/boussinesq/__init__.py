"""Pseudospectral solver and attractor diagnostics for a dissipative
Boussinesq system on the unit circle.

    u_t - u_txx - u_xx + w_x + u u_x = f,     w_t + (w u)_x - w_xx = 0,

with mean(u) = 0, mean(w) = 1 and w > 0.
"""

from .spectral import Field, Grid, derivative, helmholtz_solve, sobolev_norm
from .dynamics import SolverConfig, State, integrate, rhs, step
from .tangent import TangentState, e_inner, e_norm, tangent_step
from .dimension import lyapunov_spectrum, trace_sum, gram_determinant, dimension_estimate

__version__ = "0.1.0"

__all__ = [
    "Field", "Grid", "derivative", "helmholtz_solve", "sobolev_norm",
    "SolverConfig", "State", "integrate", "rhs", "step",
    "TangentState", "e_inner", "e_norm", "tangent_step",
    "lyapunov_spectrum", "trace_sum", "gram_determinant", "dimension_estimate",
]
