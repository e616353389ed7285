"""FFT-accelerated block lower-triangular Toeplitz operators.

Compact operators are ``(steps, sensors, sources)`` float64 arrays holding the
first block column. Space-time vectors are ``(spatial, steps)`` arrays in
space-outer-time-inner layout.
"""

from ._core import (
    DimensionError,
    FormatError,
    GridError,
    OrderingError,
    SolverError,
    SpectralOperator,
    apply_arithmetic_intensity,
    assemble_compact_p2o,
    cg_solve,
    comm_cost,
    conventional_cost_estimate,
    distributed_adjoint,
    distributed_forward,
    make_advection_diffusion_fixture,
    modified_cost,
    naive_apply_adjoint,
    naive_apply_forward,
    read_operator,
    read_vector,
    select_grid,
    setup,
    simulate_forward,
    toeplitz_matvec,
    verify,
    weak_scaling_shape,
    write_operator,
    write_vector,
)

__all__ = [
    "DimensionError",
    "FormatError",
    "GridError",
    "OrderingError",
    "SolverError",
    "SpectralOperator",
    "apply_arithmetic_intensity",
    "assemble_compact_p2o",
    "cg_solve",
    "comm_cost",
    "conventional_cost_estimate",
    "distributed_adjoint",
    "distributed_forward",
    "make_advection_diffusion_fixture",
    "modified_cost",
    "naive_apply_adjoint",
    "naive_apply_forward",
    "read_operator",
    "read_vector",
    "select_grid",
    "setup",
    "simulate_forward",
    "toeplitz_matvec",
    "verify",
    "weak_scaling_shape",
    "write_operator",
    "write_vector",
]
