"""Linear finite element schemes for the Landau-Lifshitz-Bloch equation."""
from .mesh import (Mesh, Prolongation, fichera_mesh, interval_mesh, l_shape_mesh, make_mesh, mesh_size,
                   refine_uniform, unit_cube_mesh, unit_square_mesh)
from .scheme import SchemeParams, SimState, TimeGrid, init_state, run, step, step_with_forcing

__all__ = [
    "Mesh", "Prolongation", "SchemeParams", "SimState", "TimeGrid",
    "fichera_mesh", "init_state", "interval_mesh", "l_shape_mesh", "make_mesh", "mesh_size",
    "refine_uniform", "run", "step", "step_with_forcing", "unit_cube_mesh", "unit_square_mesh",
]

__version__ = "0.1.0"
