"""Boundary-singular solutions of  Δu + u^p = 0  on cones and wedge-like domains."""

__version__ = "0.1.0"

from .errors import DomainError, SingconeError, SolverFailure
from .grid import CapStencil, GridSpec, cap_stencil, sphere_measure
from .cap_spectrum import (
    CapSpec,
    SpectralData,
    exponents,
    mazya_constant,
    moment,
    representation_residual,
    solve_cap_eigen,
)
from .profile import ProfileFn, cone_residual, near_critical_asymptote, solve_profile
from .heteroclinic import Heteroclinic, HeteroclinicParams, ode_params, solve_heteroclinic, verify_tail_rates
from .strip import (
    StripField,
    StripGrid,
    apply_Gp,
    assemble_Lp,
    default_grid,
    fixed_point_psi,
    forcing_M,
    nonlinearity_Q,
    phi_star,
)
from .solution import SingularSolution, assemble_u1, verify_asymptotics, weak_residual
from .family import EdgeFamilySpec, barrier_checks, build_family, wedge_residual
