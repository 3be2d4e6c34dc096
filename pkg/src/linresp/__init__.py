"""SRB measures and linear response for piecewise expanding unimodal maps."""

from . import catalog
from .bvspaces import GridFunction, bvp_norm, sup_norm, var_p, var_p_bruteforce
from .catalog import SmoothFunction
from .conjugacy import (HolderEstimate, TCESolution, holder_norm,
                        horizontality_defect, solve_tce_pullback,
                        solve_tce_second_order, solve_tce_series)
from .density import (DensityDecomposition, heaviside_jump, saltus_derivative,
                      srb_density)
from .maps import (CriticalOrbit, MapFamily, PiecewiseExpandingMap,
                   critical_orbit, evaluate, family_map, inverse_branches,
                   skew_tent, tent_map)
from .response import (ResponseReport, birkhoff_average, ccclaim_check,
                       fit_l1_exponent, integral_psi_dmu_t,
                       pressure_derivative, response_finite_difference,
                       response_formula, tangent_pair_l1_distance)
from .transfer import (SpectralData, TransferOperator, build_operator,
                       derivative_operator, leading_spectrum, resolvent_solve,
                       weighted_operator)

__version__ = "0.1.0"
