"""pqlab: numerical laboratory for scalar variational problems with
(p,q)-growth.

Regularized convex minimization on uniform grids, discrete measurements of
the gradient a-priori estimates (Caccioppoli, higher integrability, Moser
exponent schedule, Lipschitz budget), exact-arithmetic admissibility
diagrams, and sigma-to-zero limit experiments.
"""

from .errors import (ConfigError, InvalidInputError, NonConvergenceError,
                     NumericalBlowupError, OutOfRangeError,
                     UnsupportedRegimeError)
from .integrand import (GrowthParams, GrowthReport, Integrand,
                        anisotropic_power, check_growth,
                        default_growth_samples, eval_integrand, hong,
                        quadratic, regularize)
from .mesh import (CutoffField, DiscreteField, Grid, build_cutoff, build_grid,
                   discrete_gradient, discrete_hessian, field_from_binary,
                   field_from_csv, field_to_binary, field_to_csv,
                   nodal_integral, w1p_norm)
from .solver import (BoundarySpec, MaxPrincipleReport, SolveConfig, Solution,
                     energy, max_principle_check, minimality_probe, minimize,
                     mollify_boundary)
from .estimates import (CaccioppoliReport, HigherIntegrabilityReport,
                        IterationBound, LipschitzBudget, MoserSchedule,
                        caccioppoli_report, higher_integrability_report,
                        integrability_bracket, iteration_lemma_bound,
                        lipschitz_budget, moser_schedule, sup_gradient)
from .phase_diagram import (Classification, QInterval, TableCell,
                            admissible_interval, check_table1, classify,
                            render_table, sharpness_region)
from .experiments import (ExperimentConfig, HongReport, RefinementReport,
                          SweepReport, config_from_dict, config_from_json,
                          run_caccioppoli_sweep, run_hong_experiment,
                          run_refinement_study, run_sigma_sweep)

__version__ = "0.1.0"
