"""Preperiodic points, escape-rate potentials and bifurcation measures
for one-parameter families of rational maps of the projective line."""
from .exact import GaussianRational, ParamPolynomial
from .family import (
    DegenerateFiber,
    FamilyError,
    FiberMap,
    IterationCapExceeded,
    MapFamily,
    MarkedPoint,
    iterate_marked,
    specialize,
)
from .green import GreenValue, GridPotential, NonConvergence, green_value, marked_potential_grid, product_potential_grid
from .measures import DiscreteMeasure, RankVerdict, box_discrepancy, ddc, empirical_measure, phi_rank_marked, total_mass
from .preperiodic import (
    CommonPrep,
    PersistentlyPreperiodic,
    PrepEquation,
    common_preperiodic,
    is_persistently_preperiodic,
    orbit_return_distance,
    preperiodic_points_map,
    prep_equation,
    solve_parameters,
)
from .descriptor import DescriptorError, builtin_family, load_family, parse_descriptor
from .experiments import (
    ExperimentReport,
    run_common_prep_table,
    run_double_mandelbrot,
    run_simultaneous_prep,
    run_stability_dichotomy,
    run_unicritical_pcf_density,
)

__version__ = "0.1.0"
