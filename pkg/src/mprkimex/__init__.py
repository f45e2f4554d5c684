"""Conservative multirate explicit Runge-Kutta schemes with one implicit stage."""

from .stability import r_implicit_closed_form, r_numeric, scan_region
from .stage_solver import SolverConfig, solve_stage
from .stepper import RunReport, StepperState, Verdict, integrate, step
from .system import PartitionMap, Region, SplitSystem, validate_partition
from .tableau import (
    MultirateScheme,
    Tableau,
    Variant,
    augment_implicit,
    build_fast,
    build_slow,
    check_order_conditions,
    heun,
    make_scheme,
    telescope,
    validate_tableau,
)

__version__ = "0.1.0"
