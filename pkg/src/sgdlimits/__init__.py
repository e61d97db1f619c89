"""Online SGD in high dimension: finite-n simulators, limiting ODE/SDE systems and fixed points."""

from .core import (SummaryVec, Trajectory, RngStream, make_rng, interpolate, sup_distance,
                   read_trajectory_csv, write_trajectory_csv)
from .errors import (ConfigError, DegenerateFitError, DivergenceError, DomainError, RangeError,
                     SchemaError, SgdLimitsError)

__version__ = "0.1.0"
