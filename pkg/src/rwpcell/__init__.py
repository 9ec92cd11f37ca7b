"""Random-waypoint mobility on the infinite plane, with handover and sojourn
analytics for hexagonal and Poisson-Voronoi cellular layouts."""

from .errors import (ConvergenceError, DivergenceError, DomainError, InputFileError,
                     InternalError, RwpError, SingularityError)
from .models import (ConstantPause, ConstantVelocity, LevyParams, MobilityParams, NoPause,
                     PowerLawPause, UniformVelocity, Window)
from .numerics import QuadSpec, RandomStream

__version__ = "0.1.0"
