"""matchcast: football event-intensity models, simulation and live forecasts."""

__version__ = "0.1.0"

from .core import EventType, MatchEvent, MatchRecord, MatchState, clock_time  # noqa: F401
from .regressors import (  # noqa: F401
    LinearConstraint,
    ModelSpec,
    ParameterVector,
    RegressorSpec,
    make_named_model,
)
