"""Clock synchronization lab: stochastic clock model, Kalman filters,
spatial smoothing and a discrete-event protocol simulator."""

from ._clocksync import *  # noqa: F401,F403
from ._clocksync import ConfigError, __doc__  # noqa: F401

__version__ = "0.1.0"
