"""Laboratory for the generalized Syracuse map T(n) = n/2, (a*n + b)/2."""

from .errors import SyracuseError
from .maps import (
    Caps,
    MapParams,
    Trajectory,
    divisibility_obstruction,
    iterate,
    new_map,
    step,
    trajectory,
    trivial_cycles,
)

__version__ = "0.1.0"
