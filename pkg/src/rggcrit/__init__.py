"""Critical radii of random geometric graphs over unit-volume regions.

Closed-form critical-radius formulas and Gumbel limits on the theory side;
exact simulation of the minimum-degree and k-connectivity critical radii on
the empirical side, with Monte Carlo and quadrature diagnostics tying the
two together.
"""

from .errors import (
    AdjacentPairError,
    DegenerateInstanceError,
    DomainError,
    RegimeError,
)
from .geometry import (
    Region,
    VolumeEstimate,
    ball_region_volume,
    ball_volume,
    distance_to_boundary,
    lens_volume,
    sample_uniform,
    segment_volume,
    shadow_lower_bound,
    shadow_volume_exact,
    surface_area,
)

__version__ = "0.1.0"
