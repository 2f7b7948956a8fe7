"""robinlab: numerical potential theory on finitely connected planar domains.

Computes grounded-boundary (Robin-type) harmonic fields, their radii and
capacities, generalized condenser capacities with their two-term small-plate
asymptotics, and runs a catalog of conformal distortion checks against
closed-form references.
"""

__version__ = "0.1.0"

from . import oracles  # noqa: F401
