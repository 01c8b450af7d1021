"""gaitforge: displacement-maximizing gaits for planar three-link swimmers.

Two independent routes to the same optimum: variational shooting on the
Pontryagin necessary conditions (``gaitforge.pmp``) and zero contours of the
connection's height function (``gaitforge.geometry``), cross-validated against
exact line-integral simulation (``gaitforge.simulate``).
"""

from . import errors
from .models import (
    BodyPose,
    BodyVelocity,
    PerfectFluidParams,
    PurcellParams,
    ShapePoint,
    SwimmerModel,
    perfect_fluid_model,
    purcell_model,
)

__all__ = [
    "errors",
    "BodyPose",
    "BodyVelocity",
    "PerfectFluidParams",
    "PurcellParams",
    "ShapePoint",
    "SwimmerModel",
    "perfect_fluid_model",
    "purcell_model",
]

__version__ = "0.1.0"
