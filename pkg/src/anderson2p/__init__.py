"""Two-particle disordered lattice laboratory.

Finite-volume two-particle Hamiltonians with an IID site potential and a
short-range interaction; Green's functions; the multi-scale-analysis box
predicates (singularity, resonance, complete non-resonance,
non-tunnelling); scale/mass schedules with counters and deterministic
inductive steps; and seeded Monte Carlo estimation of the probabilistic
properties.
"""

__version__ = "0.1.0"

from .disorder import DistributionSpec, InteractionSpec, sample_potential
from .geometry import Box1, Box2, Point1, Point2
from .msa import ScaleSchedule, desk_schedule, asymptotic_schedule, schedule
from .operators import assemble_single_particle, assemble_two_particle, diagonalize

__all__ = [
    "__version__",
    "Box1",
    "Box2",
    "Point1",
    "Point2",
    "DistributionSpec",
    "InteractionSpec",
    "sample_potential",
    "ScaleSchedule",
    "schedule",
    "desk_schedule",
    "asymptotic_schedule",
    "assemble_single_particle",
    "assemble_two_particle",
    "diagonalize",
]
