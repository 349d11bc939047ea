"""Partially open quantum tribaker map: resonances, quantum repeller and localization measures."""

__version__ = "0.1.0"

from .classical import ReflectivityConfig, baker_step, evolve_weighted, periodic_orbits
from .measures import intensity_histogram, measure_sweep, norm_ratio, sigma_measure
from .quantum import Ordering, QuantumMap, closed_map, fourier_kernel, open_map, opening_projector
from .repeller import Kind, PhaseDistribution, PhaseSpace, ResonanceProjector
from .spectral import NearDefectiveSpectrumError, ResonanceSet, decompose, longest_lived
from .torus import BoundaryPhases, PhaseGrid, TorusPoint, coherent_state, grid_points, quadrature
