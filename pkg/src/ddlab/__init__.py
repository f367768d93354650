"""ddlab: a numerical laboratory for dissipative diffeomorphisms of the disc.

The lab studies the orientation-preserving Henon family f(x, y) =
(x^2 + c + y, -b x) and smooth extensions of interval endomorphisms:
periodic orbit census and classification, invariant manifolds, certified
trapping discs and their nested cascades, dissipation and entropy
diagnostics, and a reproducible command-line front end.
"""

from . import errors
from .dissipation import (EntropyEstimate, PesinConstants, curve_growth_estimate,
                          entropy_estimate, gamma_dissipation_check,
                          pesin_constants, pesin_constants_from,
                          separated_orbit_estimate, small_jacobian_constants)
from .geometry import (Polygon, Polyline, SeparationVerdict, contains,
                       contains_many, curve_separates, hausdorff,
                       parallel_triple, resample_polyline, signed_area,
                       split_region)
from .manifolds import (AccumulationSet, ChainGraph, CurveSegment,
                        DecorationVerdict, accumulation_set, build_chain_graph,
                        contracted_direction, contracted_directions,
                        curves_to_csv, decoration_test, grow_stable,
                        grow_unstable, mild_dissipation_test, saddle_frame,
                        stable_curve_through, stable_curves_through,
                        stable_spanning_curve)
from .maps import (EscapeCones, Extension1DMap, HenonMap, IteratedMap,
                   OrbitSample, PlaneMap, Rectangle, SampledEndomorphism,
                   orbit_differential)
from .orbits import (CensusDiagnostics, LefschetzReport, OrbitRecord,
                     OrbitType, classify, closing_scan, find_periodic,
                     henon_fixed_points, lefschetz_sum, orbits_to_csv,
                     refine_periodic)
from .renorm import (PeriodSetSummary, QuadritomieVerdict, ReductionDomain,
                     RenormNode, TrapCertificate, assemble_pixton_disc,
                     cascade, certify_trap, escape_cones, find_trapped_disc,
                     odometer_itinerary, period_set_summary, quadritomie,
                     reduction_domain, reduction_fixed_points,
                     reduction_lefschetz, reverify, root_trap)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
