"""Positive-cone decomposition of zero-boundary Sobolev functions on grid domains."""

from .bessel import (BesselMultiplier, TorusField, bessel_apply, bessel_invert, build_multiplier,
                     delta_probe, norm_equivalence_report, positive_part)
from .decompose import (DecompositionReport, HypothesisError, RunTolerances, ancona_decompose,
                        ancona_decompose_many, approximate_compact_support, interpolation_check,
                        majorant_piece, piece_norm_bound, seminorm_chain_report)
from .grid import (GridDomain, GridFunction, build_domain, distance_transform, gradient,
                   weighted_lp)
from .norms import NormBundle, SobolevParams, hardy_ratio, loc_norm, norm_bundle
from .whitney import (WhitneyCube, WhitneyDecomposition, build_cutoffs, cube_restrict,
                      overlap_count, whitney_decompose)

__version__ = "0.1.0"
