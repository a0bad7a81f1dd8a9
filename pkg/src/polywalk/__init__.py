"""Sampling and exact statistics for closed, confined, and open fixed-edgelength random walks."""

__version__ = "0.1.0"

from .geometry import (Polygon, as_edge_lengths, edge_vectors, total_curvature,
                       chord_length, z_width, closure_defect, read_polygons,
                       write_polygons)
from .triangulation import Triangulation, fan, spiral, teeth, random_triangulation
from .polytopes import (HPolytope, hyperbox, fan_polytope, confined_fan_polytope,
                        slab_polytope, half_space_polytope, triangulation_polytope,
                        rejection_sample, rejection_volume_estimate, centroid_estimate)
from .action_angle import (ActionAngle, ArmCoordinates, ActionAngleChart,
                           build_arm, build_polygon, recover_coordinates,
                           permute_edges)
from .samplers import (McmcConfig, ChainState, ChainRunner, RunResult,
                       hit_and_run_step, moment_polytope_step, dihedral_step,
                       tsmcmc_step, permutation_step, ptsmcmc_step,
                       start_unconfined, start_confined, run_chain,
                       make_observable, make_rng, spawn_rngs,
                       sample_arms_direct, run_arm_chain)
from .mcmc_stats import IpsSummary, autocovariance, ips_variance, confidence_interval
from .knots import (KnotDiagram, Crossing, generic_projection, knot_determinant,
                    polygon_determinant, is_knotted_hexagon,
                    dihedral_octant_indicator)
from . import closed_forms
