"""Fixed points, gradient flows and holonomy limits on cyclic ALE quiver varieties."""

from .group_rep import (CyclicGroupContext, GroupElement, InvalidOrderError,
                        character_projector, irrep_vector, make_group, regular_rep)
from .quiver import (GaugeElement, QuiverPoint, SingularGaugeError, ZetaLevel,
                     circle_act, default_zeta, embed_matrices, flatness_residual,
                     full_moment_maps, gauge_act, j_action, moment_map_complex,
                     moment_map_real, morse_value, zeta_from_params)
from .fixed_points import (AmbiguousClassificationError, CapacityError,
                           DegenerateZetaError, EdgeTag, FixedPointRecord,
                           NoWeightAssignmentError, brute_force_fixed_points,
                           classify_index, enumerate_fixed_points, family_point,
                           records_equivalent, weight_vector)
from .flow import (FlowDirectionError, FlowTrajectory, InconsistentParametersError,
                   NumericForm, ProjectionFailureError, flow_vector, numeric_flow,
                   phase_rotate_trajectory, project_to_level, sample_at_morse,
                   solve_xi, trajectory_residuals, write_trajectory_csv,
                   z2_closed_form_flow, z3_closed_form_flow)
from .holonomy import (BasePoint, DegenerateChordError, HolonomyRep,
                       MagnitudeError, NotFlatError, ShapeError, cyclic_matrix_exp,
                       dense_matrix_exp, group_loop, holonomy, holonomy_exponent,
                       holonomy_rep, parallel_transport_ode, spectrum_check,
                       transport_path)
from .intertwiner import (IntertwinerTrace, NoIntertwinerError, NotAProjectorError,
                          build_intertwiner_trace, canonical_gauge, closed_form_P_z2,
                          closed_form_P_z3, intertwining_residual, limit_estimate,
                          match_irrep, renormalize, schur_intertwiner,
                          verify_conjecture)

__version__ = "0.1.0"
