"""Subframework-based rigidity analysis and maintenance for multi-robot networks."""

from .graphs import (
    UNREACHABLE,
    GeodesicTable,
    Graph,
    GraphDisconnectedError,
    bfs_distances,
    diameter,
    disk_proximity_graph,
    eccentricity,
    is_connected,
    laplacian_matrix,
)
from .rigidity import (
    REL_TOL,
    Framework,
    FrameworkTooSmallError,
    RigidityReport,
    diameter_bound_certificate,
    diameter_eigenvalue_bound,
    energy,
    is_infinitesimally_rigid,
    rigid_body_dim,
    rigidity_eigenpair,
    rigidity_matrix,
    rigidity_report,
    strains,
    symmetric_rigidity_matrix,
    trivial_motion_basis,
)
from .subframeworks import (
    ExtentAssignment,
    LoadReport,
    Subframework,
    communication_load,
    extent_assignment,
    extract_subframework,
    inclusion_group,
    rigidity_extent,
    verify_extents,
)
from .control import (
    ControlParams,
    ControlState,
    RigidityLostError,
    build_control_state,
    collision_gradient_all,
    collision_potential,
    control_step,
    edge_weight,
    guarded_refresh,
    load_gradient_all,
    load_potential,
    refresh_topology,
    rigidity_gradient_all,
    rigidity_potential,
    total_potential,
    velocity_field,
)
from .localization import (
    FilterState,
    anchor_update,
    congruence_error,
    filter_update,
    inflate_covariance,
    make_filters,
    predict_ranges,
    range_jacobian,
    run_static_filter,
)
from .simnet import (
    Message,
    ProtocolViolation,
    RoundLog,
    World,
    WorldConfig,
    broadcast_estimates,
    decentralized_velocity,
    make_world,
    run_exchange_phase,
    run_simulation,
    step_simulation,
)
from .experiments import (
    ConfigError,
    ScenarioConfig,
    framework_from_json,
    framework_to_json,
    generate_scenario,
    network_record,
    reference_control_config,
    run_control_experiment,
    run_ensemble_experiment,
)

__version__ = "0.1.0"
