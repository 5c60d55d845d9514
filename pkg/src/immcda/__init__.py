"""IMM tracking of a maneuvering intruder with conflict avoidance.

The package simulates a planar encounter between a reference aircraft
(fixed at the origin of the relative frame) and an intruder that switches
between straight flight and hard coordinated turns under a Markov chain.
An interacting-multiple-model estimator tracks the intruder from noisy
position fixes, short straight-line extrapolations of the estimate detect
predicted incursions into a protected circle, and a tangent-geometry
advisory steers the reference so the predicted track grazes the circle
instead of entering it.
"""

from .avoidance import (
    Advisory,
    ConflictPrediction,
    apply_avoidance,
    deflect_track,
    detect_conflict,
    escape_angle,
    predict_range,
    rotate_frame,
)
from .dynamics import (
    CRUISE_SPEED,
    MEASUREMENT_MATRIX,
    MEASUREMENT_NOISE_COV,
    PROCESS_NOISE_COV,
    SAFETY_RADIUS,
    SPAWN_RADIUS,
    TRANSITION_MATRIX,
    TURN_RATE_OFFSET,
    Mode,
    coordinated_turn_matrix,
    evolve_mode_distribution,
    measure,
    mode_matrix,
    noise_input_matrix,
    sample_next_mode,
    step_truth,
    validate_transition_matrix,
)
from .imm import (
    DegenerateMeasurementError,
    GaussianBelief,
    ImmBelief,
    ImmModel,
    ImmStepOutput,
    fuse_estimates,
    gaussian_likelihood,
    imm_step,
    initial_belief,
    kf_predict,
    kf_update,
    mix_initial_conditions,
    mixing_probabilities,
    update_mode_probabilities,
)
from .scenario import (
    EpisodeMetrics,
    EpisodeTrace,
    MonteCarloResult,
    ScenarioConfig,
    init_scenario,
    run_episode,
    run_monte_carlo,
)
from .traceio import (
    CSV_COLUMNS,
    RunManifest,
    load_config,
    make_manifest,
    read_episode_csv,
    read_summary_json,
    write_episode_csv,
    write_summary_json,
)

__version__ = "0.1.0"

__all__ = [
    "Advisory",
    "ConflictPrediction",
    "CRUISE_SPEED",
    "CSV_COLUMNS",
    "DegenerateMeasurementError",
    "EpisodeMetrics",
    "EpisodeTrace",
    "GaussianBelief",
    "ImmBelief",
    "ImmModel",
    "ImmStepOutput",
    "MEASUREMENT_MATRIX",
    "MEASUREMENT_NOISE_COV",
    "Mode",
    "MonteCarloResult",
    "PROCESS_NOISE_COV",
    "RunManifest",
    "SAFETY_RADIUS",
    "SPAWN_RADIUS",
    "ScenarioConfig",
    "TRANSITION_MATRIX",
    "TURN_RATE_OFFSET",
    "apply_avoidance",
    "coordinated_turn_matrix",
    "deflect_track",
    "detect_conflict",
    "escape_angle",
    "evolve_mode_distribution",
    "fuse_estimates",
    "gaussian_likelihood",
    "imm_step",
    "init_scenario",
    "initial_belief",
    "kf_predict",
    "kf_update",
    "load_config",
    "make_manifest",
    "measure",
    "mix_initial_conditions",
    "mixing_probabilities",
    "mode_matrix",
    "noise_input_matrix",
    "predict_range",
    "read_episode_csv",
    "read_summary_json",
    "rotate_frame",
    "run_episode",
    "run_monte_carlo",
    "sample_next_mode",
    "step_truth",
    "update_mode_probabilities",
    "validate_transition_matrix",
    "write_episode_csv",
    "write_summary_json",
]
