"""Object-level relocalization by clustering pairwise association hypotheses."""
from .association import (
    AssociationPool,
    AssociationSet,
    ClusterParams,
    canonical_score,
    cluster_epoch,
    cross_pairs,
    decide,
    init_singletons,
    merge_metric,
    top_k,
    try_merge,
    update,
)
from .estimator import ObjectRelocalizer, check_object_map
from .exceptions import (
    DegenerateConfigurationError,
    InconsistentPoolError,
    InfeasibleSpecError,
    InsufficientCorrespondencesError,
    InvalidArgumentError,
    ObjlocError,
    OracleTooLargeError,
    SchemaError,
)
from .maps import (
    ObjectMap,
    ObjectRecord,
    Pose,
    descriptor_distance,
    load_scene,
    make_map,
    pairwise_distance,
    save_scene,
)
from .pose import PoseEstimate, estimate_pose, is_success, pose_error
from .sim import (
    DynamicSpec,
    ObservationSpec,
    SceneSpec,
    TrialResult,
    derive_observation,
    generate_scene,
    make_dynamic,
    oracle_best_matching,
    run_sweep,
    run_trials,
)

__version__ = "0.1.0"
