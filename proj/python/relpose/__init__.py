"""Geometry-aware siamese 6DOF pose regression toolkit (python surface).

Everything is implemented in the C++ core; this package re-exports the
pybind11 module.
"""

from ._relpose import (  # noqa: F401
    AblationRow,
    Combination,
    EncoderConfig,
    Frame,
    Model,
    ModelConfig,
    Pairing,
    Pose,
    Position,
    Quaternion,
    RelativePose,
    RelposeError,
    Scene,
    SceneResult,
    SuiteEntry,
    SynthSceneConfig,
    TrainConfig,
    TrainReport,
    TrainingPairSpec,
    angular_error_deg,
    average_over_scenes,
    canonicalize_hemisphere,
    combination_from_string,
    combination_to_string,
    evaluate,
    generate_synth_scene,
    is_unit,
    load_7scenes_poses,
    load_cambridge_poses,
    load_scene_jsonl,
    mean_aliased_feature_distance,
    mean_pair_descriptor_distance,
    median,
    pair_next,
    pair_random,
    position_error_m,
    quat_conjugate,
    quat_dot,
    quat_multiply,
    quat_norm,
    quat_normalize,
    relative_pose,
    run_ablation,
    run_gradcheck_suite,
    test_split,
    train,
    train_split,
    write_7scenes_poses,
    write_cambridge_poses,
    write_scene_jsonl,
)

__all__ = [name for name in dir() if not name.startswith("_")]
