//! Cervical posture assessment toolkit.
//!
//! Rotation conversions and clinical score mapping, a seeded synthetic pose
//! generator with an exact-geometry mask renderer, a calibrated lateral
//! shift estimator, rater agreement statistics, protocol analytics and the
//! state machine behind the rating-study service.

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod avatar;
pub mod dataset;
pub mod jsonl;
pub mod protocol;
pub mod rotation;
pub mod sampler;
pub mod shift;
pub mod stats;
pub mod study;
pub mod twstrs;

pub use avatar::{analytic_head_offset, render_mask, FigureParams, Keypoints, LabeledMask, Point, RenderError};
pub use protocol::{
    asymmetry, build_timeline, summarize, Asymmetry, FramePrediction, ProtocolError, ProtocolTask, TaskKind,
    TaskSummary, Timeline,
};
pub use rotation::{
    compose_head_neck, euler_to_matrix, matrix_to_euler, sixd_to_matrix, EulerAngles, RotationError, RotationMatrix,
    SixDRep,
};
pub use sampler::{
    generate_dataset, shift_to_opposing_angles, CervicalPose, GroundTruthLabel, SamplerConfig, SamplerError,
    ShiftDistribution,
};
pub use shift::{
    calibrate, geometric_shift_feature, preprocess, select_threshold, CalibrationModel, PreprocessedMask, ShiftError,
    ShiftModel,
};
pub use stats::{
    bootstrap_alpha_ci, krippendorff_alpha, pearson_r, AgreementResult, DistanceMetric, ImageKind, RatingMatrix,
    RatingRecord, StatsError,
};
pub use study::{Study, StudyError, StudyManifest};
pub use twstrs::{angles_to_twstrs, Item, SagittalDirection, TwstrsAssessment};
