//! Separating-plane geometry, orientation codes and analytically synthesized
//! feed-forward classifiers, with a backprop trainer and metrics for comparing
//! the two.

pub mod datasets;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod orientation;
pub mod planner;
pub mod runtime;
pub mod synthesis;
pub mod trainer;

pub use datasets::{
    canonical_planes, class_of_signs, generate_level_r, nested_clusters, LabeledDataset,
    NestedCubeSpec, Sample,
};
pub use error::{Error, Result};
pub use geometry::{
    cluster_margin, fit_plane_through_midpoints, perpendicular_bisector, plane_side,
    ClusterSummary, Hyperplane, PointN, Side,
};
pub use metrics::{
    centroid_accuracy, evaluate_accuracy, kcr_pew, op_count_report, score_architecture,
    ArchitectureScore, KcrPew, OpCountReport,
};
pub use orientation::{
    code_dot, orientation_of_cluster, orientation_of_point, plane_list_hash, verify_separation,
    OrientationCode, SeparationReport,
};
pub use planner::{estimate_plane_count, incremental_separate, PlannerConfig, PlannerTrace};
pub use runtime::{Activation, ActivationKind, FeedForwardNet, Layer, Prediction};
pub use synthesis::{synthesize_three_layer, CollectionKind, SynthesisInput};
pub use trainer::{init_weights, numeric_gradient_check, train_backprop, TrainConfig, TrainReport};
