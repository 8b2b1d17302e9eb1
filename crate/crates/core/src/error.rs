use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("hyperplane normal is zero")]
    ZeroNormal,

    #[error("midpoint system is singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("midpoint plane residual {residual:e} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },

    #[error("fitted plane does not separate pair {pair_index}")]
    SeparationFailed { pair_index: usize },

    #[error("plane {plane_index} cuts cluster {cluster_id} (clearance {clearance})")]
    CutCluster {
        cluster_id: usize,
        plane_index: usize,
        clearance: f64,
    },

    #[error("clusters share orientation codes: {groups:?}")]
    DuplicateCodes { groups: Vec<Vec<usize>> },

    #[error("cluster {cluster_id} has class label {label} but only {class_count} classes exist")]
    ClassOutOfRange {
        cluster_id: usize,
        label: usize,
        class_count: usize,
    },

    #[error("non-finite value in layer {layer}")]
    NonFinite { layer: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("network contains a non-differentiable unit_step layer ({layer})")]
    NotDifferentiable { layer: usize },

    #[error("plane budget of {max_planes} exceeded")]
    MaxPlanesExceeded { max_planes: usize },

    #[error("could not separate clusters {a} and {b} without cutting another cluster")]
    Unresolvable { a: usize, b: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
