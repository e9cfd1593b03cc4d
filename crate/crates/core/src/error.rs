use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid flow parameters: {0}")]
    Params(String),

    #[error("curve {curve} is not regular at node {node} (|x'| = {speed:e})")]
    NonRegular { curve: usize, node: usize, speed: f64 },

    #[error("incidence mismatch: {0}")]
    Incidence(String),

    #[error("junction {junction}: incident curve ends disagree by {gap:e}")]
    JunctionMismatch { junction: usize, gap: f64 },

    #[error("junction {junction} is degenerate (det M = {det_m:e})")]
    DegenerateJunction { junction: usize, det_m: f64 },

    #[error("step failed at t = {time} after {halvings} halvings: {reason}")]
    StepFailure {
        time: f64,
        halvings: usize,
        reason: String,
    },

    #[error("regularity lost on curve {curve}: min |x'| = {min_speed:e}")]
    RegularityLoss { curve: usize, min_speed: f64 },

    #[error("explicit step unstable: {0}")]
    Unstable(String),

    #[error("states are not on the same parametrization grid")]
    GridMismatch,

    #[error("reparametrization failed: {0}")]
    Reparametrization(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("scene error at `{path}`: {message}")]
    Scene { path: String, message: String },

    #[error("unsupported scene schema version {0}")]
    UnsupportedSchema(u32),

    #[error("unknown built-in scene `{0}`")]
    UnknownScene(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
