use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("intensity must be positive, got {0}")]
    InvalidIntensity(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time window [{from}, {to}) is not ordered or lies outside the grid")]
    InvalidWindow { from: f64, to: f64 },

    #[error("point {point} already belongs to the chain (disjoint union violated)")]
    DisjointUnion { point: usize },

    #[error("chain enumeration needs {required} states, budget is {limit}")]
    ChainBudget { required: u128, limit: u128 },

    #[error("subset enumeration over {size} points exceeds the limit of {limit}")]
    SubsetBudget { size: usize, limit: usize },

    #[error("fiber mismatch: {0}")]
    FiberMismatch(String),

    #[error("per-point block is not externally upper-triangular (residual {residual:.3e})")]
    NotUpperTriangular { residual: f64 },

    #[error("exponent is chain-dependent; the projected form needs adapted per-point exponents")]
    NotAdapted,

    #[error("Kraus family is incomplete (residual {residual:.3e})")]
    IncompleteKraus { residual: f64 },

    #[error("square root domain violated (smallest eigenvalue {min_eigenvalue:.3e})")]
    SqrtDomain { min_eigenvalue: f64 },

    #[error("outcome {outcome} has probability {probability:.3e} below the floor")]
    ImpossibleOutcome { outcome: usize, probability: f64 },

    #[error("all outcome probabilities vanish at a jump (total {total:.3e})")]
    NoOutcome { total: f64 },

    #[error("operator is not an orthoprojector (residual {residual:.3e})")]
    NotProjector { residual: f64 },

    #[error("state is not normalized (norm {norm})")]
    Unnormalized { norm: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("step count must be at least 2, got {0}")]
    TooFewSteps(usize),

    #[error("trajectory records do not share parameters: {0}")]
    MismatchedRecords(String),

    #[error("{outcomes} outcomes recorded but only {available} interaction points are available")]
    OutcomeOverflow { outcomes: usize, available: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
