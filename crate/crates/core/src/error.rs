use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Each failure mode named by the command-line contract has its own variant so
/// callers (and the CLI's one-line diagnostics) can tell them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pixel index {index} out of range for nside {nside}")]
    PixelOutOfRange { index: u64, nside: u32 },

    #[error("invalid nside {0}: must be a power of two between 1 and 2^29")]
    InvalidNside(u32),

    #[error("invalid group order {order} for nside {nside}")]
    InvalidGroupOrder { order: u32, nside: u32 },

    #[error("q = {q} is outside the moment domain of {family}: {reason}")]
    MomentDomain {
        family: &'static str,
        q: f64,
        reason: String,
    },

    #[error("invalid model parameters: {0}")]
    InvalidParameters(String),

    #[error("map has zero total mass over the analysis support")]
    ZeroTotalMass,

    #[error("no mesh cell lies inside the window")]
    NoCellsInWindow,

    #[error("need at least {needed} cells with positive mass, found {found}")]
    InsufficientCells { needed: usize, found: usize },

    #[error("map value at pixel {index} is negative ({value}); shift the map first")]
    NegativeValue { index: usize, value: f64 },

    #[error("map grid (nside {map}) does not match mesh grid (nside {mesh})")]
    GridMismatch { map: u32, mesh: u32 },

    #[error("covariance factorization failed even with jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("{count} points exceed the dense simulation guard of {limit}")]
    TooManyPoints { count: usize, limit: usize },

    #[error("covariance variance {covariance} does not match the {expected} required by the mother field")]
    VarianceMismatch { covariance: f64, expected: f64 },

    #[error("cannot simulate: {0}")]
    NotSimulable(String),

    #[error("regressor is identically zero on the q grid")]
    DegenerateRegressor,

    #[error("initial parameters are outside the admissible region: {0}")]
    InitDomain(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable name of the failure class, used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) | Error::MomentDomain { .. } | Error::PixelOutOfRange { .. } => "domain-error",
            Error::InvalidNside(_) | Error::InvalidGroupOrder { .. } | Error::InvalidParameters(_) => "invalid-parameters",
            Error::ZeroTotalMass | Error::NoCellsInWindow | Error::InsufficientCells { .. } => "degenerate-measure",
            Error::NegativeValue { .. } | Error::GridMismatch { .. } => "map-mismatch",
            Error::Factorization { .. } | Error::TooManyPoints { .. } => "simulation-failure",
            Error::VarianceMismatch { .. } | Error::NotSimulable(_) => "not-simulable",
            Error::DegenerateRegressor | Error::InitDomain(_) => "fit-failure",
            Error::Malformed(_) | Error::Json(_) => "malformed-input",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Io(_) => "io-error",
        }
    }

    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "invalid-argument" => 2,
            "malformed-input" => 3,
            "io-error" => 4,
            "domain-error" | "invalid-parameters" => 5,
            _ => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
