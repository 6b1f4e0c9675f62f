use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not trace-free (trace = {0:e})")]
    NotTraceFree(f64),

    #[error("matrix is not unimodular (det = {det}); {context}")]
    NotUnimodular { det: f64, context: String },

    #[error("frame determinant became non-positive at s = {s}; retry with a smaller step than h = {h}")]
    StepTooLarge { s: f64, h: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("grid too short: need at least {need} samples, got {got}")]
    GridTooShort { need: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("parameter ξ ≠ 0 required")]
    ZeroXi,

    #[error("invalid (m, n) = ({m}, {n}): need coprime m > n ≥ 1")]
    InvalidMn { m: i64, n: i64 },

    #[error("transforming function has a pole near s = {s}; enable segmentation or shrink the range")]
    PoleInRange { s: f64 },

    #[error("degenerate constant-bending transform: f₊ = f₋ = {0}")]
    DegenerateTransform(f64),

    #[error("square-root domain violated: {0}")]
    Domain(String),

    #[error("permutability needs ξ₁ ≠ ξ₂ (got {0})")]
    EqualParameters(f64),

    #[error("spectral parameter {name} = {value} < 1 admits no real ξ with cosh 2ξ = {name}")]
    NoRealXi { name: &'static str, value: f64 },

    #[error("spectral parameters coincide (ω = λ = {0})")]
    SpectralCollision(f64),

    #[error("mismatched spectral parameter: expected {expected}, got {got}")]
    SpectralMismatch { expected: f64, got: f64 },

    #[error("input does not solve KdV: path discrepancy {discrepancy:e} exceeds 10× tolerance {tolerance:e}")]
    NotKdv { discrepancy: f64, tolerance: f64 },

    #[error("point ({s}, {t}) is not a grid node")]
    OffGrid { s: f64, t: f64 },

    #[error("invariant violated: {name}: {detail}")]
    Invariant { name: String, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotTraceFree(_) => "not_trace_free",
            Error::NotUnimodular { .. } => "not_unimodular",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::GridTooShort { .. } => "grid_too_short",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::ZeroXi => "zero_xi",
            Error::InvalidMn { .. } => "invalid_mn",
            Error::PoleInRange { .. } => "pole_in_range",
            Error::DegenerateTransform(_) => "degenerate_transform",
            Error::Domain(_) => "domain",
            Error::EqualParameters(_) => "equal_parameters",
            Error::NoRealXi { .. } => "no_real_xi",
            Error::SpectralCollision(_) => "spectral_collision",
            Error::SpectralMismatch { .. } => "spectral_mismatch",
            Error::NotKdv { .. } => "not_kdv",
            Error::OffGrid { .. } => "off_grid",
            Error::Invariant { .. } => "invariant",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
