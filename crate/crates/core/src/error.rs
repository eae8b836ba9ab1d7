use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the origin is not an interior point of the convex hull")]
    OriginNotInterior,
    #[error("degenerate convex body: {0}")]
    DegenerateBody(String),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("unsupported dimension {0}; expected 2 or 3")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("depth or iteration count too large: {0}")]
    DepthTooLarge(String),
    #[error("the compact set is empty")]
    EmptySet,
    #[error("sampling spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("polygon ring is self-intersecting")]
    SelfIntersecting,
    #[error("invalid iterated function system: {0}")]
    InvalidIfs(String),
    #[error("operation not supported for this set: {0}")]
    UnsupportedSet(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("radius {r} is below the grid resolution guard {guard}")]
    RadiusBelowResolution { r: f64, guard: f64 },
    #[error("radius {r} exceeds the padded range {limit}")]
    RadiusExceedsPadding { r: f64, limit: f64 },
    #[error("invalid radii: {0}")]
    InvalidRadii(String),
    #[error("Monte-Carlo oracle needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("profile spans {found} octaves with {radii} radii; need at least {needed} octaves")]
    InsufficientOctaves {
        found: f64,
        radii: usize,
        needed: f64,
    },
    #[error("s = {s} is outside the admissible range for dimension {n}")]
    SOutOfRange { s: f64, n: usize },
    #[error("sampling range too narrow: [{lo}, {hi}]")]
    RangeTooNarrow { lo: f64, hi: f64 },
    #[error("reports do not describe the same set/body/method: {0}")]
    MismatchedReports(String),
    #[error("decomposition parts overlap or touch: {0}")]
    OverlappingParts(String),

    #[error("radius {r} outside the validity window [0, {max}]")]
    RadiusOutsideValidity { r: f64, max: f64 },
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
