use thiserror::Error;

/// Errors raised anywhere in the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({re}, {im}) lies outside the disk guard |z| < 1 - {guard:e}")]
    Boundary { re: f64, im: f64, guard: f64 },
    #[error("fundamental-domain reduction did not terminate after {0} steps")]
    ReductionDiverged(usize),
    #[error("deck enumeration to radius {radius} needs about {estimate:.0} elements, budget is {budget}")]
    ResourceLimit { radius: f64, estimate: f64, budget: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point outside the eikonal collar chart")]
    OutOfDomain,
    #[error("collar of half-width {width} is too wide: characteristics meet near s = {s:.4}")]
    CollarTooWide { width: f64, s: f64 },
    #[error("Riccati blow-up at t = {0}")]
    BlowUp(f64),
    #[error("initial data is not transverse to the stable direction (margin {0:e})")]
    NotTransverse(f64),
    #[error("no expansion time on the supplied grid: pair {pair:?} still contracts at t = {time}")]
    NoExpansionTime { pair: ([f64; 2], [f64; 2]), time: f64 },
    #[error("direction clustering is ambiguous at tolerance {0:e}")]
    AmbiguousClustering(f64),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
