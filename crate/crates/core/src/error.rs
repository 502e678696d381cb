use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("recursion table is missing entries for k = {0}")]
    MissingEntries(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("could not parse shape `{0}`")]
    ShapeParse(String),

    #[error("immersion is degenerate at parameter {0:?} (metric determinant {1:e})")]
    DegenerateImmersion(Vec<f64>, f64),

    #[error("nearest-point projection failed for {0:?}")]
    ProjectionFailed(Vec<f64>),

    #[error("finite-difference stencil of radius {radius:e} leaves the neighborhood of half-width {half_width:e}")]
    StepTooLarge { radius: f64, half_width: f64 },

    #[error("jets carry derivative order {have} but order {need} is required")]
    InsufficientJetOrder { have: usize, need: usize },

    #[error("invalid curve state: {0}")]
    InvalidState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
