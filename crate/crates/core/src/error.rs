use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain size {0}: at least 2 sites are required")]
    InvalidSize(usize),

    #[error("pair ({i}, {j}) is not a valid ordered pair for a {n}-site chain")]
    PairIndex { i: usize, j: usize, n: usize },

    #[error("site {site} is outside 1..={n}")]
    Site { site: usize, n: usize },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolver did not converge on the {block} block")]
    Eigen { block: &'static str },

    #[error("{name} = {value} lies outside [0, 1]")]
    Domain { name: &'static str, value: f64 },

    #[error("state is not normalized (norm^2 = {0})")]
    Normalization(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("empty or inverted search window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("raster error: {0}")]
    Raster(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("no solution: {0}")]
    Infeasible(String),

    #[error("propagator cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
