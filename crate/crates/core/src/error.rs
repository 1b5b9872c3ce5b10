use thiserror::Error;

/// Errors raised by constructors and I/O helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid torus spec: {0}")]
    InvalidSpec(String),
    #[error("node ({x}, {y}) is outside a {rows}x{cols} torus")]
    InvalidNode { x: i64, y: i64, rows: usize, cols: usize },
    #[error("invalid automorphism: {0}")]
    InvalidAutomorphism(String),
    #[error("odd torus dimensions are not supported by this generator")]
    OddSizeUnsupported,
    #[error("operation requires a square torus with equal capacities")]
    NotSquare,
    #[error("traffic layout does not fit on the torus: {0}")]
    DoesNotFit(String),
    #[error("radius too large: {0}")]
    RadiusTooLarge(String),
    #[error("stems overlap")]
    StemsOverlap,
    #[error("min cut {cut} between stems is below the required {required}")]
    CutTooSmall { cut: f64, required: f64 },
    #[error("objects belong to different torus specs")]
    SpecMismatch,
    #[error("parameter out of range: {0}")]
    OutOfRegime(String),
    #[error("no feasible routing found: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
