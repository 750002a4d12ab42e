use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("atom mismatch: {0}")]
    AtomMismatch(String),
    #[error("invalid molecule: {0}")]
    InvalidMolecule(String),
    #[error("point ({}, {}, {}) lies outside the grid", .0[0], .0[1], .0[2])]
    OutOfBounds([f64; 3]),
    #[error("cube parse error (line {line}): {msg}")]
    CubeParse { line: usize, msg: String },
    #[error("unknown subgroup `{0}`")]
    UnknownSubgroup(String),
    #[error("invalid range window: {0}")]
    InvalidWindow(String),
    #[error("invalid polyline: {0}")]
    InvalidPolyline(String),
    #[error("invalid lens: {0}")]
    InvalidLens(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown mesh format `{0}`")]
    UnknownFormat(String),
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
