use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid kernel parameter: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exact size limit exceeded: n = {n} but the exact cap is {cap}")]
    ExactSizeLimit { n: usize, cap: usize },

    #[error("cyclic product sum of an empty matrix is undefined")]
    EmptyCyclicProduct,

    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("zero diagonal entry at training point {index}")]
    ZeroDiagonal { index: usize },

    #[error("ratio table was built at order {built}, order {requested} requested")]
    TableOrder { built: u8, requested: u8 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("matrix does not have the declared {0} structure")]
    Structure(&'static str),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
