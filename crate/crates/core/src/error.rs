use thiserror::Error;

/// Errors raised by the geometry, prescription and solver layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("order k = {k} out of range 1..={n}")]
    OrderOutOfRange { k: usize, n: usize },

    #[error("eigenvalue tuple is empty or contains non-finite entries")]
    InvalidTuple,

    #[error("point is not in the admissible cone Gamma_{k}")]
    NotAdmissible { k: usize },

    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    #[error("field has {got} values but the grid has {expected} nodes")]
    FieldLength { expected: usize, got: usize },

    #[error("graph is not spacelike at {} node(s)", nodes.len())]
    NotSpacelike { nodes: Vec<usize> },

    #[error("graph is not {k}-admissible at {} node(s)", nodes.len())]
    InadmissibleGraph { k: usize, nodes: Vec<usize> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("second-order block of the linearisation is not elliptic at admissible node {node}")]
    NonElliptic { node: usize },

    #[error("zeroth-order coefficient at the umbilic start is not negative (c = {0})")]
    NonNegativeStartCoefficient(f64),

    #[error("singular linear system (zero pivot in column {0})")]
    Singular(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
