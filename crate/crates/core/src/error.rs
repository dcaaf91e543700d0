use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh parse error on line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("triangle {0} does not exist")]
    NoSuchTriangle(usize),

    #[error("edge {0} does not exist")]
    NoSuchEdge(usize),

    #[error("edge {0} lies on the boundary and carries no jump")]
    BoundaryEdge(usize),

    #[error("bisection closure exceeded depth bound {0}")]
    ClosureDepthExceeded(usize),

    #[error("degenerate triangle (signed area {0:e})")]
    DegenerateTriangle(f64),

    #[error("point lies outside triangle {triangle} (barycentric {barycentric:?})")]
    PointOutsideTriangle { triangle: usize, barycentric: [f64; 3] },

    #[error("index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    IndexOutOfRange { row: usize, col: usize, rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-positive diagonal entry {value:e} in row {row}")]
    NonPositiveDiagonal { row: usize, value: f64 },

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no coefficient for region {0}")]
    MissingRegion(u8),

    #[error("problem `{0}` has no divergence of the source")]
    MissingDivergence(String),

    #[error("problem `{0}` has no exact solution")]
    MissingExactSolution(String),

    #[error("manufactured problem `{name}` is inconsistent: {what} = {residual:e} at ({x}, {y})")]
    Inconsistent { name: String, what: &'static str, residual: f64, x: f64, y: f64 },

    #[error("table parse error: {0}")]
    TableParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
