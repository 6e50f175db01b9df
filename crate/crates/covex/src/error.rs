use thiserror::Error;

/// Errors shared across the crate.
#[derive(Error, Debug)]
pub enum CovexError {
    #[error("0-simplex has no boundary")]
    NoBoundary,

    #[error("vertex {0} is not part of the complex")]
    UnknownVertex(usize),

    #[error("vertex {0} is not part of simplex {1:?}")]
    VertexNotInSimplex(usize, Vec<usize>),

    #[error("scale factor must be positive, got {0}")]
    BadScaleFactor(f64),

    #[error("vertex {0} has no image under the simplicial map")]
    UnmappedVertex(usize),

    #[error("no edge between vertices {0} and {1}")]
    MissingEdge(usize, usize),

    #[error("simplex {0:?} not stored in the form")]
    MissingSimplex(Vec<usize>),

    #[error("edge matrix for ({0},{1}) is not invertible")]
    NotInvertible(usize, usize),

    #[error("form degree {form} does not match simplex dimension {simplex}")]
    DegreeMismatch { form: usize, simplex: usize },

    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },

    #[error("polyline needs at least two points")]
    PolylineTooShort,

    #[error("paths must share their first (evaluation) and last (cut) vertices")]
    EndpointMismatch,

    #[error("point lies outside the host simplex")]
    PointOutsideSimplex,

    #[error("map image is not a simplex of the target complex")]
    NotSimplicial,

    #[error("unknown builtin field '{name}'; available: {registry}")]
    UnknownBuiltin { name: String, registry: String },

    #[error("unknown experiment '{name}'; available: {registry}")]
    UnknownExperiment { name: String, registry: String },

    #[error("unknown quadrature rule '{0}'")]
    UnknownQuadrature(String),

    #[error("slope fit needs at least {need} usable rows, got {got}")]
    TooFewRows { need: usize, got: usize },

    #[error("invalid simplex: {0}")]
    InvalidSimplex(String),

    #[error("evaluation vertex must be the leading vertex of the simplex ordering")]
    EvalNotLeading,

    #[error("invalid field description: {0}")]
    InvalidField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CovexError>;
