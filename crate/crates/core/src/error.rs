use thiserror::Error;

use crate::refelem::ElementType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure of the reference-to-physical mapping.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate element (det J = {det:e}{})", at_point(*.point))]
    DegenerateElement { det: f64, point: Option<usize> },
    #[error("inverted element (det J = {det:e}{})", at_point(*.point))]
    InvertedElement { det: f64, point: Option<usize> },
}

fn at_point(point: Option<usize>) -> String {
    point.map(|q| format!(" at quadrature point {q}")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("element {index}: {source}")]
    Element { index: usize, source: GeometryError },
    #[error("{what}: expected {expected} values, found {found}")]
    ShapeMismatch { what: &'static str, expected: usize, found: usize },
    #[error("invalid kernel descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("element {index} differs in type or problem class from element 0")]
    HeterogeneousBatch { index: usize },
    #[error("batch contains no elements")]
    EmptyBatch,
    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("lane width {0} not in {{1, 4, 8, 16, 32, 64}}")]
    InvalidLaneWidth(usize),
    #[error("local point {xi:?} lies outside the reference {element}")]
    PointOutsideElement { element: ElementType, xi: [f64; 3] },
    #[error("measured {measured} global accesses per element, model expects {expected}")]
    CounterMismatch { expected: u64, measured: u64 },
    #[error("{0}")]
    Parse(String),
    #[error("batch file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The geometry failure behind this error, if any.
    pub fn geometry(&self) -> Option<&GeometryError> {
        match self {
            Error::Geometry(g) | Error::Element { source: g, .. } => Some(g),
            _ => None,
        }
    }
}
