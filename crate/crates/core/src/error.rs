use thiserror::Error;

/// Errors raised by the grid, geometry, solver and certificate layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} produced at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("quadrature node {index} at {point:?} leaves the inside region")]
    OutsideRegion { index: usize, point: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grids do not match")]
    GridMismatch,

    #[error("no testable nodes")]
    NoTestableNodes,

    #[error("empty mask: {0}")]
    EmptyMask(String),

    #[error("lipschitz graph rejected: {0}")]
    Graph(String),

    #[error("point {0:?} is not inside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("no compact core at this resolution ({} violating pairs)", .violations.len())]
    NoCompactCore { violations: Vec<ViolatingPair> },

    #[error("containment of the erosion collar failed for k = {k} at every scheduled epsilon")]
    Containment { k: u32 },

    #[error("cone shift leaves the inside region: base {base:?}, shift {shift:?}")]
    ConeExits { base: Vec<f64>, shift: Vec<f64> },

    #[error("not subharmonic on slice: defect {defect:e} at radial index {index}")]
    SliceNotSubharmonic { index: usize, defect: f64 },

    #[error("certificate refused: {0}")]
    Refused(String),

    #[error("sector fraction {alpha} below geometric floor {floor}")]
    SectorFloor { alpha: f64, floor: f64 },

    #[error("window around 1/{k} of radius {radius} holds {found} atoms; choose larger k or r")]
    EmptyWindow { k: u32, radius: f64, found: usize },

    #[error("point lies on the removed set K")]
    OnRemovedSet,

    #[error("field file: {0}")]
    Format(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A node `z` and shift `w` for which `dist(z, ∂Ω) < dist(z + w, ∂Ω)` fails.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolatingPair {
    pub node: usize,
    pub shift: Vec<f64>,
}

pub type Result<T> = std::result::Result<T, Error>;
