use thiserror::Error;

use crate::lattice::BoxId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected point count {expected:.3e} exceeds cap {cap:.3e}")]
    ExpectedCountTooLarge { expected: f64, cap: f64 },
    #[error("sub-region is not contained in the cloud region")]
    NotContained,
    #[error("box side {s} exceeds the smallest region side {side}")]
    ScaleTooLarge { s: f64, side: f64 },
    #[error("partition would hold {count} boxes, above the cap {cap}")]
    TooManyBoxes { count: u128, cap: u128 },
    #[error("query radius {r} exceeds the cell side {cell}; rebuild the index")]
    RadiusExceedsCell { r: f64, cell: f64 },
    #[error("field has {got} values but the cloud has {expected} points")]
    FieldLength { expected: usize, got: usize },
    #[error("field value at index {0} is not finite")]
    NonFinite(usize),
    #[error("energy region is not contained in the cloud region")]
    RegionExceedsCloud,
    #[error("empty domain")]
    EmptyDomain,
    #[error("box {0:?} is included but holds no cloud points")]
    EmptyBox(BoxId),
    #[error("expected count per box {expected:.4} is below 1; s is too small for epsilon")]
    ExpectedCountBelowOne { expected: f64 },
    #[error("the cloud region does not cover every box of the partition")]
    PartitionNotCovered,
    #[error("box {0:?} is not in the partition")]
    BoxOutsidePartition(BoxId),
    #[error("boundary of component {component} is not diagonal-connected between the endpoints")]
    BoundaryDisconnected { component: usize },
    #[error("component {component} has an empty boundary")]
    EmptyBoundary { component: usize },
    #[error("field is undefined on box {0:?}")]
    Undefined(BoxId),
    #[error("quadrature did not converge (last relative change {0:.3e})")]
    QuadratureNotConverged(f64),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
