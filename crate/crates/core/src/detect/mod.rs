//! Cheating-anchor detection.
//!
//! Three detectors share one pipeline shape: screen groups for suspicion,
//! then resolve suspect groups down to individual anchors by re-trilaterating
//! each member from reference groups and comparing against its reported
//! position.
//!
//! * `consistency` screens by re-localizing each group's trilateration point
//!   and comparing against the stored `M1` reference.
//! * `mle` screens with a Gaussian maximum-likelihood discriminant over the
//!   fitted per-group statistics.
//! * `mahalanobis` screens with covariance-normalized distances against a
//!   chi-square-derived threshold.
//!
//! Every screen additionally runs a neighbor-mix check (re-localizing a
//! neighbor's point through borrowed-member triples): a reported-position
//! displacement that happens to preserve an anchor's distance to its own
//! group's point is invisible to the single-point screen, but cannot stay
//! invisible against a second, distinct target.

mod pipeline;
mod stats;

pub use pipeline::{
    consistency_detect, cross_check, group_consistency, mahalanobis_detect, mle_detect,
    DetectionReport, DetectorKind, DetectorParams,
};
pub use stats::{
    chi2_quantile_2df, classify, discriminant, fit_group_statistics, gaussian_density,
    invert_2x2, invert_2x2_with, mahalanobis_distance, sample_covariance, GroupStatistics,
};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::network::GroupId;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DetectError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("covariance is singular or not positive definite (determinant {determinant})")]
    SingularCovariance { determinant: f64 },
    #[error("{got} samples are too few for a covariance estimate")]
    TooFewSamples { got: usize },
    #[error("no group statistics supplied")]
    EmptyStatistics,
    #[error("no M1 reference stored for group {group}")]
    MissingReference { group: GroupId },
    #[error("no fitted statistics for group {group}")]
    MissingStatistics { group: GroupId },
}
