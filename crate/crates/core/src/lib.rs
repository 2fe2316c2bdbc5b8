//! Core library for localizing wireless-sensor-network anchor nodes by
//! trilateration and for identifying cheating (compromised) anchors.
//!
//! The crate is organized around the lifecycle of a simulated network:
//!
//! * [`geometry`] — exact 2-D trilateration in a canonical frame, frame
//!   transforms, and degeneracy predicates.
//! * [`radio`] — range-measurement models (exact, additive Gaussian,
//!   log-normal shadowing) over true geometric distances.
//! * [`network`] — chained-trilateration deployment, attack injection, and
//!   quarantine of flagged anchors.
//! * [`registry`] — the central server's reference location stores (M1 per
//!   group plus cross records per neighboring group).
//! * [`detect`] — the three detectors: trilateration-consistency checks,
//!   a Gaussian maximum-likelihood discriminant, and Mahalanobis outlier
//!   scoring, each resolving suspects down to individual anchors.
//!
//! All operations are pure given explicit inputs and a caller-owned random
//! stream, so trials can run concurrently without shared state. The crate is
//! `no_std`-compatible (with `alloc`) when built without the default `std`
//! feature; enable the `libm` dependency in that configuration for float
//! math.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("anchorwatch-core requires either the `std` feature or the `libm` dependency");

pub(crate) mod math;

pub mod detect;
pub mod geometry;
pub mod network;
pub mod radio;
pub mod registry;

pub use detect::{
    classify, cross_check, discriminant, fit_group_statistics, gaussian_density,
    group_consistency, invert_2x2, mahalanobis_detect, mahalanobis_distance, mle_detect,
    sample_covariance, DetectError, DetectionReport, DetectorKind, DetectorParams,
    GroupStatistics,
};
pub use geometry::{
    canonical_frame, centroid, circles_intersect, solve_canonical, trilaterate, CanonicalFrame,
    GeometryError, Localization, Mat2, Point, RangeTriple,
};
pub use network::{
    deploy, inject_attack, quarantine, AnchorId, AnchorNode, AttackSpec, Deployment, GroupId,
    NetworkError, TrilaterationGroup,
};
pub use radio::{measure_range, true_distance, NoiseModel, RadioError};
pub use registry::{build_references, ReferenceRecord, ReferenceStore, RegistryError, StoreTag};
