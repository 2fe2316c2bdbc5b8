//! Range-measurement models.
//!
//! Ranging techniques (RSSI, ToA, TDoA) all reduce to "true distance plus
//! noise" for simulation purposes, so a single [`NoiseModel`] covers them:
//! exact passthrough, additive Gaussian noise, or log-normal shadowing on a
//! log-distance path-loss channel. Every sampler takes the random stream
//! explicitly; callers that need independent measurements own independent
//! streams.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::Point;
use crate::math;

const LN_10: f64 = core::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RadioError {
    #[error("noise sigma {0} must be finite and non-negative")]
    InvalidSigma(f64),
    #[error("path-loss exponent {0} must lie in [1.5, 6.0]")]
    InvalidPathLossExponent(f64),
    #[error("reference distance {0} m must be positive and finite")]
    InvalidReferenceDistance(f64),
}

/// How a true geometric distance becomes a measured range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Measured range equals true distance.
    Exact,
    /// `max(0, d + N(0, sigma²))`.
    GaussianAdditive {
        /// Standard deviation, meters.
        sigma: f64,
    },
    /// Distance re-derived from a received power with `N(0, sigma_db²)`
    /// shadowing on a log-distance path-loss model; clamped to at least the
    /// reference distance.
    LogNormalShadowing {
        /// Shadowing standard deviation, dB.
        sigma_db: f64,
        /// Path-loss exponent, unitless.
        path_loss_exponent: f64,
        /// Close-in reference distance, meters.
        reference_distance: f64,
    },
}

impl NoiseModel {
    pub const fn exact() -> Self {
        NoiseModel::Exact
    }

    pub fn gaussian_additive(sigma: f64) -> Result<Self, RadioError> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(RadioError::InvalidSigma(sigma));
        }
        Ok(NoiseModel::GaussianAdditive { sigma })
    }

    pub fn log_normal_shadowing(
        sigma_db: f64,
        path_loss_exponent: f64,
        reference_distance: f64,
    ) -> Result<Self, RadioError> {
        if !sigma_db.is_finite() || sigma_db < 0.0 {
            return Err(RadioError::InvalidSigma(sigma_db));
        }
        if !(1.5..=6.0).contains(&path_loss_exponent) {
            return Err(RadioError::InvalidPathLossExponent(path_loss_exponent));
        }
        if !reference_distance.is_finite() || reference_distance <= 0.0 {
            return Err(RadioError::InvalidReferenceDistance(reference_distance));
        }
        Ok(NoiseModel::LogNormalShadowing { sigma_db, path_loss_exponent, reference_distance })
    }
}

/// Euclidean distance between two nodes.
pub fn true_distance(a: Point, b: Point) -> f64 {
    a.distance_to(b)
}

/// Draws one measured range for a true distance under the given model.
/// Physical ranges cannot be negative, so the Gaussian model clamps at zero
/// and the shadowing model at its reference distance.
pub fn measure_range<R: Rng + ?Sized>(d_true: f64, model: &NoiseModel, rng: &mut R) -> f64 {
    debug_assert!(d_true >= 0.0, "true distance must be non-negative");
    match *model {
        NoiseModel::Exact => d_true,
        NoiseModel::GaussianAdditive { sigma } => {
            let z: f64 = StandardNormal.sample(rng);
            (d_true + sigma * z).max(0.0)
        }
        NoiseModel::LogNormalShadowing { sigma_db, path_loss_exponent, reference_distance } => {
            // A shadowing term X ~ N(0, sigma_db²) on the path loss maps to a
            // multiplicative factor 10^(X / (10 n)) on the inferred distance.
            let z: f64 = StandardNormal.sample(rng);
            let factor = math::exp(sigma_db * z * LN_10 / (10.0 * path_loss_exponent));
            (d_true * factor).max(reference_distance)
        }
    }
}

/// Mean of `samples` independent range measurements; the standard way to
/// beat measurement noise down before a comparison against a tolerance.
pub fn measure_range_mean<R: Rng + ?Sized>(
    d_true: f64,
    model: &NoiseModel,
    samples: u32,
    rng: &mut R,
) -> f64 {
    let n = samples.max(1);
    let mut sum = 0.0;
    for _ in 0..n {
        sum += measure_range(d_true, model, rng);
    }
    sum / f64::from(n)
}
