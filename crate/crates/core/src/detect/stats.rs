//! Per-group Gaussian statistics and the classification math built on them.
//!
//! A trilateration group's class model is a bivariate Gaussian around its
//! stored reference point. The discriminant drops every term shared across
//! groups (the 2π normalizer, the 1/2 factors, and — under uniform priors —
//! the prior itself), leaving
//!
//! ```text
//! delta(z) = −ln|C| − (z − mean)ᵀ C⁻¹ (z − mean)
//! ```
//!
//! whose argmax implements the Bayes decision rule, and whose quadratic form
//! is exactly the squared Mahalanobis distance used by the outlier detector.

use alloc::vec::Vec;

use rand::Rng;

use super::DetectError;
use crate::geometry::{self, Mat2, Point, RangeTriple};
use crate::math;
use crate::network::{Deployment, GroupId};
use crate::radio::{measure_range, true_distance, NoiseModel};
use crate::registry::ReferenceStore;

/// Determinant floor below which a covariance is treated as singular. Sits a
/// decade under the determinant of the smallest regularized covariance the
/// fitting path can produce (lambda² with the default lambda = 1e-6).
pub const DEFAULT_DET_FLOOR: f64 = 1e-13;

/// Chi-square quantile for 2 degrees of freedom, in closed form:
/// `F⁻¹(p) = −2 ln(1 − p)`.
pub fn chi2_quantile_2df(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "quantile probability must lie in (0, 1)");
    -2.0 * math::ln(1.0 - p)
}

/// Fitted class model of one trilateration group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStatistics {
    pub group_id: GroupId,
    /// Class mean: the group's stored reference point.
    pub mean: Point,
    /// Regularized sample covariance of re-localizations, meters².
    pub covariance: Mat2,
    /// Prior probability of the group; uniform 1/M across M groups.
    pub prior: f64,
    /// Number of jitter samples behind the covariance.
    pub sample_count: u32,
}

/// Mean-centered sample covariance with divisor `n − 1`.
pub fn sample_covariance(points: &[Point]) -> Result<Mat2, DetectError> {
    let n = points.len();
    if n < 2 {
        return Err(DetectError::TooFewSamples { got: n });
    }
    let mean = geometry::centroid(points).expect("non-empty by the length check");
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let m = (n - 1) as f64;
    Ok(Mat2::new(sxx / m, sxy / m, sxy / m, syy / m))
}

/// Inverse of a 2×2 matrix via the adjugate, with the default determinant
/// floor.
pub fn invert_2x2(c: &Mat2) -> Result<Mat2, DetectError> {
    invert_2x2_with(c, DEFAULT_DET_FLOOR)
}

/// [`invert_2x2`] with an explicit determinant floor.
pub fn invert_2x2_with(c: &Mat2, min_det: f64) -> Result<Mat2, DetectError> {
    let det = c.determinant();
    if !det.is_finite() || det <= min_det {
        return Err(DetectError::SingularCovariance { determinant: det });
    }
    Ok(Mat2::new(c.m11 / det, -c.m01 / det, -c.m10 / det, c.m00 / det))
}

/// Inverse of a symmetric positive-definite covariance; rejects matrices that
/// pass the determinant floor but are negative definite.
fn spd_inverse(c: &Mat2) -> Result<Mat2, DetectError> {
    if c.m00 <= 0.0 {
        return Err(DetectError::SingularCovariance { determinant: c.determinant() });
    }
    invert_2x2(c)
}

fn quadratic_form(inv: &Mat2, d: Point) -> f64 {
    d.x * (inv.m00 * d.x + inv.m01 * d.y) + d.y * (inv.m10 * d.x + inv.m11 * d.y)
}

/// Covariance-normalized distance `sqrt((x − c)ᵀ C⁻¹ (x − c))`.
pub fn mahalanobis_distance(x: Point, center: Point, covariance: &Mat2) -> Result<f64, DetectError> {
    let inv = spd_inverse(covariance)?;
    Ok(math::sqrt(quadratic_form(&inv, x - center).max(0.0)))
}

/// Bivariate Gaussian density of `z` under a group's class model.
pub fn gaussian_density(z: Point, g: &GroupStatistics) -> Result<f64, DetectError> {
    let inv = spd_inverse(&g.covariance)?;
    let det = g.covariance.determinant();
    let q = quadratic_form(&inv, z - g.mean);
    Ok(math::exp(-0.5 * q) / (core::f64::consts::TAU * math::sqrt(det)))
}

/// Group-membership discriminant `−ln|C| − (z − mean)ᵀ C⁻¹ (z − mean)`.
pub fn discriminant(z: Point, g: &GroupStatistics) -> Result<f64, DetectError> {
    let inv = spd_inverse(&g.covariance)?;
    let det = g.covariance.determinant();
    Ok(-math::ln(det) - quadratic_form(&inv, z - g.mean))
}

/// Assigns `z` to the group with the largest discriminant; exact ties go to
/// the lowest group id.
pub fn classify(z: Point, stats: &[GroupStatistics]) -> Result<GroupId, DetectError> {
    if stats.is_empty() {
        return Err(DetectError::EmptyStatistics);
    }
    let mut best: Option<(f64, GroupId)> = None;
    for g in stats {
        let delta = discriminant(z, g)?;
        let better = match best {
            None => true,
            Some((b, id)) => delta > b || (delta == b && g.group_id < id),
        };
        if better {
            best = Some((delta, g.group_id));
        }
    }
    Ok(best.expect("non-empty by the emptiness check").1)
}

/// Fits every group's class model from training re-localizations.
///
/// The mean is pinned to the stored `M1` reference; the covariance is the
/// mean-centered sample covariance of `jitter_samples` re-localizations of
/// the trilateration point under the noise model (true positions — training
/// happens before any attack), plus `regularization` on the diagonal so the
/// zero-noise limit stays invertible. Priors are uniform.
pub fn fit_group_statistics<R: Rng + ?Sized>(
    dep: &Deployment,
    store: &ReferenceStore,
    noise: &NoiseModel,
    jitter_samples: u32,
    regularization: f64,
    rng: &mut R,
) -> Result<Vec<GroupStatistics>, DetectError> {
    if jitter_samples < 3 {
        return Err(DetectError::TooFewSamples { got: jitter_samples as usize });
    }
    let group_count = dep.groups.len();
    let prior = 1.0 / group_count as f64;
    let mut out = Vec::with_capacity(group_count);
    for group in &dep.groups {
        let m1 =
            store.m1(group.id).ok_or(DetectError::MissingReference { group: group.id })?;
        let (_, truth) = dep.member_positions(group);
        let target = group.trilateration_point;
        let mut samples = Vec::with_capacity(jitter_samples as usize);
        for _ in 0..jitter_samples {
            let ranges = RangeTriple::new(
                measure_range(true_distance(truth[0], target), noise, rng),
                measure_range(true_distance(truth[1], target), noise, rng),
                measure_range(true_distance(truth[2], target), noise, rng),
            )?;
            samples.push(geometry::trilaterate(truth, &ranges)?.position);
        }
        let mut covariance = sample_covariance(&samples)?;
        covariance.m00 += regularization;
        covariance.m11 += regularization;
        out.push(GroupStatistics {
            group_id: group.id,
            mean: m1.point,
            covariance,
            prior,
            sample_count: jitter_samples,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::deploy;
    use crate::registry::build_references;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stats_at(x: f64, y: f64, covariance: Mat2, prior: f64, id: u32) -> GroupStatistics {
        GroupStatistics {
            group_id: GroupId(id),
            mean: Point::new(x, y),
            covariance,
            prior,
            sample_count: 10,
        }
    }

    #[test]
    fn sample_covariance_hand_case() {
        // Hand sum of squares over {(1,0),(−1,0),(0,2),(0,−2)}: mean (0,0),
        // Σx² = 2, Σy² = 8, divisor 3.
        let pts = [
            Point::new(1.0, 0.0),
            Point::new(-1.0, 0.0),
            Point::new(0.0, 2.0),
            Point::new(0.0, -2.0),
        ];
        let c = sample_covariance(&pts).unwrap();
        assert_relative_eq!(c.m00, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(c.m11, 8.0 / 3.0, max_relative = 1e-15);
        assert_eq!(c.m01, 0.0);
        assert_eq!(c.m10, 0.0);
    }

    #[test]
    fn sample_covariance_of_identical_points_is_zero() {
        let pts = [Point::new(3.0, -1.0), Point::new(3.0, -1.0)];
        assert_eq!(sample_covariance(&pts).unwrap(), Mat2::new(0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn sample_covariance_needs_two_points() {
        assert!(matches!(
            sample_covariance(&[Point::new(0.0, 0.0)]),
            Err(DetectError::TooFewSamples { got: 1 })
        ));
    }

    #[test]
    fn invert_identity() {
        assert_eq!(invert_2x2(&Mat2::identity()).unwrap(), Mat2::identity());
    }

    #[test]
    fn invert_hand_case() {
        // Variances 4 and 1 with correlation 0.5: determinant 3.
        let inv = invert_2x2(&Mat2::new(4.0, 1.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(inv.m00, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(inv.m01, -1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(inv.m10, -1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(inv.m11, 4.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn invert_rejects_perfect_correlation() {
        assert!(matches!(
            invert_2x2(&Mat2::new(1.0, 1.0, 1.0, 1.0)),
            Err(DetectError::SingularCovariance { .. })
        ));
    }

    #[test]
    fn mahalanobis_reduces_to_euclidean_under_identity() {
        let d = mahalanobis_distance(Point::new(3.0, 4.0), Point::new(0.0, 0.0), &Mat2::identity())
            .unwrap();
        assert_relative_eq!(d, 5.0, max_relative = 1e-15);
    }

    #[test]
    fn mahalanobis_zero_at_center() {
        let c = Mat2::new(2.0, 0.3, 0.3, 1.0);
        let p = Point::new(-4.0, 9.0);
        assert_eq!(mahalanobis_distance(p, p, &c).unwrap(), 0.0);
    }

    #[test]
    fn mahalanobis_anisotropic_hand_case() {
        // Quadratic form 4/4 + 1/1 = 2.
        let d = mahalanobis_distance(
            Point::new(2.0, 1.0),
            Point::new(0.0, 0.0),
            &Mat2::new(4.0, 0.0, 0.0, 1.0),
        )
        .unwrap();
        assert_relative_eq!(d, 2.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn gaussian_density_peak_under_identity() {
        let g = stats_at(0.0, 0.0, Mat2::identity(), 1.0, 0);
        let p = gaussian_density(Point::new(0.0, 0.0), &g).unwrap();
        assert_relative_eq!(p, 1.0 / core::f64::consts::TAU, max_relative = 1e-15);
    }

    #[test]
    fn gaussian_density_hand_case() {
        // Offset (3,4) under identity covariance: quadratic form 25.
        let g = stats_at(0.0, 0.0, Mat2::identity(), 1.0, 0);
        let p = gaussian_density(Point::new(3.0, 4.0), &g).unwrap();
        assert_relative_eq!(p, (-12.5f64).exp() / core::f64::consts::TAU, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_density_rejects_singular_covariance() {
        let g = stats_at(0.0, 0.0, Mat2::new(1.0, 1.0, 1.0, 1.0), 1.0, 0);
        assert!(matches!(
            gaussian_density(Point::new(0.0, 0.0), &g),
            Err(DetectError::SingularCovariance { .. })
        ));
    }

    #[test]
    fn discriminant_zero_at_mean_under_identity() {
        let g = stats_at(0.0, 0.0, Mat2::identity(), 1.0, 0);
        assert_eq!(discriminant(Point::new(0.0, 0.0), &g).unwrap(), 0.0);
    }

    #[test]
    fn discriminant_hand_case() {
        let g = stats_at(0.0, 0.0, Mat2::identity(), 1.0, 0);
        assert_relative_eq!(
            discriminant(Point::new(3.0, 4.0), &g).unwrap(),
            -25.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn classify_prefers_nearer_mean_under_equal_covariance() {
        let stats = [
            stats_at(0.0, 0.0, Mat2::identity(), 0.5, 0),
            stats_at(10.0, 0.0, Mat2::identity(), 0.5, 1),
        ];
        assert_eq!(classify(Point::new(1.0, 0.0), &stats).unwrap(), GroupId(0));
    }

    #[test]
    fn classify_ties_break_to_lowest_id() {
        let stats = [
            stats_at(10.0, 0.0, Mat2::identity(), 0.5, 1),
            stats_at(0.0, 0.0, Mat2::identity(), 0.5, 0),
        ];
        // Equidistant from both means.
        assert_eq!(classify(Point::new(5.0, 3.0), &stats).unwrap(), GroupId(0));
    }

    #[test]
    fn classify_requires_statistics() {
        assert!(matches!(classify(Point::new(0.0, 0.0), &[]), Err(DetectError::EmptyStatistics)));
    }

    #[test]
    fn fit_exact_noise_gives_regularized_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dep = deploy(600.0, 600.0, 20, &mut rng).unwrap();
        let store = build_references(&dep).unwrap();
        let stats =
            fit_group_statistics(&dep, &store, &NoiseModel::Exact, 50, 1e-6, &mut rng).unwrap();
        assert_eq!(stats.len(), dep.groups.len());
        let m = dep.groups.len() as f64;
        let prior_sum: f64 = stats.iter().map(|s| s.prior).sum();
        assert!((prior_sum - 1.0).abs() < 1e-9);
        for s in &stats {
            assert_eq!(s.covariance, Mat2::new(1e-6, 0.0, 0.0, 1e-6));
            assert_eq!(s.mean, store.m1(s.group_id).unwrap().point);
            assert_relative_eq!(s.prior, 1.0 / m, max_relative = 1e-12);
        }
    }

    #[test]
    fn fit_noisy_covariance_is_sane() {
        // Eigenvalues of the fitted covariance stay within a wide band around
        // the range-noise variance.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dep = deploy(600.0, 600.0, 30, &mut rng).unwrap();
        let store = build_references(&dep).unwrap();
        let noise = NoiseModel::gaussian_additive(0.5).unwrap();
        let stats = fit_group_statistics(&dep, &store, &noise, 200, 1e-6, &mut rng).unwrap();
        let sigma2 = 0.25;
        for s in &stats {
            let c = s.covariance;
            let tr = c.m00 + c.m11;
            let disc = (tr * tr - 4.0 * c.determinant()).max(0.0).sqrt();
            let (lo, hi) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
            assert!(lo > 0.0);
            assert!(
                hi >= 0.1 * sigma2 && lo <= 10.0 * sigma2,
                "eigenvalues [{lo}, {hi}] far from noise scale {sigma2}"
            );
        }
    }

    #[test]
    fn fit_rejects_tiny_sample_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dep = deploy(600.0, 600.0, 10, &mut rng).unwrap();
        let store = build_references(&dep).unwrap();
        assert!(matches!(
            fit_group_statistics(&dep, &store, &NoiseModel::Exact, 2, 1e-6, &mut rng),
            Err(DetectError::TooFewSamples { got: 2 })
        ));
    }

    /// Random well-conditioned SPD covariance.
    fn spd_covariance() -> impl Strategy<Value = Mat2> {
        (-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b, c, d)| {
            let m = Mat2::new(a, b, c, d);
            let mut s = m.mul(&m.transpose());
            s.m00 += 0.1;
            s.m11 += 0.1;
            s
        })
    }

    proptest! {
        #[test]
        fn inverse_multiplies_to_identity(c in spd_covariance()) {
            let inv = invert_2x2(&c).unwrap();
            prop_assert!(c.mul(&inv).max_abs_diff(&Mat2::identity()) < 1e-9);
        }

        #[test]
        fn discriminant_matches_mahalanobis_identity(
            c in spd_covariance(),
            zx in -50.0f64..50.0,
            zy in -50.0f64..50.0,
            mx in -50.0f64..50.0,
            my in -50.0f64..50.0,
        ) {
            let g = stats_at(mx, my, c, 1.0, 0);
            let z = Point::new(zx, zy);
            let delta = discriminant(z, &g).unwrap();
            let d = mahalanobis_distance(z, g.mean, &c).unwrap();
            let lhs = delta + d * d + c.determinant().ln();
            let scale = delta.abs().max(d * d).max(1.0);
            prop_assert!(lhs.abs() <= 1e-12 * scale, "identity residual {lhs}");
        }

        #[test]
        fn mahalanobis_affine_invariance(
            c in spd_covariance(),
            a00 in -2.0f64..2.0, a01 in -2.0f64..2.0,
            a10 in -2.0f64..2.0, a11 in -2.0f64..2.0,
            xx in -20.0f64..20.0, xy in -20.0f64..20.0,
            cx in -20.0f64..20.0, cy in -20.0f64..20.0,
        ) {
            let a = Mat2::new(a00, a01, a10, a11);
            prop_assume!(a.determinant().abs() > 0.3);
            let x = Point::new(xx, xy);
            let center = Point::new(cx, cy);
            let base = mahalanobis_distance(x, center, &c).unwrap();
            let mapped = mahalanobis_distance(
                a.mul_point(x),
                a.mul_point(center),
                &a.mul(&c).mul(&a.transpose()),
            )
            .unwrap();
            prop_assert!((base - mapped).abs() < 1e-9 * base.max(1.0));
        }

        #[test]
        fn classify_matches_bayes_oracle(
            covs in proptest::collection::vec(spd_covariance(), 2..10),
            means in proptest::collection::vec((-30.0f64..30.0, -30.0f64..30.0), 10),
            zx in -40.0f64..40.0,
            zy in -40.0f64..40.0,
        ) {
            // Oracle: direct maximization of density × prior (uniform priors).
            let prior = 1.0 / covs.len() as f64;
            let stats: Vec<GroupStatistics> = covs
                .iter()
                .zip(&means)
                .enumerate()
                .map(|(i, (c, (mx, my)))| stats_at(*mx, *my, *c, prior, i as u32))
                .collect();
            let z = Point::new(zx, zy);
            let chosen = classify(z, &stats).unwrap();
            let oracle = stats
                .iter()
                .map(|g| (g.group_id, gaussian_density(z, g).unwrap() * g.prior))
                .fold(None, |best: Option<(GroupId, f64)>, (id, p)| match best {
                    None => Some((id, p)),
                    Some((bid, bp)) => {
                        if p > bp || (p == bp && id < bid) { Some((id, p)) } else { Some((bid, bp)) }
                    }
                })
                .unwrap()
                .0;
            prop_assert_eq!(chosen, oracle);
        }
    }
}
