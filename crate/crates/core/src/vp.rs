//! Vanishing point of one rigid inter-frame translation.
//!
//! Every keypoint of a translating rigid object moves along a 3D line
//! parallel to the translation, so the image lines through each keypoint's
//! two positions are concurrent at the vanishing point of that direction.
//! With more than two keypoints the estimate is the total-least-squares
//! point of the bundle: the unit homogeneous vector minimizing
//! `sum (l_i . w)^2`, i.e. the smallest eigenvector of the scatter matrix.

use nalgebra::{Matrix3, Point2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::sym_eigen3;
use crate::geom::{image_line_through, intersect_lines, HomLine2, HomPoint2};

/// Trace-normalized eigenvalue floor below which a direction is unconstrained.
pub const EPS_DEGENERATE_EIGEN: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum VpError {
    #[error("need at least 2 motion lines, got {0}")]
    InsufficientLines(usize),
    #[error("all motion lines coincide")]
    DegenerateBundle,
}

/// A keypoint observed in two consecutive frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionPair {
    pub track_id: u64,
    pub p: Point2<f64>,
    pub q: Point2<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotionLines {
    pub lines: Vec<(u64, HomLine2)>,
    /// Tracks whose image displacement was too small to define a line.
    pub dropped: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VpEstimate {
    pub vp: HomPoint2,
    pub n_lines: usize,
    pub rms_residual: f64,
    pub max_residual: f64,
}

pub fn motion_lines(pairs: &[MotionPair]) -> MotionLines {
    let mut out = MotionLines::default();
    for pair in pairs {
        match image_line_through(&pair.p, &pair.q) {
            Ok(line) => out.lines.push((pair.track_id, line)),
            Err(_) => out.dropped.push(pair.track_id),
        }
    }
    out
}

pub fn estimate_vp(lines: &[(u64, HomLine2)]) -> Result<VpEstimate, VpError> {
    if lines.len() < 2 {
        return Err(VpError::InsufficientLines(lines.len()));
    }
    let mut order: Vec<usize> = (0..lines.len()).collect();
    order.sort_by_key(|&i| lines[i].0);

    let mut scatter = Matrix3::zeros();
    for &i in &order {
        let l = lines[i].1.coords();
        scatter += l * l.transpose();
    }
    let energy = scatter.trace();
    scatter /= energy;

    let eig = sym_eigen3(&scatter);
    // The two smaller eigenvalues sum to the energy off the dominant line,
    // which the cross products measure without cancellation.
    let dominant = eig.vectors.column(2).into_owned();
    let spread: f64 = order
        .iter()
        .map(|&i| lines[i].1.coords().cross(&dominant).norm_squared())
        .sum();
    if spread / energy < EPS_DEGENERATE_EIGEN {
        return Err(VpError::DegenerateBundle);
    }
    let (_, null) = eig.smallest();
    let vp = HomPoint2::from_vector(null).map_err(|_| VpError::DegenerateBundle)?;

    let residuals: Vec<f64> = order
        .iter()
        .map(|&i| line_residual(&vp, &lines[i].1, lines))
        .collect();
    let n = residuals.len() as f64;
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);

    Ok(VpEstimate {
        vp,
        n_lines: lines.len(),
        rms_residual,
        max_residual,
    })
}

/// Point-line distance for a finite vanishing point. For an ideal point the
/// distance is undefined, so the residual is the angle by which the line
/// misses the ideal direction, scaled by the RMS distance of the bundle's
/// lines from the principal point (1 when every line passes through it).
fn line_residual(vp: &HomPoint2, line: &HomLine2, bundle: &[(u64, HomLine2)]) -> f64 {
    match vp.to_euclidean() {
        Some(p) => line.signed_distance(&p).abs(),
        None => {
            let dir = vp.coords().xy().normalize();
            let angle = line.normal().dot(&dir).clamp(-1.0, 1.0).asin().abs();
            angle * bundle_spread(bundle)
        }
    }
}

fn bundle_spread(bundle: &[(u64, HomLine2)]) -> f64 {
    let ms = bundle.iter().map(|(_, l)| l.coords().z.powi(2)).sum::<f64>() / bundle.len() as f64;
    if ms > 0.0 {
        ms.sqrt()
    } else {
        1.0
    }
}

/// Brute-force cross-check for [`estimate_vp`]: intersects every pair of
/// lines and takes the component-wise median of the finite intersections,
/// or of the ideal directions when most intersections are ideal.
pub fn estimate_vp_pairwise(lines: &[(u64, HomLine2)]) -> Result<HomPoint2, VpError> {
    if lines.len() < 2 {
        return Err(VpError::InsufficientLines(lines.len()));
    }
    let mut finite = Vec::new();
    let mut ideal = Vec::new();
    for (i, (_, a)) in lines.iter().enumerate() {
        for (_, b) in &lines[i + 1..] {
            let Ok(x) = intersect_lines(a, b) else {
                continue;
            };
            match x.to_euclidean() {
                Some(p) => finite.push(p),
                None => ideal.push(x.coords().xy().normalize()),
            }
        }
    }
    if finite.is_empty() && ideal.is_empty() {
        return Err(VpError::DegenerateBundle);
    }

    if ideal.len() > finite.len() {
        let reference = ideal[0];
        let aligned: Vec<Vector2<f64>> = ideal
            .iter()
            .map(|d| if d.dot(&reference) < 0.0 { -d } else { *d })
            .collect();
        let dx = median(aligned.iter().map(|d| d.x).collect());
        let dy = median(aligned.iter().map(|d| d.y).collect());
        HomPoint2::from_vector(Vector3::new(dx, dy, 0.0)).map_err(|_| VpError::DegenerateBundle)
    } else {
        let x = median(finite.iter().map(|p| p.x).collect());
        let y = median(finite.iter().map(|p| p.y).collect());
        Ok(HomPoint2::from_euclidean(&Point2::new(x, y)))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{project, Camera};
    use nalgebra::Point3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(id: u64, p: (f64, f64), q: (f64, f64)) -> MotionPair {
        MotionPair {
            track_id: id,
            p: Point2::new(p.0, p.1),
            q: Point2::new(q.0, q.1),
        }
    }

    fn line(a: f64, b: f64, c: f64) -> HomLine2 {
        HomLine2::new(a, b, c).unwrap()
    }

    /// Projections of a random cloud before and after translating by `delta`.
    fn translated_pairs(n: usize, delta: Vector3<f64>, seed: u64) -> Vec<MotionPair> {
        let cam = Camera::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n as u64)
            .map(|id| {
                let a = Point3::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(15.0..25.0),
                );
                MotionPair {
                    track_id: id,
                    p: project(&cam, &a).unwrap(),
                    q: project(&cam, &(a + delta)).unwrap(),
                }
            })
            .collect()
    }

    #[test]
    fn stationary_pairs_are_dropped() {
        let pairs = [
            pair(1, (0.0, 0.0), (1.0, 0.0)),
            pair(2, (0.5, 0.5), (0.5, 0.5)),
            pair(3, (0.0, 1.0), (2.0, 2.0)),
        ];
        let ml = motion_lines(&pairs);
        assert_eq!(ml.lines.len(), 2);
        assert_eq!(ml.dropped, vec![2]);

        let still = [pair(1, (0.1, 0.1), (0.1, 0.1)), pair(2, (0.2, 0.2), (0.2, 0.2))];
        let ml = motion_lines(&still);
        assert!(ml.lines.is_empty());
        assert_eq!(ml.dropped.len(), 2);
    }

    #[test]
    fn two_lines_match_exact_intersection() {
        let a = line(0.0, 1.0, 0.0);
        let b = image_line_through(&Point2::new(0.0, 1.0), &Point2::new(2.0, 2.0)).unwrap();
        let est = estimate_vp(&[(0, a), (1, b)]).unwrap();
        let exact = intersect_lines(&a, &b).unwrap();
        assert!(est.vp.distance(&exact) < 1e-15);
        let p = est.vp.to_euclidean().unwrap();
        assert!((p.x + 2.0).abs() < 1e-14 && p.y.abs() < 1e-14);
        assert!(est.rms_residual < 1e-14 && est.max_residual < 1e-14);
        assert_eq!(est.n_lines, 2);
    }

    #[test]
    fn parallel_bundle_gives_ideal_point() {
        let lines = [
            (0, line(1.0, -1.0, 0.0)),
            (1, line(1.0, -1.0, -2.0)),
            (2, line(1.0, -1.0, 1.0)),
        ];
        let est = estimate_vp(&lines).unwrap();
        assert!(est.vp.is_ideal());
        assert!(est.vp.distance(&HomPoint2::new(1.0, 1.0, 0.0).unwrap()) < 1e-15);
        assert!(est.rms_residual < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(estimate_vp(&[]), Err(VpError::InsufficientLines(0)));
        assert_eq!(
            estimate_vp(&[(0, line(0.0, 1.0, 0.0))]),
            Err(VpError::InsufficientLines(1))
        );
        let same = [
            (0, line(1.0, 2.0, 3.0)),
            (1, line(-2.0, -4.0, -6.0)),
            (2, line(1.0, 2.0, 3.0)),
        ];
        assert_eq!(estimate_vp(&same), Err(VpError::DegenerateBundle));
        assert_eq!(estimate_vp_pairwise(&same), Err(VpError::DegenerateBundle));
        assert_eq!(
            estimate_vp_pairwise(&same[..1]),
            Err(VpError::InsufficientLines(1))
        );
    }

    #[test]
    fn concurrent_bundle_matches_analytic_vp() {
        let delta = Vector3::new(0.7, -1.3, 2.0);
        let pairs = translated_pairs(200, delta, 11);
        let ml = motion_lines(&pairs);
        assert_eq!(ml.lines.len(), 200);
        let est = estimate_vp(&ml.lines).unwrap();
        let analytic = HomPoint2::from_vector(delta).unwrap();
        assert!(
            est.vp.distance(&analytic) < 1e-12,
            "{}",
            est.vp.distance(&analytic)
        );
        assert!(est.rms_residual <= 1e-10);
        let oracle = estimate_vp_pairwise(&ml.lines).unwrap();
        assert!(est.vp.distance(&oracle) < 1e-9);
    }

    #[test]
    fn pairwise_with_two_lines_is_intersection() {
        let a = line(0.3, 1.0, -0.2);
        let b = line(-1.0, 0.4, 0.1);
        let x = intersect_lines(&a, &b).unwrap();
        assert!(estimate_vp_pairwise(&[(0, a), (1, b)]).unwrap().distance(&x) < 1e-15);
    }

    #[test]
    fn three_concurrent_lines_oracle() {
        let vp = Point2::new(0.4, -0.25);
        let lines: Vec<(u64, HomLine2)> = [(1.0, 0.3), (-0.2, 0.9), (0.5, -0.7)]
            .iter()
            .enumerate()
            .map(|(i, (x, y))| (i as u64, image_line_through(&vp, &Point2::new(*x, *y)).unwrap()))
            .collect();
        let tls = estimate_vp(&lines).unwrap();
        let oracle = estimate_vp_pairwise(&lines).unwrap();
        assert!(tls.vp.distance(&oracle) < 1e-9);
    }

    #[test]
    fn noisy_bundle_stays_near_oracle() {
        let sigma = 1e-3;
        let delta = Vector3::new(1.0, 0.5, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut pairs = translated_pairs(100, delta, 5);
        let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
        for p in &mut pairs {
            p.p += Vector2::new(rng.sample(normal), rng.sample(normal));
            p.q += Vector2::new(rng.sample(normal), rng.sample(normal));
        }
        let ml = motion_lines(&pairs);
        let tls = estimate_vp(&ml.lines).unwrap().vp.to_euclidean().unwrap();
        let oracle = estimate_vp_pairwise(&ml.lines).unwrap().to_euclidean().unwrap();
        // Endpoint noise moves the intersection by roughly sigma * (distance to vp) / (motion length).
        let truth = Point2::new(delta.x / delta.z, delta.y / delta.z);
        let (dist, motion) = pairs.iter().fold((0.0f64, f64::INFINITY), |(d, m), p| {
            (d.max((p.q - truth).norm()), m.min((p.q - p.p).norm()))
        });
        let bound = 5.0 * sigma * dist / motion;
        assert!(
            (tls - oracle).norm() < bound,
            "{} vs {}",
            (tls - oracle).norm(),
            bound
        );
        assert!((tls - truth).norm() < bound);
    }

    #[test]
    fn accumulation_order_does_not_depend_on_input_order() {
        let pairs = translated_pairs(50, Vector3::new(0.2, 0.3, -1.0), 3);
        let mut lines = motion_lines(&pairs).lines;
        let a = estimate_vp(&lines).unwrap();
        lines.reverse();
        let b = estimate_vp(&lines).unwrap();
        assert_eq!(a, b);
    }

    fn rotate(p: Point2<f64>, theta: f64) -> Point2<f64> {
        let (s, c) = theta.sin_cos();
        Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rotation_moves_vp_with_image(
            seed in 0u64..1000,
            theta in -3.0f64..3.0,
            dx in -2.0f64..2.0, dy in -2.0f64..2.0, dz in 0.5f64..3.0,
        ) {
            let pairs = translated_pairs(30, Vector3::new(dx, dy, dz), seed);
            let base = estimate_vp(&motion_lines(&pairs).lines).unwrap();
            let rotated: Vec<MotionPair> = pairs
                .iter()
                .map(|p| MotionPair { track_id: p.track_id, p: rotate(p.p, theta), q: rotate(p.q, theta) })
                .collect();
            let est = estimate_vp(&motion_lines(&rotated).lines).unwrap();
            let expected = HomPoint2::from_euclidean(&rotate(base.vp.to_euclidean().unwrap(), theta));
            prop_assert!(est.vp.distance(&expected) < 1e-9);
        }

        #[test]
        fn scaling_scales_finite_vp(
            seed in 0u64..1000,
            s in 0.1f64..50.0,
            dx in -2.0f64..2.0, dy in -2.0f64..2.0, dz in 0.5f64..3.0,
        ) {
            let pairs = translated_pairs(30, Vector3::new(dx, dy, dz), seed);
            let base = estimate_vp(&motion_lines(&pairs).lines).unwrap().vp.to_euclidean().unwrap();
            let scaled: Vec<MotionPair> = pairs
                .iter()
                .map(|p| MotionPair { track_id: p.track_id, p: p.p * s, q: p.q * s })
                .collect();
            let est = estimate_vp(&motion_lines(&scaled).lines).unwrap().vp.to_euclidean().unwrap();
            prop_assert!((est - base * s).norm() <= 1e-9 * s.max(1.0) * base.coords.norm().max(1.0));
        }

        #[test]
        fn dropping_a_line_keeps_vp(
            seed in 0u64..1000,
            drop in 0usize..5,
            dx in -2.0f64..2.0, dy in -2.0f64..2.0, dz in 0.5f64..3.0,
        ) {
            let lines = motion_lines(&translated_pairs(5, Vector3::new(dx, dy, dz), seed)).lines;
            let full = estimate_vp(&lines).unwrap();
            let mut fewer = lines.clone();
            fewer.remove(drop);
            let est = estimate_vp(&fewer).unwrap();
            prop_assert!(est.vp.distance(&full.vp) < 1e-9);
        }
    }
}
