//! Kraskov–Stögbauer–Grassberger mutual information, first algorithm.
//!
//! For each point the joint max-norm distance ε to its k-th neighbour is
//! found; the marginal counts are the numbers of *other* points whose
//! coordinate lies strictly within ε. No jitter is added, so duplicated
//! points can produce ε = 0 and zero marginal counts; the formula is applied
//! unchanged in that case.

use super::knn::NeighborSearch;
use super::special::digamma;
use super::EstimatorError;
use crate::sample::PairedSample;

/// KSG mutual information in nats. The value may be negative at small n.
pub fn ksg_mi(sample: &PairedSample, k: usize, search: &dyn NeighborSearch) -> Result<f64, EstimatorError> {
    if k == 0 {
        return Err(EstimatorError::InvalidK(k));
    }
    let n = sample.n();
    if n <= k {
        return Err(EstimatorError::InsufficientSample { n, required: k + 1 });
    }
    let points = sample.pairs();
    let eps = search.kth_distances(points, k);

    let mut xs = sample.x1();
    let mut ys = sample.x2();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);

    let mut acc = 0.0;
    for (&(x, y), &e) in points.iter().zip(&eps) {
        let nx = strict_marginal_count(&xs, x, e);
        let ny = strict_marginal_count(&ys, y, e);
        acc += digamma(nx as f64 + 1.0) + digamma(ny as f64 + 1.0);
    }
    let nf = n as f64;
    Ok(digamma(k as f64) - acc / nf + digamma(nf))
}

/// Number of values v ≠ (this occurrence of) `center` with |v − center| < eps,
/// in a sorted slice that contains `center`.
///
/// The two binary searches use the same floating-point predicate as a direct
/// scan, so the count is identical to brute-force counting.
fn strict_marginal_count(sorted: &[f64], center: f64, eps: f64) -> usize {
    if eps <= 0.0 {
        return 0;
    }
    // values strictly left of the window: v < center and center − v ≥ eps
    let lo = sorted.partition_point(|&v| v < center && center - v >= eps);
    // values up to the right edge of the window: v < center or v − center < eps
    let hi = sorted.partition_point(|&v| v < center || v - center < eps);
    hi - lo - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::knn::{BruteForce, KdTreeSearch};
    use crate::estimators::special::EULER_GAMMA;
    use approx::assert_relative_eq;

    #[test]
    fn five_point_reference_value() {
        // Reference from an exhaustive scan with scipy.special.digamma.
        let s = PairedSample::new("t", vec![(0.1, 0.3), (0.5, 0.2), (0.9, 0.8), (0.4, 0.6), (0.7, 0.95)]).unwrap();
        let mi = ksg_mi(&s, 2, &BruteForce).unwrap();
        assert_relative_eq!(mi, 0.149_999_999_999_999_9, epsilon = 1e-12);
        assert_eq!(mi, ksg_mi(&s, 2, &KdTreeSearch).unwrap());
    }

    #[test]
    fn all_duplicates_use_zero_counts() {
        // ε = 0 everywhere → nx = ny = 0 → ψ(k) − 2ψ(1) + ψ(n)
        let s = PairedSample::new("t", vec![(2.0, 3.0); 6]).unwrap();
        let expected = digamma(3.0) + 2.0 * EULER_GAMMA + digamma(6.0);
        assert_relative_eq!(ksg_mi(&s, 3, &BruteForce).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn rejects_small_samples() {
        let s = PairedSample::from_columns("t", &[1., 2., 3.], &[3., 1., 2.]).unwrap();
        assert!(matches!(
            ksg_mi(&s, 3, &BruteForce),
            Err(EstimatorError::InsufficientSample { n: 3, required: 4 })
        ));
        assert!(matches!(ksg_mi(&s, 0, &BruteForce), Err(EstimatorError::InvalidK(0))));
    }

    #[test]
    fn marginal_count_matches_scan() {
        let v: [f64; 7] = [0.0, 0.1, 0.1, 0.3, 0.5, 0.5, 0.7];
        for &c in &v {
            for &e in &[0.0, 0.1, 0.2, 0.4, 1.0] {
                let scan = v.iter().filter(|&&x| (x - c).abs() < e).count().saturating_sub(1);
                let expected = if e > 0.0 { scan } else { 0 };
                assert_eq!(strict_marginal_count(&v, c, e), expected, "c={c} e={e}");
            }
        }
    }
}
