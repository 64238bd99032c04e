//! Evaluation metrics for change point estimates.

use crate::detector::Estimate;

/// Two-sided Hausdorff distance between two point sets.
///
/// If either set is empty the distance is `min_spacing` by convention.
/// `min_spacing` must be positive.
pub fn hausdorff(s1: &[usize], s2: &[usize], min_spacing: usize) -> f64 {
    assert!(min_spacing > 0, "min_spacing must be positive");
    if s1.is_empty() || s2.is_empty() {
        return min_spacing as f64;
    }
    directed(s1, s2).max(directed(s2, s1)) as f64
}

fn directed(from: &[usize], to: &[usize]) -> u64 {
    from.iter()
        .map(|&a| {
            to.iter()
                .map(|&b| (a as i64 - b as i64).unsigned_abs())
                .min()
                .expect("nonempty")
        })
        .max()
        .expect("nonempty")
}

/// Hausdorff distance between the estimate and the truth scaled by the
/// minimal spacing and clipped to `[0, 1]`. An empty estimate scores 1.
pub fn scaled_error(estimate: &Estimate, truth: &[usize], min_spacing: usize) -> f64 {
    let est = estimate.locations();
    (hausdorff(&est, truth, min_spacing) / min_spacing as f64).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Estimate;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn direct_definition_examples() {
        assert_abs_diff_eq!(hausdorff(&[50], &[50], 50), 0.0);
        // max(min(2, 10), max(2, 10)) = 10
        assert_abs_diff_eq!(hausdorff(&[50], &[48, 60], 10), 10.0);
        assert_abs_diff_eq!(hausdorff(&[50], &[], 50), 50.0);
        assert_abs_diff_eq!(hausdorff(&[], &[], 7), 7.0);
    }

    #[test]
    fn scaled_error_examples() {
        let exact = Estimate::from_locations(&[50]);
        assert_abs_diff_eq!(scaled_error(&exact, &[50], 50), 0.0);

        let empty = Estimate::from_locations(&[]);
        assert_abs_diff_eq!(scaled_error(&empty, &[50], 50), 1.0);

        let off = Estimate::from_locations(&[40]);
        assert_abs_diff_eq!(scaled_error(&off, &[50], 50), 0.2);

        // Clipping at 1.
        let far = Estimate::from_locations(&[500]);
        assert_abs_diff_eq!(scaled_error(&far, &[50], 50), 1.0);
    }

    proptest! {
        #[test]
        fn hausdorff_is_symmetric(
            a in proptest::collection::vec(0usize..200, 0..6),
            b in proptest::collection::vec(0usize..200, 0..6),
            d in 1usize..100,
        ) {
            prop_assert_eq!(hausdorff(&a, &b, d), hausdorff(&b, &a, d));
        }

        #[test]
        fn hausdorff_triangle_inequality_on_nonempty_sets(
            a in proptest::collection::vec(0usize..200, 1..6),
            b in proptest::collection::vec(0usize..200, 1..6),
            c in proptest::collection::vec(0usize..200, 1..6),
        ) {
            let ab = hausdorff(&a, &b, 1);
            let bc = hausdorff(&b, &c, 1);
            let ac = hausdorff(&a, &c, 1);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn scaled_error_is_in_unit_interval(
            est in proptest::collection::vec(0usize..500, 0..5),
            truth in proptest::collection::vec(0usize..500, 0..5),
            d in 1usize..100,
        ) {
            let e = Estimate::from_locations(&est);
            let s = scaled_error(&e, &truth, d);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
