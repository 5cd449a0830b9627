use super::MotionHypothesis;

/// Per-cell sampling weight in `[0, 1]`; high where no hypothesis fits.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyField {
    pub s: Vec<f64>,
}

impl EntropyField {
    /// Maximum uncertainty on valid cells, zero elsewhere.
    pub fn uniform(valid: &[bool]) -> Self {
        Self {
            s: valid.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Mean over valid cells.
    pub fn mean(&self, valid: &[bool]) -> f64 {
        let (sum, n) = self
            .s
            .iter()
            .zip(valid)
            .filter(|(_, v)| **v)
            .fold((0.0, 0usize), |(s, n), (x, _)| (s + x, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// `S_i = 1 - exp(-lambda * E_i - delta)` with `E_i` the smallest error any
/// hypothesis assigns to cell `i`. Before any hypothesis exists valid cells
/// carry `S_i = 1`; invalid cells always carry 0.
pub fn update_entropy(hypotheses: &[MotionHypothesis], valid: &[bool], lambda: f64, delta: f64) -> EntropyField {
    if hypotheses.is_empty() {
        return EntropyField::uniform(valid);
    }
    let s = (0..valid.len())
        .map(|i| {
            if !valid[i] {
                return 0.0;
            }
            let best = hypotheses
                .iter()
                .filter_map(|h| h.errors[i])
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                1.0 - (-lambda * best - delta).exp()
            } else {
                1.0
            }
        })
        .collect();
    EntropyField { s }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use proptest::prelude::*;

    fn hyp(errors: Vec<Option<f64>>) -> MotionHypothesis {
        MotionHypothesis {
            motion: Pose::identity(),
            inliers: errors.iter().map(|e| e.is_some_and(|e| e < 3e-5)).collect(),
            support: 0,
            errors,
        }
    }

    #[test]
    fn zero_error_gives_delta_floor() {
        let s = update_entropy(&[hyp(vec![Some(0.0)])], &[true], 1e3, 1e-2);
        assert!((s.s[0] - (1.0 - (-0.01f64).exp())).abs() < 1e-15);
        assert!((s.s[0] - 0.009_950_166).abs() < 1e-9);
    }

    #[test]
    fn large_error_saturates() {
        let s = update_entropy(&[hyp(vec![Some(1.0)]), hyp(vec![Some(1.0)])], &[true], 1e3, 1e-2);
        assert!((s.s[0] - 1.0).abs() < 1e-300);
    }

    #[test]
    fn no_hypotheses_is_uniform() {
        let s = update_entropy(&[], &[true, false, true], 1e3, 1e-2);
        assert_eq!(s.s, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn best_hypothesis_wins() {
        let s = update_entropy(&[hyp(vec![Some(1.0)]), hyp(vec![Some(0.0)])], &[true], 1e3, 1e-2);
        assert!(s.s[0] < 0.01);
    }

    proptest! {
        #[test]
        fn appending_never_increases_entropy(
            errs in proptest::collection::vec(proptest::collection::vec(0.0f64..1e-2, 8), 1..6),
            extra in proptest::collection::vec(0.0f64..1e-2, 8),
        ) {
            let valid = vec![true; 8];
            let mut hs: Vec<_> = errs.into_iter().map(|e| hyp(e.into_iter().map(Some).collect())).collect();
            let before = update_entropy(&hs, &valid, 1e3, 1e-2);
            hs.push(hyp(extra.into_iter().map(Some).collect()));
            let after = update_entropy(&hs, &valid, 1e3, 1e-2);
            let floor = 1.0 - (-1e-2f64).exp();
            for (a, b) in after.s.iter().zip(&before.s) {
                prop_assert!(a <= b);
                prop_assert!(*a >= floor - 1e-15 && *a <= 1.0);
            }
        }
    }
}
