//! One-sided paired comparisons at the 95% level.

use serde::{Deserialize, Serialize};

/// One-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.644_853_626_951_472_2;

/// Mean and standard error of the paired differences `a − b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedDiff {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

impl PairedDiff {
    /// `a` is smaller than `b`: the upper confidence bound of the mean difference is negative.
    pub fn lower_at_95(&self) -> bool {
        self.mean + Z_95 * self.se < 0.0
    }

    /// `a` is larger than `b`.
    pub fn higher_at_95(&self) -> bool {
        self.mean - Z_95 * self.se > 0.0
    }

    /// `a` is not larger than `b`: the observed excess stays within the one-sided margin.
    pub fn not_greater_at_95(&self) -> bool {
        self.mean <= Z_95 * self.se
    }
}

/// Pairs `a[i]` with `b[i]`.
///
/// # Panics
/// If the slices differ in length or hold fewer than two values.
pub fn paired_diff(a: &[f64], b: &[f64]) -> PairedDiff {
    assert_eq!(a.len(), b.len(), "paired samples must align");
    assert!(a.len() >= 2, "need at least two pairs");
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    PairedDiff {
        n,
        mean,
        se: (var / n as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clear_difference() {
        let a = [0.0; 100];
        let b: Vec<f64> = (0..100).map(|i| f64::from(i % 2)).collect();
        let d = paired_diff(&a, &b);
        assert!((d.mean + 0.5).abs() < 1e-12);
        assert!(d.lower_at_95());
        assert!(d.not_greater_at_95());
        assert!(!d.higher_at_95());
    }

    #[test]
    fn identical_samples_are_not_lower() {
        let a = [1.0, 0.0, 1.0, 0.0];
        let d = paired_diff(&a, &a);
        assert_eq!(d.mean, 0.0);
        assert!(!d.lower_at_95());
        assert!(d.not_greater_at_95());
    }

    #[test]
    fn small_excess_within_margin() {
        let a: Vec<f64> = (0..200).map(|i| f64::from(i % 10 == 0)).collect();
        let b: Vec<f64> = (0..200).map(|i| f64::from(i % 10 == 1 || i == 3)).collect();
        let d = paired_diff(&a, &b);
        assert!(d.mean < 0.0 || d.not_greater_at_95());
    }
}
