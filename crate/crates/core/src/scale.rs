//! Robust residual scale: median of absolute residuals and normalized MAD.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normal-consistency divisor for the median absolute residual.
pub const MEDIAN_ABS_DIVISOR: f64 = 0.6745;
/// Normal-consistency factor for the median absolute deviation.
pub const MAD_FACTOR: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleMethod {
    /// `median|e| / 0.6745`
    MedianAbs0675,
    /// `1.4826 · median|e - median(e)|`
    Mad14826,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub value: f64,
    pub method: ScaleMethod,
}

/// Median with the midpoint convention for even lengths. `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    median_in_place(&mut v)
}

pub(crate) fn median_in_place(v: &mut [f64]) -> Option<f64> {
    let n = v.len();
    if n == 0 {
        return None;
    }
    let mid = n / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *upper;
    if n % 2 == 1 {
        Some(hi)
    } else {
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lo + hi))
    }
}

/// `median|e| / 0.6745`.
pub fn initial_scale(residuals: &[f64]) -> Result<ScaleEstimate> {
    let mut abs: Vec<f64> = residuals.iter().map(|e| e.abs()).collect();
    let m = median_in_place(&mut abs).ok_or(Error::ZeroScale)?;
    if !(m > 0.0) {
        return Err(Error::ZeroScale);
    }
    Ok(ScaleEstimate {
        value: m / MEDIAN_ABS_DIVISOR,
        method: ScaleMethod::MedianAbs0675,
    })
}

/// `1.4826 · median|e - median(e)|` over the pooled residuals.
pub fn mad_scale(residuals: &[f64]) -> Result<ScaleEstimate> {
    let value = mad_value(residuals);
    if !(value > 0.0) {
        return Err(Error::ZeroScale);
    }
    Ok(ScaleEstimate {
        value,
        method: ScaleMethod::Mad14826,
    })
}

/// Normalized MAD without the zero check; 0 for an empty input.
pub(crate) fn mad_value(residuals: &[f64]) -> f64 {
    let mut buf = residuals.to_vec();
    let Some(center) = median_in_place(&mut buf) else {
        return 0.0;
    };
    for (b, e) in buf.iter_mut().zip(residuals) {
        *b = (e - center).abs();
    }
    MAD_FACTOR * median_in_place(&mut buf).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn initial_scale_examples() {
        let s = initial_scale(&[-1.0, 0.0, 1.0]).unwrap();
        assert!((s.value - 1.48258).abs() < 1e-5);
        assert_eq!(s.method, ScaleMethod::MedianAbs0675);
        let s = initial_scale(&[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        assert!((s.value - 1.0 / 0.6745).abs() < 1e-12);
        assert!(matches!(initial_scale(&[0.0, 0.0, 0.0]), Err(Error::ZeroScale)));
    }

    #[test]
    fn mad_examples() {
        let s = mad_scale(&[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        assert!((s.value - 1.4826).abs() < 1e-12);
        assert_eq!(s.method, ScaleMethod::Mad14826);
        assert!(matches!(mad_scale(&[5.0; 4]), Err(Error::ZeroScale)));
    }

    #[test]
    fn mad_is_consistent_for_the_normal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = mad_scale(&draws).unwrap().value;
        assert!((0.85..=1.15).contains(&s), "{s}");
    }

    #[test]
    fn initial_scale_is_not_translation_invariant() {
        let e = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let shifted: Vec<f64> = e.iter().map(|v| v + 3.0).collect();
        assert_ne!(initial_scale(&e).unwrap().value, initial_scale(&shifted).unwrap().value);
        assert_eq!(mad_scale(&e).unwrap().value, mad_scale(&shifted).unwrap().value);
    }

    #[test]
    fn mad_breaks_down_at_half() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 101;
        let clean: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut dirty = clean.clone();
        for v in dirty.iter_mut().take((n - 1) / 2) {
            *v = 1e6;
        }
        let sd = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        };
        let ratio_mad = mad_scale(&dirty).unwrap().value / mad_scale(&clean).unwrap().value;
        let ratio_sd = sd(&dirty) / sd(&clean);
        assert!(ratio_mad < 10.0, "{ratio_mad}");
        assert!(ratio_sd > 1000.0, "{ratio_sd}");
    }

    proptest! {
        #[test]
        fn scale_equivariance(v in prop::collection::vec(-100.0f64..100.0, 3..40), c in -50.0f64..50.0) {
            prop_assume!(c.abs() > 1e-3);
            let scaled: Vec<f64> = v.iter().map(|e| c * e).collect();
            if let (Ok(a), Ok(b)) = (mad_scale(&v), mad_scale(&scaled)) {
                prop_assert!((b.value - c.abs() * a.value).abs() <= 1e-9 * b.value.max(1.0));
            }
            if let (Ok(a), Ok(b)) = (initial_scale(&v), initial_scale(&scaled)) {
                prop_assert!((b.value - c.abs() * a.value).abs() <= 1e-9 * b.value.max(1.0));
            }
        }

        #[test]
        fn mad_translation_invariance(v in prop::collection::vec(-100.0f64..100.0, 3..40), a in -1e3f64..1e3) {
            let shifted: Vec<f64> = v.iter().map(|e| e + a).collect();
            let (m0, m1) = (mad_value(&v), mad_value(&shifted));
            prop_assert!((m0 - m1).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}
