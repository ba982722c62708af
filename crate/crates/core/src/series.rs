//! Finite cosine series on a periodic coordinate.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// `f(s) = sum_k c_k cos(2 pi k s / period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    coeffs: Vec<f64>,
    period: f64,
}

impl CosineSeries {
    pub fn new(coeffs: Vec<f64>, period: f64) -> Self {
        Self { coeffs, period }
    }

    pub fn constant(value: f64, period: f64) -> Self {
        Self::new(alloc::vec![value], period)
    }

    pub fn zero(period: f64) -> Self {
        Self::new(Vec::new(), period)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Same coefficients on a different period.
    pub fn with_period(&self, period: f64) -> Self {
        Self::new(self.coeffs.clone(), period)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| *c == 0.0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let w = 2.0 * PI / self.period;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k == 0 { *c } else { c * (w * k as f64 * s).cos() })
            .sum()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let w = 2.0 * PI / self.period;
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| -c * w * k as f64 * (w * k as f64 * s).sin())
            .sum()
    }

    /// Indices of harmonics with a non-negligible coefficient.
    pub fn active_harmonics(&self) -> Vec<usize> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > 1e-12 * scale.max(1e-300))
            .map(|(k, _)| k)
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect(), self.period)
    }
}

/// Cosine coefficients of periodic samples `f(i L / n)`, harmonics `0..count`.
pub fn cosine_coefficients(samples: &[f64], count: usize) -> Vec<f64> {
    let n = samples.len() as f64;
    (0..count)
        .map(|k| {
            let sum: f64 = samples
                .iter()
                .enumerate()
                .map(|(i, f)| f * (2.0 * PI * (k * i) as f64 / n).cos())
                .sum();
            if k == 0 {
                sum / n
            } else {
                2.0 * sum / n
            }
        })
        .collect()
}

/// Sine coefficients of periodic samples, harmonics `0..count` (index 0 is always zero).
pub fn sine_coefficients(samples: &[f64], count: usize) -> Vec<f64> {
    let n = samples.len() as f64;
    (0..count)
        .map(|k| {
            let sum: f64 = samples
                .iter()
                .enumerate()
                .map(|(i, f)| f * (2.0 * PI * (k * i) as f64 / n).sin())
                .sum();
            2.0 * sum / n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn eval_and_derivative() {
        let f = CosineSeries::new(vec![1.0, 0.5], 2.0 * PI);
        assert!((f.eval(0.0) - 1.5).abs() < 1e-15);
        assert!((f.eval(PI) - 0.5).abs() < 1e-15);
        assert!((f.derivative(PI / 2.0) + 0.5).abs() < 1e-15);
        assert_eq!(f.mean(), 1.0);
        assert!(!f.is_constant());
    }

    #[test]
    fn coefficient_round_trip() {
        let f = CosineSeries::new(vec![0.2, 0.0, -0.3, 0.1], 3.0);
        let n = 64;
        let samples: Vec<f64> = (0..n).map(|i| f.eval(3.0 * i as f64 / n as f64)).collect();
        let c = cosine_coefficients(&samples, 6);
        for (k, expected) in [0.2, 0.0, -0.3, 0.1, 0.0, 0.0].iter().enumerate() {
            assert!((c[k] - expected).abs() < 1e-13, "k={k}");
        }
        assert!(sine_coefficients(&samples, 6).iter().all(|s| s.abs() < 1e-13));
        assert_eq!(f.active_harmonics(), vec![0, 2, 3]);
    }
}
