//! Confining potential families `V_lambda(s, r) = lambda v(r; s)` and their
//! tuning so that the fast ground energy does not depend on `s`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::EmbeddingCurve;
use crate::series::CosineSeries;
#[allow(unused_imports)]
use num_traits::Float;

const PROFILE_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfinementKind {
    Smooth,
    Hardwall,
}

/// Coefficients of the confinement at one arc-length position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalProfile {
    /// `v(r) = omega0^2 r^2 / 2 + cubic r^3 + quartic r^4`.
    Smooth { omega0: f64, cubic: f64, quartic: f64 },
    /// Infinite well of width `width / lambda` centred on the curve.
    Hardwall { width: f64 },
}

impl LocalProfile {
    /// `v(r)` at unit scale (hard walls return `INFINITY` outside the well).
    pub fn eval(&self, lambda: f64, r: f64) -> f64 {
        match *self {
            LocalProfile::Smooth { omega0, cubic, quartic } => {
                let r2 = r * r;
                lambda * (0.5 * omega0 * omega0 * r2 + cubic * r2 * r + quartic * r2 * r2)
            }
            LocalProfile::Hardwall { width } => {
                if r.abs() > 0.5 * width / lambda {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    /// Harmonic-order fast ground energy: `hbar omega0 sqrt(lambda) / 2` or
    /// `pi^2 hbar^2 lambda^2 / (2 w^2)`.
    pub fn leading_ground_energy(&self, lambda: f64, hbar: f64) -> f64 {
        match *self {
            LocalProfile::Smooth { omega0, .. } => 0.5 * hbar * omega0 * lambda.sqrt(),
            LocalProfile::Hardwall { width } => {
                let pi = core::f64::consts::PI;
                pi * pi * hbar * hbar * lambda * lambda / (2.0 * width * width)
            }
        }
    }

    /// Fast level spacing at harmonic order (first gap).
    pub fn leading_gap(&self, lambda: f64, hbar: f64) -> f64 {
        match *self {
            LocalProfile::Smooth { omega0, .. } => hbar * omega0 * lambda.sqrt(),
            LocalProfile::Hardwall { .. } => 3.0 * self.leading_ground_energy(lambda, hbar),
        }
    }

    /// The lambda-independent anharmonic ground-energy shift,
    /// `3 c hbar^2 / (4 omega^2) - 11 b^2 hbar^2 / (8 omega^4)`.
    pub fn anharmonic_shift(&self, hbar: f64) -> f64 {
        match *self {
            LocalProfile::Smooth { omega0, cubic, quartic } => {
                let w2 = omega0 * omega0;
                hbar * hbar * (0.75 * quartic / w2 - 11.0 * cubic * cubic / (8.0 * w2 * w2))
            }
            LocalProfile::Hardwall { .. } => 0.0,
        }
    }
}

/// A lambda-parametrised confining potential around a curve of period `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfinementFamily {
    profile: Profile,
    tuned: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Smooth {
        omega0: CosineSeries,
        cubic: CosineSeries,
        quartic: CosineSeries,
    },
    Hardwall {
        width: CosineSeries,
    },
}

fn sample_min(series: &CosineSeries) -> (f64, f64) {
    (0..PROFILE_SAMPLES)
        .map(|i| {
            let s = series.period() * i as f64 / PROFILE_SAMPLES as f64;
            (s, series.eval(s))
        })
        .fold((0.0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc })
}

impl ConfinementFamily {
    pub fn smooth(omega0: CosineSeries, cubic: CosineSeries, quartic: CosineSeries) -> Result<Self> {
        let (s, value) = sample_min(&omega0);
        if !(value > 0.0) {
            return Err(Error::NonPositiveFrequency { s, value });
        }
        let period = omega0.period();
        if cubic.period() != period || quartic.period() != period {
            return Err(Error::InvalidArgument(
                "coefficient series must share one period".into(),
            ));
        }
        let tuned = omega0.is_constant();
        Ok(Self {
            profile: Profile::Smooth {
                omega0,
                cubic,
                quartic,
            },
            tuned,
        })
    }

    /// Constant-frequency harmonic family on a curve of length `period`.
    pub fn harmonic(omega0: f64, period: f64) -> Result<Self> {
        Self::smooth(
            CosineSeries::constant(omega0, period),
            CosineSeries::zero(period),
            CosineSeries::zero(period),
        )
    }

    pub fn hardwall(width: CosineSeries) -> Result<Self> {
        let (s, value) = sample_min(&width);
        if !(value > 0.0) {
            return Err(Error::NonPositiveWidth { s, value });
        }
        let tuned = width.is_constant();
        Ok(Self {
            profile: Profile::Hardwall { width },
            tuned,
        })
    }

    pub fn kind(&self) -> ConfinementKind {
        match self.profile {
            Profile::Smooth { .. } => ConfinementKind::Smooth,
            Profile::Hardwall { .. } => ConfinementKind::Hardwall,
        }
    }

    pub fn is_tuned(&self) -> bool {
        self.tuned
    }

    pub fn period(&self) -> f64 {
        match &self.profile {
            Profile::Smooth { omega0, .. } => omega0.period(),
            Profile::Hardwall { width } => width.period(),
        }
    }

    /// Checks that the coefficient period matches the curve length.
    pub fn check_curve(&self, curve: &EmbeddingCurve) -> Result<()> {
        let l = curve.length();
        if (self.period() - l).abs() > 1e-9 * l {
            return Err(Error::InvalidArgument(format!(
                "confinement period {} differs from curve length {}",
                self.period(),
                l
            )));
        }
        Ok(())
    }

    /// The same family with its coefficient series re-expressed on period `l`.
    pub fn on_period(&self, l: f64) -> Self {
        let profile = match &self.profile {
            Profile::Smooth {
                omega0,
                cubic,
                quartic,
            } => Profile::Smooth {
                omega0: omega0.with_period(l),
                cubic: cubic.with_period(l),
                quartic: quartic.with_period(l),
            },
            Profile::Hardwall { width } => Profile::Hardwall {
                width: width.with_period(l),
            },
        };
        Self {
            profile,
            tuned: self.tuned,
        }
    }

    pub fn local(&self, s: f64) -> LocalProfile {
        match &self.profile {
            Profile::Smooth {
                omega0,
                cubic,
                quartic,
            } => LocalProfile::Smooth {
                omega0: omega0.eval(s),
                cubic: cubic.eval(s),
                quartic: quartic.eval(s),
            },
            Profile::Hardwall { width } => LocalProfile::Hardwall { width: width.eval(s) },
        }
    }

    /// `lambda v(r; s)`; hard walls give `f64::INFINITY` outside the well.
    pub fn evaluate(&self, lambda: f64, s: f64, r: f64) -> f64 {
        self.local(s).eval(lambda, r)
    }

    /// Mean frequency (smooth) or mean width (hard wall).
    pub fn mean_strength(&self) -> f64 {
        match &self.profile {
            Profile::Smooth { omega0, .. } => omega0.mean(),
            Profile::Hardwall { width } => width.mean(),
        }
    }

    /// Largest `omega0` (smooth) or `w` (hard wall) over the period.
    pub fn max_strength(&self) -> f64 {
        self.strength_extreme(f64::max, f64::NEG_INFINITY)
    }

    pub fn min_strength(&self) -> f64 {
        self.strength_extreme(f64::min, f64::INFINITY)
    }

    fn strength_extreme(&self, pick: fn(f64, f64) -> f64, init: f64) -> f64 {
        let series = match &self.profile {
            Profile::Smooth { omega0, .. } => omega0,
            Profile::Hardwall { width } => width,
        };
        (0..PROFILE_SAMPLES)
            .map(|i| series.eval(series.period() * i as f64 / PROFILE_SAMPLES as f64))
            .fold(init, pick)
    }

    /// Coefficient series that carry `s` dependence into the fast problem.
    pub fn series(&self) -> Vec<&CosineSeries> {
        match &self.profile {
            Profile::Smooth {
                omega0,
                cubic,
                quartic,
            } => alloc::vec![omega0, cubic, quartic],
            Profile::Hardwall { width } => alloc::vec![width],
        }
    }

    pub fn quartic(&self) -> Option<&CosineSeries> {
        match &self.profile {
            Profile::Smooth { quartic, .. } => Some(quartic),
            Profile::Hardwall { .. } => None,
        }
    }

    pub fn cubic(&self) -> Option<&CosineSeries> {
        match &self.profile {
            Profile::Smooth { cubic, .. } => Some(cubic),
            Profile::Hardwall { .. } => None,
        }
    }

    /// Same family with `omega0` (or the wall width) multiplied by `factor`.
    pub fn with_strength_scaled(&self, factor: f64) -> Result<Self> {
        match &self.profile {
            Profile::Smooth {
                omega0,
                cubic,
                quartic,
            } => Self::smooth(omega0.scaled(factor), cubic.clone(), quartic.clone()),
            Profile::Hardwall { width } => Self::hardwall(width.scaled(factor)),
        }
    }

    /// Replaces `omega0(s)` by its mean (or `w(s)` by its mean) and marks the
    /// family tuned. Anharmonic coefficients are left untouched.
    pub fn tune_harmonic(&self) -> Result<Self> {
        match &self.profile {
            Profile::Smooth {
                omega0,
                cubic,
                quartic,
            } => {
                let (s, value) = sample_min(omega0);
                if !(value > 0.0) {
                    return Err(Error::NonPositiveFrequency { s, value });
                }
                let mut tuned = Self::smooth(
                    CosineSeries::constant(omega0.mean(), omega0.period()),
                    cubic.clone(),
                    quartic.clone(),
                )?;
                tuned.tuned = true;
                Ok(tuned)
            }
            Profile::Hardwall { width } => {
                let (s, value) = sample_min(width);
                if !(value > 0.0) {
                    return Err(Error::NonPositiveWidth { s, value });
                }
                let mut tuned = Self::hardwall(CosineSeries::constant(width.mean(), width.period()))?;
                tuned.tuned = true;
                Ok(tuned)
            }
        }
    }

    /// The lambda-independent anharmonic ground-energy shift at `s`.
    pub fn residual_shift(&self, s: f64, hbar: f64) -> f64 {
        self.local(s).anharmonic_shift(hbar)
    }
}

/// Spread of the fast ground energy over the curve at several scales.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub lambdas: Vec<f64>,
    /// `max_s E_GR - min_s E_GR` per scale.
    pub max_egr_deviation: Vec<f64>,
    /// Mean of `E_GR(s) - E_harmonic(lambda)` per scale.
    pub mean_offset: Vec<f64>,
    pub s: Vec<f64>,
    /// Predicted anharmonic shift at each `s`.
    pub residual_shift: Vec<f64>,
}

impl TuningReport {
    /// Largest relative change of the spread between consecutive scales.
    pub fn deviation_variation(&self) -> f64 {
        self.max_egr_deviation
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / w[0].abs().max(w[1].abs()).max(1e-300))
            .fold(0.0, f64::max)
    }

    pub fn offset_variation(&self) -> f64 {
        self.mean_offset
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / w[0].abs().max(w[1].abs()).max(1e-300))
            .fold(0.0, f64::max)
    }
}

/// Solves the fast problem at `n_samples` points along the curve for every
/// scale and reports the spread of the ground energy.
pub fn ground_energy_flatness(
    family: &ConfinementFamily,
    lambdas: &[f64],
    curve: &EmbeddingCurve,
    hbar: f64,
    n_samples: usize,
    n_r: usize,
) -> Result<TuningReport> {
    if !family.is_tuned() {
        return Err(Error::UntunedFamily);
    }
    let l = curve.length();
    let s: Vec<f64> = (0..n_samples).map(|i| l * i as f64 / n_samples as f64).collect();
    let mut max_egr_deviation = Vec::with_capacity(lambdas.len());
    let mut mean_offset = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let setup = crate::reduction::FastSetup::new(curve, family, lambda, hbar, n_r)?;
        let reference = setup.reference_energy()?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &si in &s {
            let e = setup.solve(si)?.e_gr;
            lo = lo.min(e);
            hi = hi.max(e);
            sum += e - reference;
        }
        max_egr_deviation.push(hi - lo);
        mean_offset.push(sum / n_samples as f64);
    }
    Ok(TuningReport {
        lambdas: lambdas.to_vec(),
        max_egr_deviation,
        mean_offset,
        residual_shift: s.iter().map(|si| family.residual_shift(*si, hbar)).collect(),
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn smooth_evaluation() {
        let f = ConfinementFamily::harmonic(1.0, 2.0 * PI).unwrap();
        assert!((f.evaluate(100.0, 0.0, 0.1) - 0.5).abs() < 1e-14);
        assert_eq!(f.evaluate(100.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn hardwall_exterior_is_infinite() {
        let f = ConfinementFamily::hardwall(CosineSeries::constant(1.0, 1.0)).unwrap();
        assert!(f.evaluate(10.0, 0.0, 0.06).is_infinite());
        assert_eq!(f.evaluate(10.0, 0.0, 0.04), 0.0);
    }

    #[test]
    fn tuning_takes_the_mean() {
        let l = 2.0 * PI;
        let f = ConfinementFamily::smooth(
            CosineSeries::new(vec![1.0, 0.1], l),
            CosineSeries::zero(l),
            CosineSeries::new(vec![0.3, 0.3], l),
        )
        .unwrap();
        assert!(!f.is_tuned());
        let t = f.tune_harmonic().unwrap();
        assert!(t.is_tuned());
        assert_eq!(t.mean_strength(), 1.0);
        assert_eq!(t.max_strength(), 1.0);
        assert_eq!(t.quartic(), f.quartic());
        let c = ConfinementFamily::harmonic(2.0, l).unwrap();
        assert_eq!(c.tune_harmonic().unwrap(), c);
    }

    #[test]
    fn non_positive_frequency_rejected() {
        let l = 1.0;
        let err = ConfinementFamily::smooth(
            CosineSeries::new(vec![0.5, 1.0], l),
            CosineSeries::zero(l),
            CosineSeries::zero(l),
        );
        assert!(matches!(err, Err(Error::NonPositiveFrequency { .. })));
    }

    #[test]
    fn quartic_shift_formula() {
        let p = LocalProfile::Smooth {
            omega0: 2.0,
            cubic: 0.0,
            quartic: 0.4,
        };
        assert!((p.anharmonic_shift(1.0) - 0.075).abs() < 1e-15);
    }
}
