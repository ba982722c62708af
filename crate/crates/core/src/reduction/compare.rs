//! Reports built on the reduction: ambiguity between confinement families,
//! limit versus direct quantization, and the adiabatic coupling-to-gap ratio.

use alloc::format;
use alloc::vec::Vec;

use super::{
    assemble_v_eff, fast_solutions_on_grid, log_scale_rates, slow_derivatives, EffectivePotentialEstimate,
    FastSetup,
};
use crate::classical::{family_deviation, TubeRun};
use crate::error::{Error, Result};
use crate::geometry::EmbeddingCurve;
use crate::numeric::{least_squares, power_law_exponent, LineFit};
use crate::pool::WorkPool;
use crate::potentials::ConfinementFamily;
use crate::qsolve::{
    build_direct_hamiltonian, build_laplace_beltrami_1d, lowest_eigenpairs, Axis, DirectManifold, FlatMetric, Grid1D,
};
use crate::series::CosineSeries;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

/// Least-squares fit `V_eff ~ c kappa^2 (+ offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFit {
    pub coefficient: f64,
    pub offset: f64,
    pub residual_rms: f64,
    /// Residual rms over the range of the fitted values.
    pub relative_residual: f64,
}

impl GeometricFit {
    pub fn fit(curve: &EmbeddingCurve, s: &[f64], values: &[f64], with_offset: bool) -> Result<Self> {
        if s.len() != values.len() || s.is_empty() {
            return Err(Error::InvalidArgument("fit needs matching, non-empty samples".into()));
        }
        let k2: Vec<f64> = s.iter().map(|x| curve.curvature(*x).powi(2)).collect();
        let cols = if with_offset { 2 } else { 1 };
        let a = DMatrix::from_fn(s.len(), cols, |i, j| if j == 0 { k2[i] } else { 1.0 });
        let b = DVector::from_column_slice(values);
        let c = least_squares(&a, &b)?;
        let fitted = &a * &c;
        let rms = ((&fitted - &b).norm_squared() / s.len() as f64).sqrt();
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let range = hi - lo;
        Ok(Self {
            coefficient: c[0],
            offset: if with_offset { c[1] } else { 0.0 },
            residual_rms: rms,
            relative_residual: if range > 0.0 { rms / range } else { 0.0 },
        })
    }
}

/// Whether `V_eff` cannot be written as `a kappa^2 + b`. On curves of
/// constant curvature any variation beyond the uncertainty counts.
pub fn is_non_geometric(curve: &EmbeddingCurve, estimate: &EffectivePotentialEstimate) -> Result<bool> {
    let kappa: Vec<f64> = estimate.s.iter().map(|s| curve.curvature(*s)).collect();
    let kmax = kappa.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kmin = kappa.iter().copied().fold(f64::INFINITY, f64::min);
    let noise = 2.0 * estimate.max_uncertainty();
    if kmax - kmin <= 1e-9 * kmax.abs().max(1.0) {
        return Ok(estimate.range() > noise);
    }
    let fit = GeometricFit::fit(curve, &estimate.s, &estimate.values, true)?;
    Ok(fit.relative_residual > 0.1 && fit.residual_rms > noise)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityOptions {
    pub n_s: usize,
    pub n_r: usize,
    /// Scales for the classical trajectory comparison.
    pub classical_lambdas: Vec<f64>,
    pub run: TubeRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityReport {
    pub s: Vec<f64>,
    pub a: EffectivePotentialEstimate,
    pub b: EffectivePotentialEstimate,
    /// `V_eff^B - V_eff^A`.
    pub difference: Vec<f64>,
    /// Perturbative anharmonic shift difference.
    pub predicted: Vec<f64>,
    /// Largest `|difference - predicted|` over the largest `|predicted|`.
    pub relative_error: f64,
    /// `(lambda, largest distance between the two orbits)`.
    pub classical: Vec<(f64, f64)>,
}

impl AmbiguityReport {
    /// Ratio of the classical deviation at the smallest scale to that at the largest.
    pub fn classical_improvement(&self) -> f64 {
        match (self.classical.first(), self.classical.last()) {
            (Some(a), Some(b)) if b.1 > 0.0 => a.1 / b.1,
            _ => f64::INFINITY,
        }
    }
}

/// `V_eff` of two tuned families with the same mean frequency, their
/// difference against perturbation theory, and classical orbit agreement.
#[allow(clippy::too_many_arguments)]
pub fn ambiguity_experiment<P: WorkPool>(
    curve: &EmbeddingCurve,
    a: &ConfinementFamily,
    b: &ConfinementFamily,
    v_slow: &CosineSeries,
    lambdas: &[f64],
    hbar: f64,
    opts: &AmbiguityOptions,
    pool: &P,
) -> Result<AmbiguityReport> {
    if !a.is_tuned() || !b.is_tuned() {
        return Err(Error::UntunedFamily);
    }
    let (ma, mb) = (a.mean_strength(), b.mean_strength());
    if (ma - mb).abs() > 1e-12 * ma.abs().max(mb.abs()) {
        return Err(Error::InvalidArgument(format!(
            "families must share the mean frequency (got {ma} and {mb})"
        )));
    }
    let va = assemble_v_eff(curve, a, lambdas, hbar, opts.n_s, opts.n_r, pool)?;
    let vb = if a == b {
        va.clone()
    } else {
        assemble_v_eff(curve, b, lambdas, hbar, opts.n_s, opts.n_r, pool)?
    };
    let s = va.s.clone();
    let difference: Vec<f64> = vb.values.iter().zip(&va.values).map(|(x, y)| x - y).collect();
    let predicted: Vec<f64> = s
        .iter()
        .map(|x| b.residual_shift(*x, hbar) - a.residual_shift(*x, hbar))
        .collect();
    let scale = predicted.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let worst = difference
        .iter()
        .zip(&predicted)
        .fold(0.0f64, |m, (d, p)| m.max((d - p).abs()));
    let relative_error = if scale > 0.0 { worst / scale } else { worst };

    let classical: Result<Vec<(f64, f64)>> = pool
        .map(opts.classical_lambdas.len(), |i| {
            let lambda = opts.classical_lambdas[i];
            Ok((lambda, family_deviation(curve, a, b, v_slow, lambda, &opts.run)?))
        })
        .into_iter()
        .collect();
    Ok(AmbiguityReport {
        s,
        a: va,
        b: vb,
        difference,
        predicted,
        relative_error,
        classical: classical?,
    })
}

/// One direct quantization against the limit spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaComparison {
    pub alpha: f64,
    pub spectrum: Vec<f64>,
    /// Mean of `limit - direct` over the compared levels.
    pub shift: f64,
    /// Largest deviation of `limit - direct` from its mean.
    pub spacing_mismatch: f64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectComparison {
    pub alphas: Vec<AlphaComparison>,
    /// Spectrum of `-hbar^2/2 d_s^2 + V + V_eff`, when a limit estimate was given.
    pub limit_spectrum: Option<Vec<f64>>,
    pub matching_alpha: Option<f64>,
    pub non_geometric: bool,
}

/// Spectra of the direct quantizations for each `alpha`, compared with the
/// limit operator carrying `V_eff` when one is supplied (curves only).
pub fn compare_direct_quantizations(
    manifold: DirectManifold<'_>,
    v_slow: &CosineSeries,
    alphas: &[f64],
    hbar: f64,
    limit: Option<&EffectivePotentialEstimate>,
    levels: usize,
) -> Result<DirectComparison> {
    let spectra = alphas
        .iter()
        .map(|alpha| build_direct_hamiltonian(manifold, v_slow, *alpha, hbar)?.eigenvalues(levels, 1e-12, 0))
        .collect::<Result<Vec<_>>>()?;

    let (limit_spectrum, tolerance, non_geometric) = match (manifold, limit) {
        (DirectManifold::Curve { curve, n_s }, Some(est)) => {
            let grid = Grid1D::periodic(n_s, curve.length())?;
            let op = build_laplace_beltrami_1d(&grid, Axis::S { r: 0.0 }, &FlatMetric, hbar)?
                .with_potential(|s, _| v_slow.eval(s) + est.eval(s, curve.length()))?;
            let spectrum = lowest_eigenpairs(&op, levels, 1e-12, 0)?.eigenvalues;
            let tol = (2.0 * est.max_uncertainty()).max(1e-9 * hbar * hbar);
            (Some(spectrum), tol, is_non_geometric(curve, est)?)
        }
        (DirectManifold::Sphere { .. }, Some(_)) => {
            return Err(Error::InvalidArgument("limit estimates exist for curves only".into()));
        }
        _ => (None, 0.0, false),
    };

    let reference = limit_spectrum.clone().unwrap_or_else(|| spectra[0].clone());
    let mut out = Vec::with_capacity(alphas.len());
    for (alpha, spectrum) in alphas.iter().zip(spectra) {
        let diff: Vec<f64> = reference.iter().zip(&spectrum).map(|(l, d)| l - d).collect();
        let shift = diff.iter().sum::<f64>() / diff.len() as f64;
        let spacing_mismatch = diff.iter().fold(0.0f64, |m, d| m.max((d - shift).abs()));
        let matches = limit_spectrum.is_some() && spacing_mismatch <= tolerance;
        out.push(AlphaComparison {
            alpha: *alpha,
            spectrum,
            shift,
            spacing_mismatch,
            matches,
        });
    }
    Ok(DirectComparison {
        matching_alpha: out.iter().find(|a| a.matches).map(|a| a.alpha),
        alphas: out,
        limit_spectrum,
        non_geometric,
    })
}

/// Coupling-to-gap ratio `|| Q d_s u || v / gap` per scale and position.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingReport {
    pub lambdas: Vec<f64>,
    pub s: Vec<f64>,
    /// `ratio[l][i]` at `lambdas[l]` and `s[i]`.
    pub ratio: Vec<Vec<f64>>,
    pub max_ratio: Vec<f64>,
    /// Power-law fit of `max_ratio` against `lambda` (absent when the ratio vanishes).
    pub exponent: Option<LineFit>,
}

#[allow(clippy::too_many_arguments)]
pub fn adiabatic_decoupling_check<P: WorkPool>(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    lambdas: &[f64],
    hbar: f64,
    n_s: usize,
    n_r: usize,
    speed: f64,
    pool: &P,
) -> Result<DecouplingReport> {
    if n_s < 16 {
        return Err(Error::InvalidGrid("decoupling check needs at least 16 positions".into()));
    }
    let l = curve.length();
    let h = l / n_s as f64;
    let s: Vec<f64> = (0..n_s).map(|i| h * i as f64).collect();
    let rates = log_scale_rates(family, &s);
    let mut ratio = Vec::with_capacity(lambdas.len());
    let mut max_ratio = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let setup = FastSetup::new(curve, family, lambda, hbar, n_r)?;
        let sols = fast_solutions_on_grid(&setup, &s, pool)?;
        let deriv = slow_derivatives(&sols, &rates, 1, h);
        let row: Vec<f64> = sols
            .iter()
            .zip(&deriv)
            .map(|(sol, g)| {
                let mut overlap = 0.0;
                let mut norm2 = 0.0;
                for ((f, gj), j) in sol.state.iter().zip(g).zip(&sol.jacobian) {
                    overlap += f * gj * j * sol.spacing;
                    norm2 += gj * gj * j * sol.spacing;
                }
                let q = (norm2 - overlap * overlap).max(0.0).sqrt();
                q * speed.abs() / sol.gap
            })
            .collect();
        max_ratio.push(row.iter().copied().fold(0.0, f64::max));
        ratio.push(row);
    }
    let exponent = if lambdas.len() >= 2 && max_ratio.iter().all(|r| *r > 1e-13) {
        Some(power_law_exponent(lambdas, &max_ratio)?)
    } else {
        None
    };
    Ok(DecouplingReport {
        lambdas: lambdas.to_vec(),
        s,
        ratio,
        max_ratio,
        exponent,
    })
}
