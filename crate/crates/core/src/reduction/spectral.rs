//! `V_eff` from the lowest full two-dimensional eigenvalues: the slow band is
//! fitted by a one-dimensional operator `-hbar^2/2 d_s^2 + V + U` with `U` a
//! cosine series, and the fitted coefficients are extrapolated in `lambda`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::{EffectivePotentialEstimate, EstimateMethod, FastSetup};
use crate::error::{Error, Result};
use crate::geometry::EmbeddingCurve;
use crate::numeric::{extrapolate_in_lambda, least_squares, richardson_h2};
use crate::pool::WorkPool;
use crate::potentials::ConfinementFamily;
use crate::qsolve::{
    build_full_hamiltonian, build_laplace_beltrami_1d, lowest_eigenpairs, Axis, FlatMetric, Grid1D, Grid2D,
};
use crate::series::{cosine_coefficients, sine_coefficients, CosineSeries};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub n_s: usize,
    pub n_r: usize,
    /// Number of cosine terms in `U`.
    pub terms: usize,
    /// Slow levels to fit; by default 5 for constant `U` and `2 terms - 1` otherwise.
    pub levels: Option<usize>,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            n_s: 128,
            n_r: 96,
            terms: 8,
            levels: None,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// Slow-band data at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    pub lambda: f64,
    /// Two-dimensional levels minus the flat reference energy, extrapolated in the normal spacing.
    pub levels: Vec<f64>,
    /// Same on the fine normal grid only.
    pub levels_fine: Vec<f64>,
    /// `true` for states even under `s -> -s`.
    pub even: Vec<bool>,
    pub reference_energy: f64,
    pub gap: f64,
    pub coefficients: Vec<f64>,
    pub fit_rms: f64,
}

/// Lowest `k` levels of the tube Hamiltonian on the fine and coarsened
/// normal grids, less the flat reference energy.
#[allow(clippy::too_many_arguments)]
pub fn slow_band<P: WorkPool>(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    v_slow: &CosineSeries,
    lambda: f64,
    hbar: f64,
    n_s: usize,
    n_r: usize,
    k: usize,
    tol: f64,
    seed: u64,
    pool: &P,
) -> Result<SpectralSample> {
    let fine = Grid2D::for_confinement(curve, family, lambda, hbar, n_s, n_r)?;
    let coarse = Grid2D::new(fine.s.clone(), fine.r.coarsened()?)?;
    let grids = [&fine, &coarse];
    let solved: Vec<Result<crate::qsolve::EigenResult>> = pool.map(2, |i| {
        let op = build_full_hamiltonian(grids[i], curve, family, lambda, v_slow, hbar)?;
        lowest_eigenpairs(&op, k, tol, seed)
    });
    let mut solved = solved.into_iter();
    let f = solved.next().expect("two solves")?;
    let c = solved.next().expect("two solves")?;

    let setup = FastSetup::new(curve, family, lambda, hbar, n_r)?;
    let (e_ref, e_ref_fine) = setup.reference_energies()?;
    let gap = family.local(0.0).leading_gap(lambda, hbar);

    let even: Vec<bool> = f.parity.iter().map(|p| *p >= 0.0).collect();
    let c_even: Vec<bool> = c.parity.iter().map(|p| *p >= 0.0).collect();
    let (hf, hc) = (fine.r.spacing(), coarse.r.spacing());
    let mut levels = Vec::with_capacity(k);
    // pair levels of the two grids by order within each parity sector
    for (i, e) in f.eigenvalues.iter().enumerate() {
        let rank = even[..i].iter().filter(|x| **x == even[i]).count();
        let partner = c_even
            .iter()
            .enumerate()
            .filter(|(_, x)| **x == even[i])
            .nth(rank)
            .map(|(j, _)| c.eigenvalues[j]);
        let value = match partner {
            Some(ce) => richardson_h2(*e, hf, ce, hc),
            None => *e,
        };
        levels.push(value - e_ref);
    }
    let top = f.eigenvalues[k - 1] - e_ref_fine;
    let floor = (0..n_s)
        .map(|i| v_slow.eval(fine.s.point(i)))
        .fold(f64::INFINITY, f64::min);
    if top - floor > 0.5 * gap {
        return Err(Error::InvalidArgument(format!(
            "slow band reaches {:.3e} above its floor, more than half the fast gap {gap:.3e}",
            top - floor
        )));
    }
    Ok(SpectralSample {
        lambda,
        levels,
        levels_fine: f.eigenvalues.iter().map(|e| e - e_ref_fine).collect(),
        even,
        reference_energy: e_ref,
        gap,
        coefficients: Vec::new(),
        fit_rms: 0.0,
    })
}

/// Candidate operator `-hbar^2/2 d_s^2 + V + U` with `U` a cosine series in
/// the given harmonics.
struct Candidate<'a> {
    grid: Grid1D,
    v_slow: &'a CosineSeries,
    harmonics: &'a [usize],
    hbar: f64,
}

impl Candidate<'_> {
    fn basis(&self, j: usize, s: f64) -> f64 {
        let w = 2.0 * core::f64::consts::PI / self.grid.extent();
        (w * self.harmonics[j] as f64 * s).cos()
    }

    fn u(&self, c: &[f64], s: f64) -> f64 {
        c.iter().enumerate().map(|(j, cj)| cj * self.basis(j, s)).sum()
    }

    /// Levels matched to `target` by parity sector, and their Jacobian.
    fn evaluate(&self, c: &[f64], even: &[bool]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n_even = even.iter().filter(|x| **x).count();
        let n_odd = even.len() - n_even;
        let want = (2 * n_even.max(n_odd) + 2).min(self.grid.len() / 4);
        let op = build_laplace_beltrami_1d(&self.grid, Axis::S { r: 0.0 }, &FlatMetric, self.hbar)?
            .with_potential(|s, _| self.v_slow.eval(s) + self.u(c, s))?;
        let res = lowest_eigenpairs(&op, want, 1e-12, 0)?;
        let w = op.weights();
        let points = self.grid.points();
        let mut evens = Vec::new();
        let mut odds = Vec::new();
        for (i, p) in res.parity.iter().enumerate() {
            if *p >= 0.0 {
                evens.push(i);
            } else {
                odds.push(i);
            }
        }
        if evens.len() < n_even || odds.len() < n_odd {
            return Err(Error::InvalidArgument("candidate spectrum too short for the fit".into()));
        }
        let mut values = Vec::with_capacity(even.len());
        let mut jac = DMatrix::zeros(even.len(), c.len());
        let (mut ie, mut io) = (0, 0);
        for (row, e) in even.iter().enumerate() {
            let idx = if *e {
                ie += 1;
                evens[ie - 1]
            } else {
                io += 1;
                odds[io - 1]
            };
            values.push(res.eigenvalues[idx]);
            let psi = &res.eigenvectors[idx];
            for j in 0..c.len() {
                jac[(row, j)] = psi
                    .iter()
                    .zip(w)
                    .zip(&points)
                    .map(|((p, wi), s)| p * p * wi * self.basis(j, *s))
                    .sum();
            }
        }
        Ok((values, jac))
    }

    /// Gauss-Newton fit of the coefficients to `target`.
    fn fit(&self, target: &[f64], even: &[bool]) -> Result<(Vec<f64>, f64)> {
        let mut c = vec![0.0; self.harmonics.len()];
        let (free, _) = self.evaluate(&c, even)?;
        c[0] = target.iter().zip(&free).map(|(t, f)| t - f).sum::<f64>() / target.len() as f64;
        let scale = target.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        let mut rms = f64::INFINITY;
        for _ in 0..60 {
            let (vals, jac) = self.evaluate(&c, even)?;
            let r = DVector::from_iterator(target.len(), target.iter().zip(&vals).map(|(t, v)| t - v));
            rms = (r.norm_squared() / target.len() as f64).sqrt();
            let delta = least_squares(&jac, &r)?;
            for (cj, d) in c.iter_mut().zip(delta.iter()) {
                *cj += d;
            }
            if delta.amax() < 1e-13 * scale {
                break;
            }
        }
        Ok((c, rms))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Harmonic step shared by every `s`-dependent input, or `None` when all are constant.
fn harmonic_step(curve: &EmbeddingCurve, family: &ConfinementFamily, v_slow: &CosineSeries, n_s: usize) -> Option<usize> {
    let l = curve.length();
    let kappa2: Vec<f64> = (0..n_s)
        .map(|i| {
            let k = curve.curvature(l * i as f64 / n_s as f64);
            k * k
        })
        .collect();
    let kc = cosine_coefficients(&kappa2, n_s / 2);
    let kmax = kc.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut active: Vec<usize> = kc
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| c.abs() > 1e-10 * kmax.max(1e-300))
        .map(|(k, _)| k)
        .collect();
    for series in family.series().into_iter().chain(core::iter::once(v_slow)) {
        active.extend(series.active_harmonics().into_iter().filter(|k| *k > 0));
    }
    let step = active.into_iter().fold(0, gcd);
    (step > 0).then_some(step)
}

/// Effective potential by fitting the slow band of the full spectrum and
/// extrapolating in `lambda`.
pub fn extract_v_eff_spectral<P: WorkPool>(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    v_slow: &CosineSeries,
    lambdas: &[f64],
    hbar: f64,
    opts: &SpectralOptions,
    pool: &P,
) -> Result<(EffectivePotentialEstimate, Vec<SpectralSample>)> {
    if lambdas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "spectral extraction needs at least three scales (got {})",
            lambdas.len()
        )));
    }
    let (lo, hi) = (lambdas[0], lambdas[lambdas.len() - 1]);
    if !(hi / lo >= 99.999) {
        return Err(Error::InvalidArgument("scales must span at least two decades".into()));
    }
    if opts.terms == 0 {
        return Err(Error::InvalidArgument("need at least one cosine term".into()));
    }
    let n_s = opts.n_s;
    let l = curve.length();
    let kappa: Vec<f64> = (0..n_s).map(|i| curve.curvature(l * i as f64 / n_s as f64)).collect();
    let sines = sine_coefficients(&kappa, n_s / 2);
    let kmax = kappa.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    if sines.iter().any(|c| c.abs() > 1e-8 * kmax + 1e-12) {
        return Err(Error::NotReflectionSymmetric);
    }

    let harmonics: Vec<usize> = match harmonic_step(curve, family, v_slow, n_s) {
        Some(step) => (0..opts.terms).map(|j| j * step).collect(),
        None => vec![0],
    };
    let k = opts
        .levels
        .unwrap_or(if harmonics.len() == 1 { 5 } else { 2 * harmonics.len() - 1 });
    let candidate = Candidate {
        grid: Grid1D::periodic(n_s, l)?,
        v_slow,
        harmonics: &harmonics,
        hbar,
    };

    let mut samples = Vec::with_capacity(lambdas.len());
    let mut fine_coeffs = Vec::new();
    for &lambda in lambdas {
        let mut sample = slow_band(curve, family, v_slow, lambda, hbar, n_s, opts.n_r, k, opts.tol, opts.seed, pool)?;
        let (c, rms) = candidate.fit(&sample.levels, &sample.even)?;
        let (cf, _) = candidate.fit(&sample.levels_fine, &sample.even)?;
        sample.coefficients = c;
        sample.fit_rms = rms;
        fine_coeffs = cf;
        samples.push(sample);
    }

    let nc = harmonics.len();
    let mut coefficients = Vec::with_capacity(nc);
    let mut extrapolations = Vec::with_capacity(nc);
    for j in 0..nc {
        let values: Vec<f64> = samples.iter().map(|s| s.coefficients[j]).collect();
        let ex = extrapolate_in_lambda(lambdas, &values)?;
        if j == 0 {
            ex.check_stable()?;
        }
        coefficients.push(ex.limit);
        extrapolations.push(ex);
    }

    let s: Vec<f64> = candidate.grid.points();
    let last = samples.last().expect("at least three scales");
    let per_lambda: Vec<Vec<f64>> = samples
        .iter()
        .map(|x| s.iter().map(|si| candidate.u(&x.coefficients, *si)).collect())
        .collect();
    let mut values = Vec::with_capacity(n_s);
    let mut uncertainty = Vec::with_capacity(n_s);
    for (i, si) in s.iter().enumerate() {
        let column: Vec<f64> = per_lambda.iter().map(|v| v[i]).collect();
        let ex = extrapolate_in_lambda(lambdas, &column)?;
        let discretisation = (candidate.u(&last.coefficients, *si) - candidate.u(&fine_coeffs, *si)).abs();
        values.push(candidate.u(&coefficients, *si));
        uncertainty.push(ex.uncertainty + discretisation + last.fit_rms);
    }

    Ok((
        EffectivePotentialEstimate {
            method: EstimateMethod::SpectralExtrapolation,
            hbar,
            lambdas: lambdas.to_vec(),
            s,
            values,
            uncertainty,
            per_lambda,
            harmonics,
            coefficients,
            fit_residual: last.fit_rms,
            extrapolations,
        },
        samples,
    ))
}
