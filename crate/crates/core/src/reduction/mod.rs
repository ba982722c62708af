//! Born-Oppenheimer reduction: fast eigenproblems across the tube, the
//! derivative couplings they induce, and the resulting effective potential
//! on the curve.
//!
//! Writing `Psi = phi(s) u(s, r)` with `int u^2 J dr = 1` and projecting the
//! tube Hamiltonian gives, in the restricted measure `ds`,
//!
//! ```text
//! H_eff phi = -hbar^2/2 (m phi')' + [E_GR + V + hbar^2/2 (k - a')] phi
//! m = int u^2 / J dr,   a = int u u_s / J dr,   k = int u_s^2 / J dr
//! ```
//!
//! `V_eff` is everything in the bracket beyond `V` and the flat harmonic
//! ground energy of the same normal grid.

mod compare;
mod spectral;

pub use compare::{
    adiabatic_decoupling_check, ambiguity_experiment, compare_direct_quantizations, AlphaComparison,
    AmbiguityOptions, AmbiguityReport, DecouplingReport, DirectComparison, GeometricFit,
};
pub use spectral::{extract_v_eff_spectral, slow_band, SpectralOptions, SpectralSample};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::EmbeddingCurve;
use crate::numeric::{extrapolate_in_lambda, richardson_h2, LambdaExtrapolation};
use crate::pool::{Sequential, WorkPool};
use crate::potentials::{ConfinementFamily, ConfinementKind, LocalProfile};
use crate::qsolve::{
    build_laplace_beltrami_1d, confinement_half_extent, lowest_eigenpairs, Axis, FrozenCurvature, Grid1D,
};
#[allow(unused_imports)]
use num_traits::Float;

/// Fast ground and first excited state at one arc-length position.
#[derive(Debug, Clone, PartialEq)]
pub struct FastSolution {
    pub s: f64,
    pub lambda: f64,
    pub e_gr: f64,
    pub e_1: f64,
    pub gap: f64,
    /// Ground energy on the fine grid alone (no extrapolation in the spacing).
    pub e_gr_fine: f64,
    /// Physical width of one unit of the grid coordinate (`w/lambda` for hard walls).
    pub scale: f64,
    /// Grid coordinate `rho = r / scale`.
    pub coords: Vec<f64>,
    pub spacing: f64,
    /// Ground state in the grid coordinate, `sum f^2 J spacing = 1`.
    pub state: Vec<f64>,
    /// `J = 1 - kappa r` at the nodes.
    pub jacobian: Vec<f64>,
}

impl FastSolution {
    pub fn r_points(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c * self.scale).collect()
    }

    /// Ground state `u(r)` normalised by `int u^2 J dr = 1`.
    pub fn psi(&self) -> Vec<f64> {
        let f = 1.0 / self.scale.sqrt();
        self.state.iter().map(|v| v * f).collect()
    }

    /// Standard deviation of `r` under `|u|^2 J dr`.
    pub fn width(&self) -> f64 {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for ((x, f), j) in self.coords.iter().zip(&self.state).zip(&self.jacobian) {
            let p = f * f * j * self.spacing;
            m1 += p * x;
            m2 += p * x * x;
        }
        self.scale * (m2 - m1 * m1).max(0.0).sqrt()
    }
}

/// Shared grids and parameters for the fast problems of one family and scale.
pub struct FastSetup<'a> {
    curve: &'a EmbeddingCurve,
    family: &'a ConfinementFamily,
    lambda: f64,
    hbar: f64,
    grid: Grid1D,
    coarse: Option<Grid1D>,
}

impl<'a> FastSetup<'a> {
    /// Normal grid of `n_r` interior points, with a second grid of half the
    /// resolution for `h^2` extrapolation.
    pub fn new(
        curve: &'a EmbeddingCurve,
        family: &'a ConfinementFamily,
        lambda: f64,
        hbar: f64,
        n_r: usize,
    ) -> Result<Self> {
        family.check_curve(curve)?;
        let grid = match family.kind() {
            ConfinementKind::Smooth => {
                let half = confinement_half_extent(curve, family, lambda, hbar)?;
                Grid1D::dirichlet(n_r, -half, half)?
            }
            ConfinementKind::Hardwall => {
                confinement_half_extent(curve, family, lambda, hbar)?;
                Grid1D::dirichlet(n_r, -0.5, 0.5)?
            }
        };
        let coarse = Some(grid.coarsened()?);
        Ok(Self {
            curve,
            family,
            lambda,
            hbar,
            grid,
            coarse,
        })
    }

    /// Uses the fine grid alone.
    pub fn without_extrapolation(mut self) -> Self {
        self.coarse = None;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    fn scale_of(&self, profile: LocalProfile) -> f64 {
        match profile {
            LocalProfile::Smooth { .. } => 1.0,
            LocalProfile::Hardwall { width } => width / self.lambda,
        }
    }

    fn levels(&self, grid: &Grid1D, kappa: f64, profile: LocalProfile) -> Result<crate::qsolve::EigenResult> {
        let scale = self.scale_of(profile);
        let op = match profile {
            LocalProfile::Smooth { .. } => {
                build_laplace_beltrami_1d(grid, Axis::R { s: 0.0 }, &FrozenCurvature(kappa), self.hbar)?
                    .with_potential(|_, r| profile.eval(self.lambda, r))?
            }
            LocalProfile::Hardwall { .. } => build_laplace_beltrami_1d(
                grid,
                Axis::R { s: 0.0 },
                &FrozenCurvature(kappa * scale),
                self.hbar / scale,
            )?,
        };
        lowest_eigenpairs(&op, 2, 1e-12, 0)
    }

    /// Fast eigenproblem at `s` with the metric frozen there.
    pub fn solve(&self, s: f64) -> Result<FastSolution> {
        let kappa = self.curve.curvature(s);
        let profile = self.family.local(s);
        let fine = self.levels(&self.grid, kappa, profile)?;
        let (e_gr, e_1) = match &self.coarse {
            Some(c) => {
                let coarse = self.levels(c, kappa, profile)?;
                let (hf, hc) = (self.grid.spacing(), c.spacing());
                (
                    richardson_h2(fine.eigenvalues[0], hf, coarse.eigenvalues[0], hc),
                    richardson_h2(fine.eigenvalues[1], hf, coarse.eigenvalues[1], hc),
                )
            }
            None => (fine.eigenvalues[0], fine.eigenvalues[1]),
        };
        let scale = self.scale_of(profile);
        let coords = self.grid.points();
        let jacobian = coords.iter().map(|x| 1.0 - kappa * scale * x).collect();
        Ok(FastSolution {
            s,
            lambda: self.lambda,
            e_gr,
            e_1,
            gap: e_1 - e_gr,
            e_gr_fine: fine.eigenvalues[0],
            scale,
            coords,
            spacing: self.grid.spacing(),
            state: fine.eigenvectors[0].clone(),
            jacobian,
        })
    }

    fn reference_profile(&self) -> LocalProfile {
        match self.family.kind() {
            ConfinementKind::Smooth => LocalProfile::Smooth {
                omega0: self.family.mean_strength(),
                cubic: 0.0,
                quartic: 0.0,
            },
            ConfinementKind::Hardwall => LocalProfile::Hardwall {
                width: self.family.mean_strength(),
            },
        }
    }

    /// Flat (`kappa = 0`) harmonic ground energy on the same grids and with the
    /// same extrapolation as [`FastSetup::solve`].
    pub fn reference_energy(&self) -> Result<f64> {
        Ok(self.reference_energies()?.0)
    }

    /// Reference energy with and without spacing extrapolation.
    pub fn reference_energies(&self) -> Result<(f64, f64)> {
        let profile = self.reference_profile();
        let fine = self.levels(&self.grid, 0.0, profile)?.eigenvalues[0];
        match &self.coarse {
            Some(c) => {
                let coarse = self.levels(c, 0.0, profile)?.eigenvalues[0];
                Ok((richardson_h2(fine, self.grid.spacing(), coarse, c.spacing()), fine))
            }
            None => Ok((fine, fine)),
        }
    }
}

/// Fast eigenproblem at one position (grid sized by the standard rule).
pub fn fast_ground_state(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    lambda: f64,
    s: f64,
    hbar: f64,
    n_r: usize,
) -> Result<FastSolution> {
    FastSetup::new(curve, family, lambda, hbar, n_r)?.solve(s)
}

/// The `O(hbar^2)` terms of the reduced Hamiltonian on a periodic `s` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTerms {
    pub s: Vec<f64>,
    pub lambda: f64,
    pub hbar: f64,
    /// `E_GR(s) - E_ref(lambda)` (energy).
    pub fast_residual: Vec<f64>,
    /// Same without extrapolation in the normal spacing.
    pub fast_residual_fine: Vec<f64>,
    /// `k / 2` (energy / hbar^2).
    pub f: Vec<f64>,
    /// `-a' / 2` from the hermitised first-derivative term (energy / hbar^2).
    pub h: Vec<f64>,
    /// Mixed `d_s d_r` contributions; identically zero for the diagonal tube metric.
    pub mixed: Vec<f64>,
    /// `m - 1`, the correction to the slow kinetic coefficient.
    pub mass_correction: Vec<f64>,
    /// Largest change of `f + h` between derivative steps `h` and `2h`.
    pub discrepancy: f64,
}

impl CouplingTerms {
    /// `V_eff(s)` in energy units.
    pub fn v_eff(&self) -> Vec<f64> {
        let h2 = self.hbar * self.hbar;
        (0..self.s.len())
            .map(|i| self.fast_residual[i] + h2 * (self.f[i] + self.h[i] + self.mixed[i]))
            .collect()
    }

    fn v_eff_fine(&self) -> Vec<f64> {
        let h2 = self.hbar * self.hbar;
        (0..self.s.len())
            .map(|i| self.fast_residual_fine[i] + h2 * (self.f[i] + self.h[i] + self.mixed[i]))
            .collect()
    }
}

/// Fourth-order periodic central difference with stride `step` nodes.
fn periodic_derivative(values: &[f64], i: usize, step: usize, h: f64) -> f64 {
    let n = values.len();
    let at = |k: isize| values[((i as isize + k * step as isize).rem_euclid(n as isize)) as usize];
    (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h * step as f64)
}

struct Channels {
    k: Vec<f64>,
    a: Vec<f64>,
    m: Vec<f64>,
}

/// `d_s` of each fast ground state in the grid coordinate, including the
/// dilation term of a varying wall width.
pub(crate) fn slow_derivatives(sols: &[FastSolution], log_scale_rate: &[f64], step: usize, h: f64) -> Vec<Vec<f64>> {
    let n = sols.len();
    let nr = sols[0].state.len();
    let mut column = vec![0.0; n];
    let mut deriv = vec![vec![0.0; nr]; n];
    for j in 0..nr {
        for (c, sol) in column.iter_mut().zip(sols) {
            *c = sol.state[j];
        }
        for (i, d) in deriv.iter_mut().enumerate() {
            d[j] = periodic_derivative(&column, i, step, h);
        }
    }
    for (i, d) in deriv.iter_mut().enumerate() {
        let sol = &sols[i];
        let dr = sol.spacing;
        for (j, dj) in d.iter_mut().enumerate().take(nr) {
            let up = if j + 1 < nr { sol.state[j + 1] } else { 0.0 };
            let down = if j > 0 { sol.state[j - 1] } else { 0.0 };
            let f_rho = (up - down) / (2.0 * dr);
            *dj -= log_scale_rate[i] * (sol.coords[j] * f_rho + 0.5 * sol.state[j]);
        }
    }
    deriv
}

fn channels(sols: &[FastSolution], log_scale_rate: &[f64], step: usize, h: f64) -> Channels {
    let n = sols.len();
    let deriv = slow_derivatives(sols, log_scale_rate, step, h);
    let mut k = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut m = vec![0.0; n];
    for i in 0..n {
        let sol = &sols[i];
        for (j, g) in deriv[i].iter().enumerate() {
            let f = sol.state[j];
            let w = sol.spacing / sol.jacobian[j];
            m[i] += f * f * w;
            a[i] += f * g * w;
            k[i] += g * g * w;
        }
    }
    Channels { k, a, m }
}

pub(crate) fn log_scale_rates(family: &ConfinementFamily, s: &[f64]) -> Vec<f64> {
    match family.kind() {
        ConfinementKind::Smooth => vec![0.0; s.len()],
        ConfinementKind::Hardwall => {
            let w = family.series()[0];
            s.iter().map(|x| w.derivative(*x) / w.eval(*x)).collect()
        }
    }
}

/// Fast solutions at every node of a periodic `s` grid, signs fixed so that
/// each ground state has positive sum.
pub fn fast_solutions_on_grid<P: WorkPool>(
    setup: &FastSetup<'_>,
    s: &[f64],
    pool: &P,
) -> Result<Vec<FastSolution>> {
    let sols: Result<Vec<FastSolution>> = pool.map(s.len(), |i| setup.solve(s[i])).into_iter().collect();
    let mut sols = sols?;
    for sol in sols.iter_mut() {
        if sol.state.iter().sum::<f64>() < 0.0 {
            for v in sol.state.iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok(sols)
}

pub fn coupling_terms(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    lambda: f64,
    hbar: f64,
    n_s: usize,
    n_r: usize,
) -> Result<CouplingTerms> {
    coupling_terms_with(curve, family, lambda, hbar, n_s, n_r, &Sequential)
}

pub fn coupling_terms_with<P: WorkPool>(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    lambda: f64,
    hbar: f64,
    n_s: usize,
    n_r: usize,
    pool: &P,
) -> Result<CouplingTerms> {
    if n_s < 16 {
        return Err(Error::InvalidGrid("coupling terms need at least 16 positions".into()));
    }
    let setup = FastSetup::new(curve, family, lambda, hbar, n_r)?;
    let (e_ref, e_ref_fine) = setup.reference_energies()?;
    let l = curve.length();
    let h = l / n_s as f64;
    let s: Vec<f64> = (0..n_s).map(|i| h * i as f64).collect();
    let sols = fast_solutions_on_grid(&setup, &s, pool)?;
    let rates = log_scale_rates(family, &s);

    let assemble = |step: usize| {
        let c = channels(&sols, &rates, step, h);
        let f: Vec<f64> = c.k.iter().map(|k| 0.5 * k).collect();
        let hch: Vec<f64> = (0..n_s).map(|i| -0.5 * periodic_derivative(&c.a, i, step, h)).collect();
        (f, hch, c.m)
    };
    let (f, hch, m) = assemble(1);
    let (f2, h2, _) = assemble(2);
    let discrepancy = (0..n_s)
        .map(|i| ((f[i] + hch[i]) - (f2[i] + h2[i])).abs())
        .fold(0.0, f64::max);
    let magnitude = (0..n_s).map(|i| (f[i] + hch[i]).abs()).fold(0.0, f64::max);
    if discrepancy > 5e-2 * magnitude + 1e-8 {
        return Err(Error::InsufficientResolution { discrepancy });
    }

    Ok(CouplingTerms {
        fast_residual: sols.iter().map(|x| x.e_gr - e_ref).collect(),
        fast_residual_fine: sols.iter().map(|x| x.e_gr_fine - e_ref_fine).collect(),
        f,
        h: hch,
        mixed: vec![0.0; n_s],
        mass_correction: m.iter().map(|v| v - 1.0).collect(),
        discrepancy,
        s,
        lambda,
        hbar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    CouplingAssembly,
    SpectralExtrapolation,
}

impl EstimateMethod {
    pub fn label(&self) -> &'static str {
        match self {
            EstimateMethod::CouplingAssembly => "coupling-assembly",
            EstimateMethod::SpectralExtrapolation => "spectral-extrapolation",
        }
    }
}

/// `V_eff(s)` samples in energy units with error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePotentialEstimate {
    pub method: EstimateMethod,
    pub hbar: f64,
    pub lambdas: Vec<f64>,
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    pub uncertainty: Vec<f64>,
    /// Samples at each scale before extrapolation (`per_lambda[l][i]`).
    pub per_lambda: Vec<Vec<f64>>,
    /// Cosine harmonics of the fitted series (spectral route).
    pub harmonics: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub fit_residual: f64,
    pub extrapolations: Vec<LambdaExtrapolation>,
}

impl EffectivePotentialEstimate {
    /// Values divided by `hbar^2`.
    pub fn scaled_by_hbar2(&self) -> Vec<f64> {
        let h2 = self.hbar * self.hbar;
        self.values.iter().map(|v| v / h2).collect()
    }

    pub fn range(&self) -> f64 {
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    pub fn max_uncertainty(&self) -> f64 {
        self.uncertainty.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation on the periodic sample grid.
    pub fn eval(&self, s: f64, period: f64) -> f64 {
        let n = self.s.len();
        let h = period / n as f64;
        let x = ((s - self.s[0]) % period + period) % period / h;
        let i = (x.floor() as usize) % n;
        let t = x - x.floor();
        self.values[i] * (1.0 - t) + self.values[(i + 1) % n] * t
    }
}

/// Coupling-assembly `V_eff` at each scale, extrapolated sample by sample.
pub fn assemble_v_eff<P: WorkPool>(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    lambdas: &[f64],
    hbar: f64,
    n_s: usize,
    n_r: usize,
    pool: &P,
) -> Result<EffectivePotentialEstimate> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("need at least one scale".into()));
    }
    let mut per_lambda = Vec::with_capacity(lambdas.len());
    let mut disc = Vec::with_capacity(lambdas.len());
    let mut terms_last = None;
    for &lambda in lambdas {
        let t = coupling_terms_with(curve, family, lambda, hbar, n_s, n_r, pool)?;
        let v = t.v_eff();
        let fine = t.v_eff_fine();
        disc.push(
            v.iter()
                .zip(&fine)
                .map(|(a, b)| (a - b).abs())
                .collect::<Vec<f64>>(),
        );
        per_lambda.push(v);
        terms_last = Some(t);
    }
    let terms = terms_last.expect("at least one scale");
    let n = terms.s.len();
    let mut values = Vec::with_capacity(n);
    let mut uncertainty = Vec::with_capacity(n);
    let mut extrapolations = Vec::new();
    let last = lambdas.len() - 1;
    for i in 0..n {
        let samples: Vec<f64> = per_lambda.iter().map(|v| v[i]).collect();
        let numerical = disc[last][i] + hbar * hbar * terms.discrepancy;
        if lambdas.len() >= 2 {
            let ex = extrapolate_in_lambda(lambdas, &samples)?;
            values.push(ex.limit);
            uncertainty.push(ex.uncertainty + numerical);
            extrapolations.push(ex);
        } else {
            values.push(samples[0]);
            uncertainty.push(numerical);
        }
    }
    Ok(EffectivePotentialEstimate {
        method: EstimateMethod::CouplingAssembly,
        hbar,
        lambdas: lambdas.to_vec(),
        s: terms.s,
        values,
        uncertainty,
        per_lambda,
        harmonics: Vec::new(),
        coefficients: Vec::new(),
        fit_residual: 0.0,
        extrapolations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveShape;
    use crate::series::CosineSeries;
    use core::f64::consts::PI;

    #[test]
    fn flat_harmonic_fast_state() {
        let line = EmbeddingCurve::new(CurveShape::Line { length: 10.0 }).unwrap();
        let fam = ConfinementFamily::harmonic(1.0, 10.0).unwrap();
        let sol = fast_ground_state(&line, &fam, 1e4, 1.0, 1.0, 400).unwrap();
        assert!((sol.e_gr - 50.0).abs() < 1e-6, "{}", sol.e_gr);
        assert!((sol.gap - 100.0).abs() < 1e-4, "{}", sol.gap);
    }

    #[test]
    fn flat_hardwall_fast_state() {
        let line = EmbeddingCurve::new(CurveShape::Line { length: 10.0 }).unwrap();
        let fam = ConfinementFamily::hardwall(CosineSeries::constant(1.0, 10.0)).unwrap();
        let sol = fast_ground_state(&line, &fam, 100.0, 2.0, 1.0, 199).unwrap();
        let exact = PI * PI * 1e4 / 2.0;
        assert!(((sol.e_gr - exact) / exact).abs() < 1e-6, "{}", sol.e_gr);
    }

    #[test]
    fn flat_problem_has_no_coupling() {
        let line = EmbeddingCurve::new(CurveShape::Line { length: 10.0 }).unwrap();
        let fam = ConfinementFamily::harmonic(1.0, 10.0).unwrap();
        let t = coupling_terms(&line, &fam, 1e3, 1.0, 32, 64).unwrap();
        for i in 0..32 {
            assert!(t.f[i].abs() < 1e-12 && t.h[i].abs() < 1e-12);
            assert!(t.fast_residual[i].abs() < 1e-9);
        }
    }
}
