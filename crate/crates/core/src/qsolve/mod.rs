//! Finite-difference Laplace-Beltrami operators on tubular grids and their
//! lowest eigenpairs.
//!
//! Operators are stored as a symmetric stiffness matrix `K` plus a diagonal
//! mass `W` (the volume element times the cell size), so that `H = W^{-1} K`
//! is self-adjoint in `<u, v> = sum u v W`. The stencil is the five-point flux
//! form with metric factors taken at half-grid points.

mod eigen;
mod krylov;

pub use eigen::{
    canonicalize_degenerate, lowest_eigenpairs, lowest_eigenpairs_with, richardson_levels,
    EigenOptions, EigenResult, Method,
};


use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{sphere_scalar_curvature, EmbeddingCurve, TubularMetric};
use crate::potentials::{ConfinementFamily, ConfinementKind, LocalProfile};
use crate::series::CosineSeries;
#[allow(unused_imports)]
use num_traits::Float;

const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// Uniform samples of one coordinate. Periodic grids omit the duplicate
/// endpoint; Dirichlet grids hold interior points only, with the walls one
/// spacing beyond the first and last node.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n: usize,
    start: f64,
    spacing: f64,
    boundary: Boundary,
}

impl Grid1D {
    pub fn periodic(n: usize, length: f64) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("need at least {MIN_POINTS} points, got {n}")));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {length}")));
        }
        Ok(Self {
            n,
            start: 0.0,
            spacing: length / n as f64,
            boundary: Boundary::Periodic,
        })
    }

    pub fn dirichlet(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("need at least {MIN_POINTS} points, got {n}")));
        }
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        let spacing = (hi - lo) / (n + 1) as f64;
        Ok(Self {
            n,
            start: lo + spacing,
            spacing,
            boundary: Boundary::Dirichlet,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.spacing * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Length of the periodic cell, or distance between the Dirichlet walls.
    pub fn extent(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.spacing * self.n as f64,
            Boundary::Dirichlet => self.spacing * (self.n + 1) as f64,
        }
    }

    /// The same interval with (about) half as many points.
    pub fn coarsened(&self) -> Result<Self> {
        match self.boundary {
            Boundary::Periodic => Self::periodic(self.n / 2, self.extent()),
            Boundary::Dirichlet => {
                let lo = self.start - self.spacing;
                let n = if self.n % 2 == 1 { self.n.div_ceil(2) - 1 } else { self.n / 2 };
                Self::dirichlet(n, lo, lo + self.extent())
            }
        }
    }
}

/// Periodic arc-length grid times a Dirichlet normal grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub s: Grid1D,
    pub r: Grid1D,
}

impl Grid2D {
    pub fn new(s: Grid1D, r: Grid1D) -> Result<Self> {
        if s.boundary() != Boundary::Periodic || r.boundary() != Boundary::Dirichlet {
            return Err(Error::InvalidGrid(
                "tube grids are periodic in s and Dirichlet in r".into(),
            ));
        }
        Ok(Self { s, r })
    }

    /// Grid sized for the confinement at scale `lambda`.
    pub fn for_confinement(
        curve: &EmbeddingCurve,
        family: &ConfinementFamily,
        lambda: f64,
        hbar: f64,
        n_s: usize,
        n_r: usize,
    ) -> Result<Self> {
        let half = confinement_half_extent(curve, family, lambda, hbar)?;
        Self::new(
            Grid1D::periodic(n_s, curve.length())?,
            Grid1D::dirichlet(n_r, -half, half)?,
        )
    }

    pub fn len(&self) -> usize {
        self.s.len() * self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Half-width of the normal grid: six oscillator lengths of the softest
/// section, shrunk to the tube cap `0.8 / max|kappa|` while that still leaves
/// four lengths. Hard walls use the widest wall position.
pub fn confinement_half_extent(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    lambda: f64,
    hbar: f64,
) -> Result<f64> {
    if !(lambda > 0.0) || !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda and hbar must be positive (got {lambda}, {hbar})"
        )));
    }
    let cap = 0.8 * curve.min_validity_bound();
    match family.kind() {
        ConfinementKind::Smooth => {
            let sigma = (hbar / (family.min_strength() * lambda.sqrt())).sqrt();
            let wanted = 6.0 * sigma;
            if wanted <= cap {
                Ok(wanted)
            } else if cap >= 4.0 * sigma {
                Ok(cap)
            } else {
                Err(Error::TubeTooThin {
                    needed: 4.0 * sigma,
                    available: cap,
                })
            }
        }
        ConfinementKind::Hardwall => {
            let half = 0.5 * family.max_strength() / lambda;
            if half < cap {
                Ok(half)
            } else {
                Err(Error::TubeTooThin {
                    needed: half,
                    available: cap,
                })
            }
        }
    }
}

/// Diagonal metric `diag(g_ss, g_rr)` with volume element `sqrt_g`.
pub trait DiagonalMetric {
    fn components(&self, s: f64, r: f64) -> Result<TubularMetric>;
}

/// Euclidean metric in the grid coordinates.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatMetric;

impl DiagonalMetric for FlatMetric {
    fn components(&self, _s: f64, _r: f64) -> Result<TubularMetric> {
        Ok(TubularMetric::FLAT)
    }
}

impl DiagonalMetric for EmbeddingCurve {
    fn components(&self, s: f64, r: f64) -> Result<TubularMetric> {
        self.metric_at(s, r)
    }
}

/// Tubular metric of a fixed curvature (one frozen arc-length position).
#[derive(Debug, Clone, Copy)]
pub struct FrozenCurvature(pub f64);

impl DiagonalMetric for FrozenCurvature {
    fn components(&self, s: f64, r: f64) -> Result<TubularMetric> {
        crate::geometry::tubular_metric(self.0, s, r)
    }
}

/// Another metric with its volume element multiplied by a constant.
pub struct ScaledVolume<'a, M: ?Sized> {
    pub inner: &'a M,
    pub factor: f64,
}

impl<M: DiagonalMetric + ?Sized> DiagonalMetric for ScaledVolume<'_, M> {
    fn components(&self, s: f64, r: f64) -> Result<TubularMetric> {
        let mut m = self.inner.components(s, r)?;
        m.sqrt_g *= self.factor;
        Ok(m)
    }
}

/// Coordinates of the unknowns: `s_points.len()` blocks of `r_points.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub s_points: Vec<f64>,
    pub r_points: Vec<f64>,
    pub h_s: f64,
    pub h_r: f64,
    /// Derivatives along `s` (between blocks) are present.
    pub s_active: bool,
    /// Derivatives along `r` (within blocks) are present.
    pub r_active: bool,
    pub s_boundary: Boundary,
}

impl Layout {
    pub fn n_blocks(&self) -> usize {
        self.s_points.len()
    }

    pub fn block_size(&self) -> usize {
        self.r_points.len()
    }

    pub fn dim(&self) -> usize {
        self.n_blocks() * self.block_size()
    }

    pub fn cyclic(&self) -> bool {
        self.s_active && self.s_boundary == Boundary::Periodic
    }

    pub fn index(&self, b: usize, j: usize) -> usize {
        b * self.block_size() + j
    }

    /// Image of unknown `idx` under `s -> -s` (periodic) or the mirror of the
    /// `s` interval (Dirichlet).
    pub fn reflect(&self, idx: usize) -> usize {
        let nb = self.n_blocks();
        let m = self.block_size();
        let (b, j) = (idx / m, idx % m);
        let rb = if !self.s_active {
            b
        } else if self.cyclic() {
            (nb - b) % nb
        } else {
            nb - 1 - b
        };
        let rj = if self.s_active || !self.r_active { j } else { m - 1 - j };
        rb * m + rj
    }

    /// Whether the matrix is tridiagonal (one line of unknowns, not periodic).
    pub fn is_tridiagonal(&self) -> bool {
        self.n_blocks() == 1 || (self.block_size() == 1 && !self.cyclic())
    }
}

/// Which coordinate a one-dimensional grid discretises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    /// Along the curve at fixed normal offset `r`.
    S { r: f64 },
    /// Across the curve at fixed arc length `s`.
    R { s: f64 },
}

/// Sparse symmetric stiffness with a diagonal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    layout: Layout,
    diag: Vec<f64>,
    /// `K[(b, j), (b, j + 1)]`; the last entry of each block is zero.
    r_off: Vec<f64>,
    /// `K[(b, j), (b + 1, j)]`, wrapping to block 0 when periodic.
    s_off: Vec<f64>,
    weights: Vec<f64>,
    hbar: f64,
    shift_hint: Option<f64>,
}

/// Symmetrised stencil `W^{-1/2} K W^{-1/2}` in the same storage.
#[derive(Debug, Clone)]
pub(crate) struct SymStencil {
    pub nb: usize,
    pub m: usize,
    pub cyclic: bool,
    pub diag: Vec<f64>,
    pub r_off: Vec<f64>,
    pub s_off: Vec<f64>,
}

impl SymStencil {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            y[i] = self.diag[i] * x[i];
        }
        for i in 0..n {
            let c = self.r_off[i];
            if c != 0.0 {
                y[i] += c * x[i + 1];
                y[i + 1] += c * x[i];
            }
        }
        for i in 0..n {
            let c = self.s_off[i];
            if c != 0.0 {
                let k = (i + self.m) % n;
                y[i] += c * x[k];
                y[k] += c * x[i];
            }
        }
    }

    /// Lower bound on the spectrum from Gershgorin discs.
    pub fn gershgorin_lower(&self) -> f64 {
        let n = self.diag.len();
        let mut radius = vec![0.0; n];
        for i in 0..n {
            if self.r_off[i] != 0.0 {
                radius[i] += self.r_off[i].abs();
                radius[i + 1] += self.r_off[i].abs();
            }
            if self.s_off[i] != 0.0 {
                let k = (i + self.m) % n;
                radius[i] += self.s_off[i].abs();
                radius[k] += self.s_off[i].abs();
            }
        }
        (0..n).map(|i| self.diag[i] - radius[i]).fold(f64::INFINITY, f64::min)
    }
}

impl DiscreteOperator {
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Mass weights `sqrt_g * cell size` of the discrete inner product.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shift_hint(&self) -> Option<f64> {
        self.shift_hint
    }

    /// Expected position just below the lowest eigenvalue; speeds up the
    /// iterative solver.
    pub fn with_shift_hint(mut self, hint: f64) -> Self {
        self.shift_hint = Some(hint);
        self
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    /// `K x`.
    pub fn apply_stiffness(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = (0..n).map(|i| self.diag[i] * x[i]).collect();
        let m = self.layout.block_size();
        for i in 0..n {
            let c = self.r_off[i];
            if c != 0.0 {
                y[i] += c * x[i + 1];
                y[i + 1] += c * x[i];
            }
            let c = self.s_off[i];
            if c != 0.0 {
                let k = (i + m) % n;
                y[i] += c * x[k];
                y[k] += c * x[i];
            }
        }
        y
    }

    /// `H x = W^{-1} K x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.apply_stiffness(x);
        for (v, w) in y.iter_mut().zip(&self.weights) {
            *v /= w;
        }
        y
    }

    /// Entry `H[i, k]` of the non-symmetric form `W^{-1} K`.
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        let n = self.dim();
        let m = self.layout.block_size();
        let kij = if i == k {
            self.diag[i]
        } else if k == i + 1 && self.r_off[i] != 0.0 {
            self.r_off[i]
        } else if i == k + 1 && self.r_off[k] != 0.0 {
            self.r_off[k]
        } else if (i + m) % n == k && self.s_off[i] != 0.0 {
            self.s_off[i]
        } else if (k + m) % n == i && self.s_off[k] != 0.0 {
            self.s_off[k]
        } else {
            0.0
        };
        kij / self.weights[i]
    }

    /// Adds the multiplicative potential `f(s, r)`.
    pub fn with_potential<F: Fn(f64, f64) -> f64>(mut self, f: F) -> Result<Self> {
        let m = self.layout.block_size();
        for b in 0..self.layout.n_blocks() {
            for j in 0..m {
                let (s, r) = (self.layout.s_points[b], self.layout.r_points[j]);
                let v = f(s, r);
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "potential is not finite at (s = {s}, r = {r})"
                    )));
                }
                let idx = b * m + j;
                self.diag[idx] += v * self.weights[idx];
            }
        }
        Ok(self)
    }

    /// Adds a constant to every eigenvalue.
    pub fn shifted(self, c: f64) -> Self {
        let hint = self.shift_hint.map(|h| h + c);
        let mut op = self.with_potential(|_, _| c).expect("finite constant");
        op.shift_hint = hint;
        op
    }

    pub(crate) fn symmetric(&self) -> SymStencil {
        let n = self.dim();
        let m = self.layout.block_size();
        let isw: Vec<f64> = self.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let diag = (0..n).map(|i| self.diag[i] * isw[i] * isw[i]).collect();
        let r_off = (0..n)
            .map(|i| if self.r_off[i] != 0.0 { self.r_off[i] * isw[i] * isw[i + 1] } else { 0.0 })
            .collect();
        let s_off = (0..n)
            .map(|i| {
                if self.s_off[i] != 0.0 {
                    self.s_off[i] * isw[i] * isw[(i + m) % n]
                } else {
                    0.0
                }
            })
            .collect();
        SymStencil {
            nb: self.layout.n_blocks(),
            m,
            cyclic: self.layout.cyclic(),
            diag,
            r_off,
            s_off,
        }
    }
}

fn metric_checked<M: DiagonalMetric + ?Sized>(metric: &M, s: f64, r: f64) -> Result<TubularMetric> {
    let g = metric.components(s, r)?;
    if !(g.sqrt_g > 0.0) || !(g.g_ss > 0.0) || !(g.g_rr > 0.0) {
        return Err(Error::NonPositiveMetric { s, r });
    }
    Ok(g)
}

fn assemble<M: DiagonalMetric + ?Sized>(layout: Layout, metric: &M, hbar: f64) -> Result<DiscreteOperator> {
    let nb = layout.n_blocks();
    let m = layout.block_size();
    let n = nb * m;
    let c0 = 0.5 * hbar * hbar;
    let (hs, hr) = (layout.h_s, layout.h_r);
    let cell = (if layout.s_active { hs } else { 1.0 }) * (if layout.r_active { hr } else { 1.0 });
    let mut diag = vec![0.0; n];
    let mut r_off = vec![0.0; n];
    let mut s_off = vec![0.0; n];
    let mut weights = vec![0.0; n];

    for b in 0..nb {
        let s = layout.s_points[b];
        for j in 0..m {
            let r = layout.r_points[j];
            let idx = b * m + j;
            weights[idx] = metric_checked(metric, s, r)?.sqrt_g * cell;

            if layout.r_active {
                let flux = |rh: f64| -> Result<f64> {
                    let g = metric_checked(metric, s, rh)?;
                    Ok(c0 * g.sqrt_g / g.g_rr * cell / (hr * hr))
                };
                if j == 0 {
                    diag[idx] += flux(r - 0.5 * hr)?;
                }
                let c = flux(r + 0.5 * hr)?;
                diag[idx] += c;
                if j + 1 < m {
                    diag[idx + 1] += c;
                    r_off[idx] = -c;
                }
            }

            if layout.s_active {
                let flux = |sh: f64| -> Result<f64> {
                    let g = metric_checked(metric, sh, r)?;
                    Ok(c0 * g.sqrt_g / g.g_ss * cell / (hs * hs))
                };
                let last = b + 1 == nb;
                match layout.s_boundary {
                    Boundary::Periodic => {
                        let c = flux(s + 0.5 * hs)?;
                        let k = (idx + m) % n;
                        diag[idx] += c;
                        diag[k] += c;
                        s_off[idx] = -c;
                    }
                    Boundary::Dirichlet => {
                        if b == 0 {
                            diag[idx] += flux(s - 0.5 * hs)?;
                        }
                        let c = flux(s + 0.5 * hs)?;
                        diag[idx] += c;
                        if !last {
                            diag[idx + m] += c;
                            s_off[idx] = -c;
                        }
                    }
                }
            }
        }
    }
    let hbar_ok = hbar > 0.0 && hbar.is_finite();
    if !hbar_ok {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    Ok(DiscreteOperator {
        layout,
        diag,
        r_off,
        s_off,
        weights,
        hbar,
        shift_hint: None,
    })
}

/// `-hbar^2/2` times the Laplace-Beltrami operator on a tube grid.
pub fn build_laplace_beltrami<M: DiagonalMetric + ?Sized>(
    grid: &Grid2D,
    metric: &M,
    hbar: f64,
) -> Result<DiscreteOperator> {
    let layout = Layout {
        s_points: grid.s.points(),
        r_points: grid.r.points(),
        h_s: grid.s.spacing(),
        h_r: grid.r.spacing(),
        s_active: true,
        r_active: true,
        s_boundary: Boundary::Periodic,
    };
    assemble(layout, metric, hbar)
}

/// One-dimensional version along `s` (at fixed `r`) or along `r` (at fixed `s`).
pub fn build_laplace_beltrami_1d<M: DiagonalMetric + ?Sized>(
    grid: &Grid1D,
    axis: Axis,
    metric: &M,
    hbar: f64,
) -> Result<DiscreteOperator> {
    let layout = match axis {
        Axis::S { r } => Layout {
            s_points: grid.points(),
            r_points: vec![r],
            h_s: grid.spacing(),
            h_r: 1.0,
            s_active: true,
            r_active: false,
            s_boundary: grid.boundary(),
        },
        Axis::R { s } => {
            if grid.boundary() != Boundary::Dirichlet {
                return Err(Error::InvalidGrid("normal grids must be Dirichlet".into()));
            }
            Layout {
                s_points: vec![s],
                r_points: grid.points(),
                h_s: 1.0,
                h_r: grid.spacing(),
                s_active: false,
                r_active: true,
                s_boundary: Boundary::Dirichlet,
            }
        }
    };
    assemble(layout, metric, hbar)
}

/// Ground energy of the flat, harmonic fast problem on a given normal grid
/// (discretisation reference for the `O(hbar^2)` residuals).
pub fn flat_reference_energy(r_grid: &Grid1D, profile: LocalProfile, lambda: f64, hbar: f64) -> Result<f64> {
    let harmonic = match profile {
        LocalProfile::Smooth { omega0, .. } => LocalProfile::Smooth {
            omega0,
            cubic: 0.0,
            quartic: 0.0,
        },
        wall => wall,
    };
    let op = build_laplace_beltrami_1d(r_grid, Axis::R { s: 0.0 }, &FlatMetric, hbar)?
        .with_potential(|_, r| harmonic.eval(lambda, r))?;
    Ok(lowest_eigenpairs(&op, 1, 1e-12, 0)?.eigenvalues[0])
}

/// Full tube Hamiltonian `-hbar^2/2 Laplace-Beltrami + V(s) + lambda v(r; s)`.
pub fn build_full_hamiltonian(
    grid: &Grid2D,
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    lambda: f64,
    v_slow: &CosineSeries,
    hbar: f64,
) -> Result<DiscreteOperator> {
    if !family.is_tuned() {
        return Err(Error::UntunedFamily);
    }
    family.check_curve(curve)?;
    if family.kind() == ConfinementKind::Hardwall {
        let half = 0.5 * family.max_strength() / lambda;
        if (grid.r.extent() - 2.0 * half).abs() > 1e-12 * half {
            return Err(Error::UnsupportedConfinement(
                "hard-wall tube grids must span exactly the wall".into(),
            ));
        }
    }
    let kappa: Vec<f64> = grid.s.points().iter().map(|s| curve.curvature(*s)).collect();
    let kappa_half: Vec<f64> = grid
        .s
        .points()
        .iter()
        .map(|s| curve.curvature(s + 0.5 * grid.s.spacing()))
        .collect();
    let metric = SampledTube {
        s0: grid.s.point(0),
        h: grid.s.spacing(),
        kappa,
        kappa_half,
        fallback: curve,
    };
    let profile: Vec<LocalProfile> = grid.s.points().iter().map(|s| family.local(*s)).collect();
    let s_points = grid.s.points();
    let h_s = grid.s.spacing();
    let op = build_laplace_beltrami(grid, &metric, hbar)?.with_potential(|s, r| {
        let b = (((s - s_points[0]) / h_s).round() as usize).min(s_points.len() - 1);
        v_slow.eval(s) + profile[b].eval(lambda, r)
    })?;

    let e_ref = flat_reference_energy(&grid.r, family.local(0.0), lambda, hbar)?;
    let v_min = s_points.iter().map(|s| v_slow.eval(*s)).fold(f64::INFINITY, f64::min);
    let anharm = s_points
        .iter()
        .map(|s| family.residual_shift(*s, hbar))
        .fold(0.0, |a: f64, b| a.min(b));
    let kmax = curve.max_abs_curvature();
    let margin = hbar * hbar * kmax * kmax * 0.25 - anharm + 0.02 * e_ref.abs() + 1e-3;
    Ok(op.with_shift_hint(e_ref + v_min - margin))
}

/// Curvature cached on the nodes and half-nodes of a periodic `s` grid.
struct SampledTube<'a> {
    s0: f64,
    h: f64,
    kappa: Vec<f64>,
    kappa_half: Vec<f64>,
    fallback: &'a EmbeddingCurve,
}

impl DiagonalMetric for SampledTube<'_> {
    fn components(&self, s: f64, r: f64) -> Result<TubularMetric> {
        let x = (s - self.s0) / self.h;
        let n = self.kappa.len() as f64;
        let k = x.round();
        let kappa = if (x - k).abs() < 1e-9 {
            self.kappa[((k % n + n) % n) as usize]
        } else if (x - k).abs() > 0.5 - 1e-9 {
            let lo = (x - 0.5).round();
            self.kappa_half[((lo % n + n) % n) as usize]
        } else {
            self.fallback.curvature(s)
        };
        crate::geometry::tubular_metric(kappa, s, r)
    }
}

/// Curve or round sphere for direct quantization on the constraint manifold.
#[derive(Debug, Clone, Copy)]
pub enum DirectManifold<'a> {
    Curve { curve: &'a EmbeddingCurve, n_s: usize },
    Sphere { radius: f64 },
}

/// Analytic spectrum `E_l = hbar^2 l (l + 1) / (2 a^2) + alpha hbar^2 R + V0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpectrum {
    pub radius: f64,
    pub alpha: f64,
    pub hbar: f64,
    pub v0: f64,
}

impl SphereSpectrum {
    pub fn scalar_curvature(&self) -> f64 {
        2.0 / (self.radius * self.radius)
    }

    /// Energy and degeneracy `2l + 1` of level `l`.
    pub fn level(&self, l: usize) -> (f64, usize) {
        let lf = l as f64;
        let h2 = self.hbar * self.hbar;
        (
            h2 * lf * (lf + 1.0) / (2.0 * self.radius * self.radius) + self.alpha * h2 * self.scalar_curvature() + self.v0,
            2 * l + 1,
        )
    }

    /// The lowest `count` eigenvalues with multiplicity.
    pub fn eigenvalues(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut l = 0;
        while out.len() < count {
            let (e, d) = self.level(l);
            for _ in 0..d {
                if out.len() < count {
                    out.push(e);
                }
            }
            l += 1;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum DirectQuantization {
    Operator(DiscreteOperator),
    Sphere(SphereSpectrum),
}

impl DirectQuantization {
    pub fn eigenvalues(&self, count: usize, tol: f64, seed: u64) -> Result<Vec<f64>> {
        match self {
            DirectQuantization::Operator(op) => Ok(lowest_eigenpairs(op, count, tol, seed)?.eigenvalues),
            DirectQuantization::Sphere(sp) => Ok(sp.eigenvalues(count)),
        }
    }
}

/// Direct quantization `-hbar^2/2 Laplace-Beltrami + V + alpha hbar^2 R`.
/// A curve has no intrinsic curvature so `alpha` drops out; on the sphere
/// `V` must be constant.
pub fn build_direct_hamiltonian(
    manifold: DirectManifold<'_>,
    v_slow: &CosineSeries,
    alpha: f64,
    hbar: f64,
) -> Result<DirectQuantization> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be finite, got {alpha}")));
    }
    match manifold {
        DirectManifold::Curve { curve, n_s } => {
            let grid = Grid1D::periodic(n_s, curve.length())?;
            let op = build_laplace_beltrami_1d(&grid, Axis::S { r: 0.0 }, &FlatMetric, hbar)?
                .with_potential(|s, _| v_slow.eval(s))?;
            Ok(DirectQuantization::Operator(op))
        }
        DirectManifold::Sphere { radius } => {
            sphere_scalar_curvature(radius)?;
            if !v_slow.is_constant() {
                return Err(Error::InvalidArgument(
                    "sphere quantization supports constant slow potentials only".into(),
                ));
            }
            Ok(DirectQuantization::Sphere(SphereSpectrum {
                radius,
                alpha,
                hbar,
                v0: v_slow.mean(),
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveShape;
    use core::f64::consts::PI;

    #[test]
    fn constant_is_in_kernel() {
        let g = Grid1D::periodic(64, 3.0).unwrap();
        let op = build_laplace_beltrami_1d(&g, Axis::S { r: 0.0 }, &FlatMetric, 1.0).unwrap();
        let y = op.apply(&vec![1.0; 64]);
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn circle_stencil_carries_inverse_metric() {
        let curve = EmbeddingCurve::new(CurveShape::Circle { radius: 1.0 }).unwrap();
        let s = Grid1D::periodic(32, curve.length()).unwrap();
        // node r = 0.1 sits at index 10 of this grid
        let r = Grid1D::dirichlet(19, -0.45, 0.55).unwrap();
        let j = 10;
        assert!((r.point(j) - 0.1).abs() < 1e-12);
        let grid = Grid2D::new(s.clone(), r.clone()).unwrap();
        let op = build_laplace_beltrami(&grid, &curve, 1.0).unwrap();
        let m = r.len();
        let i = 3 * m + j;
        let h = s.spacing();
        let g_ss_inv = -op.entry(i, i + m) * 2.0 * h * h;
        assert!((g_ss_inv - 1.0 / 0.81).abs() < 1e-10, "{g_ss_inv}");
    }

    #[test]
    fn sphere_spectrum_shifts() {
        let v = CosineSeries::zero(1.0);
        let sixth = build_direct_hamiltonian(DirectManifold::Sphere { radius: 1.0 }, &v, 1.0 / 6.0, 1.0).unwrap();
        let e = sixth.eigenvalues(4, 0.0, 0).unwrap();
        assert!((e[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((e[1] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(e[1], e[3]);
    }

    #[test]
    fn grid_extent_rules() {
        let circle = EmbeddingCurve::new(CurveShape::Circle { radius: 1.0 }).unwrap();
        let fam = ConfinementFamily::harmonic(1.0, 2.0 * PI).unwrap();
        let half = confinement_half_extent(&circle, &fam, 1e4, 1.0).unwrap();
        assert!((half - 0.6).abs() < 1e-12);
        let capped = confinement_half_extent(&circle, &fam, 1e3, 1.0).unwrap();
        assert!((capped - 0.8).abs() < 1e-12);
        assert!(matches!(
            confinement_half_extent(&circle, &fam, 10.0, 1.0),
            Err(Error::TubeTooThin { .. })
        ));
    }

    #[test]
    fn coarsened_dirichlet_doubles_spacing() {
        let g = Grid1D::dirichlet(99, -1.0, 1.0).unwrap();
        let c = g.coarsened().unwrap();
        assert!((c.spacing() - 2.0 * g.spacing()).abs() < 1e-15);
        assert_eq!(c.extent(), g.extent());
    }
}
