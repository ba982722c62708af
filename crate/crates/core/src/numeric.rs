//! Small numerical kernels shared by the pipelines: least squares, power-law
//! fits, extrapolation in the confinement scale, quadrature and root finding.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Least-squares solution of `a x = b` (minimum-norm when rank deficient).
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    svd.solve(b, 1e-12 * smax.max(1e-300))
        .map_err(|e| Error::InvalidArgument(format!("least squares: {e}")))
}

/// Straight-line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "line fit needs matching samples (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("line fit with degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let d = b - intercept - slope * a;
            d * d
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        residual_rms: (ss / n).sqrt(),
    })
}

/// Exponent `p` of `|y| ~ x^p` from a log-log line fit.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if y.iter().any(|v| *v == 0.0 || !v.is_finite()) || x.iter().any(|v| *v <= 0.0) {
        return Err(Error::InvalidArgument(
            "power-law fit needs positive abscissae and non-zero finite ordinates".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    fit_line(&lx, &ly)
}

/// Large-scale limit of a quantity sampled at several confinement scales,
/// using the model `E(lambda) = E_inf + a lambda^{-1/2} + b lambda^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaExtrapolation {
    pub limit: f64,
    /// Model coefficients `[E_inf, a, b]` (trailing entries absent for short fits).
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
    /// Change of the limit when the smallest scale is dropped from the fit.
    pub window_shift: f64,
    /// Distance between the largest-scale sample and the limit.
    pub finite_correction: f64,
    pub uncertainty: f64,
}

impl LambdaExtrapolation {
    /// Fails when the limit moves between fit windows by more than three times
    /// the scale of the correction being extrapolated.
    pub fn check_stable(&self) -> Result<()> {
        let scale = self
            .residual_rms
            .max(self.finite_correction)
            .max(1e-12 * self.limit.abs() + 1e-14);
        if self.window_shift > 3.0 * scale {
            Err(Error::ExtrapolationUnstable {
                shift: self.window_shift,
                scale,
            })
        } else {
            Ok(())
        }
    }
}

fn fit_inverse_sqrt_model(lambdas: &[f64], values: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = lambdas.len();
    let terms = n.min(3);
    let a = DMatrix::from_fn(n, terms, |i, j| lambdas[i].powf(-0.5 * j as f64));
    let b = DVector::from_column_slice(values);
    let c = least_squares(&a, &b)?;
    let fitted = &a * &c;
    let ss: f64 = (fitted - b).iter().map(|d| d * d).sum();
    Ok((c.iter().copied().collect(), (ss / n as f64).sqrt()))
}

pub fn extrapolate_in_lambda(lambdas: &[f64], values: &[f64]) -> Result<LambdaExtrapolation> {
    if lambdas.len() != values.len() || lambdas.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "extrapolation needs at least two scales (got {})",
            lambdas.len()
        )));
    }
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|a, b| lambdas[*a].total_cmp(&lambdas[*b]));
    let lam: Vec<f64> = order.iter().map(|i| lambdas[*i]).collect();
    let val: Vec<f64> = order.iter().map(|i| values[*i]).collect();

    let (coefficients, residual_rms) = fit_inverse_sqrt_model(&lam, &val)?;
    let limit = coefficients[0];
    let (window, _) = fit_inverse_sqrt_model(&lam[1..], &val[1..])?;
    let window_shift = (window[0] - limit).abs();
    let finite_correction = (val[val.len() - 1] - limit).abs();
    Ok(LambdaExtrapolation {
        limit,
        coefficients,
        residual_rms,
        window_shift,
        finite_correction,
        uncertainty: window_shift + residual_rms,
    })
}

/// Richardson combination of two second-order results on spacings `h_fine < h_coarse`.
pub fn richardson_h2(fine: f64, h_fine: f64, coarse: f64, h_coarse: f64) -> f64 {
    let a = h_coarse * h_coarse;
    let b = h_fine * h_fine;
    (fine * a - coarse * b) / (a - b)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Brent's method on a sign-changing bracket.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFind(format!(
            "no sign change on [{lo}, {hi}] (f = {fa:e}, {fb:e})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::RootFind("Brent iteration limit".into()))
}

/// Expands `hi` geometrically from `lo` until `f` changes sign, then solves.
pub fn find_root_above<F: FnMut(f64) -> f64>(mut f: F, lo: f64, step: f64, xtol: f64) -> Result<f64> {
    let f_lo = f(lo);
    let mut hi = lo + step;
    for _ in 0..200 {
        let f_hi = f(hi);
        if f_hi.signum() != f_lo.signum() || f_hi == 0.0 {
            return find_root(f, lo, hi, xtol);
        }
        hi = lo + 2.0 * (hi - lo);
    }
    Err(Error::RootFind("could not bracket root".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn brent_finds_cube_root() {
        let r = find_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        assert!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn lambda_extrapolation_recovers_model() {
        let lams = [1e3, 1e4, 1e5, 1e6];
        let vals: Vec<f64> = lams
            .iter()
            .map(|l: &f64| -0.125 + 0.3 / l.sqrt() - 2.0 / l)
            .collect();
        let ex = extrapolate_in_lambda(&lams, &vals).unwrap();
        assert!((ex.limit + 0.125).abs() < 1e-12);
        assert!(ex.check_stable().is_ok());
    }

    #[test]
    fn power_law_slope() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        let fit = power_law_exponent(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn richardson_cancels_h2() {
        let exact = 1.0;
        let e = |h: f64| exact + 0.7 * h * h + 0.01 * h.powi(4);
        let r = richardson_h2(e(0.01), 0.01, e(0.02), 0.02);
        assert!((r - exact).abs() < 1e-9);
    }
}
