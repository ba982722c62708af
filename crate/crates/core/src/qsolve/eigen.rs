use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::krylov::block_krylov;
use super::{DiscreteOperator, Layout, SymStencil};
use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

const DENSE_LIMIT: usize = 500;
const LINE_DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Tridiagonal,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub k: usize,
    /// Residual tolerance relative to `max(1, |E|)`.
    pub tol: f64,
    pub seed: u64,
    pub method: Method,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            k: 6,
            tol: 1e-9,
            seed: 0,
            method: Method::Auto,
        }
    }
}

/// Lowest eigenpairs with vectors normalised in the weighted inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// `||H psi - E psi||` in the weighted norm.
    pub residuals: Vec<f64>,
    /// `<psi, P psi>` for the reflection `P` of the layout.
    pub parity: Vec<f64>,
}

pub fn lowest_eigenpairs(op: &DiscreteOperator, k: usize, tol: f64, seed: u64) -> Result<EigenResult> {
    lowest_eigenpairs_with(
        op,
        &EigenOptions {
            k,
            tol,
            seed,
            method: Method::Auto,
        },
    )
}

pub fn lowest_eigenpairs_with(op: &DiscreteOperator, opts: &EigenOptions) -> Result<EigenResult> {
    let n = op.dim();
    let k = opts.k;
    if k == 0 || 4 * k > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k <= dim/4 (k = {k}, dim = {n})"
        )));
    }
    let st = op.symmetric();
    let layout = op.layout();
    let method = match opts.method {
        Method::Auto if layout.is_tridiagonal() => Method::Tridiagonal,
        Method::Auto if n < DENSE_LIMIT => Method::Dense,
        Method::Auto if (layout.n_blocks() == 1 || layout.block_size() == 1) && n < LINE_DENSE_LIMIT => Method::Dense,
        Method::Auto => Method::Krylov,
        Method::Tridiagonal if !layout.is_tridiagonal() => {
            return Err(Error::InvalidArgument("operator is not tridiagonal".into()));
        }
        m => m,
    };
    let tol = opts.tol.max(1e-14);
    let (mut values, mut vectors) = match method {
        Method::Tridiagonal => tridiagonal(&st, layout, k, opts.seed),
        Method::Dense => dense(&st, k),
        _ => block_krylov(&st, k, tol, opts.seed, op.shift_hint())?,
    };
    canonicalize_degenerate(layout, &mut values, &mut vectors);

    let weights = op.weights();
    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut parity = Vec::with_capacity(k);
    for (e, y) in values.iter().zip(&vectors) {
        let psi: Vec<f64> = y.iter().zip(weights).map(|(v, w)| v / w.sqrt()).collect();
        let h = op.apply(&psi);
        let res = h
            .iter()
            .zip(&psi)
            .zip(weights)
            .map(|((hv, p), w)| {
                let d = hv - e * p;
                d * d * w
            })
            .sum::<f64>()
            .sqrt();
        parity.push(reflection_overlap(layout, y, y));
        residuals.push(res);
        eigenvectors.push(psi);
    }
    for (i, (e, r)) in values.iter().zip(&residuals).enumerate() {
        if *r > 100.0 * tol * e.abs().max(1.0) + 1e-9 * e.abs().max(1.0) {
            let _ = i;
            return Err(Error::NoConvergence { iterations: 0 });
        }
    }
    Ok(EigenResult {
        eigenvalues: values,
        eigenvectors,
        residuals,
        parity,
    })
}

fn reflection_overlap(layout: &Layout, a: &[f64], b: &[f64]) -> f64 {
    a.iter().enumerate().map(|(i, v)| v * b[layout.reflect(i)]).sum()
}

/// Rotates each cluster of (numerically) degenerate eigenvectors into
/// eigenvectors of the reflection, even ones first, and fixes signs.
pub fn canonicalize_degenerate(layout: &Layout, values: &mut [f64], vectors: &mut [Vec<f64>]) {
    let k = values.len();
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && (values[end] - values[start]).abs() <= 1e-9 * values[start].abs().max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            let c = end - start;
            let p = DMatrix::from_fn(c, c, |a, b| {
                0.5 * (reflection_overlap(layout, &vectors[start + a], &vectors[start + b])
                    + reflection_overlap(layout, &vectors[start + b], &vectors[start + a]))
            });
            let eig = p.symmetric_eigen();
            let mut order: Vec<usize> = (0..c).collect();
            order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
            let n = vectors[start].len();
            let rotated: Vec<Vec<f64>> = order
                .iter()
                .map(|&col| {
                    let mut v = vec![0.0; n];
                    for a in 0..c {
                        let w = eig.eigenvectors[(a, col)];
                        for (dst, src) in v.iter_mut().zip(&vectors[start + a]) {
                            *dst += w * src;
                        }
                    }
                    v
                })
                .collect();
            for (a, v) in rotated.into_iter().enumerate() {
                vectors[start + a] = v;
            }
        }
        start = end;
    }
    for v in vectors.iter_mut() {
        fix_sign(v);
    }
}

fn fix_sign(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let flip = if sum.abs() > 1e-8 * norm * (v.len() as f64).sqrt() {
        sum < 0.0
    } else {
        let (mut best, mut idx) = (0.0f64, 0);
        for (i, x) in v.iter().enumerate() {
            if x.abs() > best * (1.0 + 1e-9) {
                best = x.abs();
                idx = i;
            }
        }
        v[idx] < 0.0
    };
    if flip {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn dense(st: &SymStencil, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = st.diag.len();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = st.diag[i];
        if st.r_off[i] != 0.0 {
            b[(i, i + 1)] += st.r_off[i];
            b[(i + 1, i)] += st.r_off[i];
        }
        if st.s_off[i] != 0.0 {
            let j = (i + st.m) % n;
            b[(i, j)] += st.s_off[i];
            b[(j, i)] += st.s_off[i];
        }
    }
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, c| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*c]));
    let values = order.iter().take(k).map(|i| eig.eigenvalues[*i]).collect();
    let vectors = order
        .iter()
        .take(k)
        .map(|i| eig.eigenvectors.column(*i).iter().copied().collect())
        .collect();
    (values, vectors)
}

fn tridiagonal(st: &SymStencil, layout: &Layout, k: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = st.diag.len();
    let d = &st.diag;
    let e: Vec<f64> = if layout.n_blocks() == 1 {
        st.r_off[..n - 1].to_vec()
    } else {
        st.s_off[..n - 1].to_vec()
    };
    let (values, vectors) = sturm_eigenpairs(d, &e, k, seed);
    (values, vectors)
}

/// Number of eigenvalues of the tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    let tiny = f64::MIN_POSITIVE.sqrt();
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let qq = if q.abs() < tiny { tiny.copysign(q) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / qq;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenpairs of a symmetric tridiagonal matrix by bisection and
/// inverse iteration.
pub(crate) fn sturm_eigenpairs(d: &[f64], e: &[f64], k: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let rad = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - rad);
        hi = hi.max(d[i] + rad);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    let mut values = Vec::with_capacity(k);
    for i in 0..k {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(d, e, mid) > i {
                b = mid;
            } else {
                a = mid;
            }
        }
        values.push(0.5 * (a + b));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &mu in &values {
        let shift = mu + 1e-13 * scale;
        let mut v: Vec<f64> = (0..n)
            .map(|_| 0.5 + (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
            .collect();
        for _ in 0..3 {
            v = solve_shifted_tridiagonal(d, e, shift, &v);
            for prev in &vectors {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, p) in v.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        vectors.push(v);
    }
    (values, vectors)
}

/// Solves `(T - mu I) x = b` by Gaussian elimination with partial pivoting
/// (the `gtsv` scheme), returning the normalised solution.
fn solve_shifted_tridiagonal(d: &[f64], e: &[f64], mu: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let tiny = 1e-300;
    let mut diag: Vec<f64> = d.iter().map(|x| x - mu).collect();
    let mut du = e.to_vec();
    // holds the sub-diagonal, then the second super-diagonal fill
    let mut dl = e.to_vec();
    let mut x = b.to_vec();
    for i in 0..n - 1 {
        if diag[i].abs() >= dl[i].abs() {
            if diag[i].abs() < tiny {
                diag[i] = tiny;
            }
            let fact = dl[i] / diag[i];
            diag[i + 1] -= fact * du[i];
            x[i + 1] -= fact * x[i];
            dl[i] = 0.0;
        } else {
            let fact = diag[i] / dl[i];
            diag[i] = dl[i];
            let temp = diag[i + 1];
            diag[i + 1] = du[i] - fact * temp;
            if i + 1 < n - 1 {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let t = x[i];
            x[i] = x[i + 1];
            x[i + 1] = t - fact * x[i + 1];
        }
    }
    if diag[n - 1].abs() < tiny {
        diag[n - 1] = tiny;
    }
    x[n - 1] /= diag[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / diag[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / diag[i];
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return b.to_vec();
    }
    x.iter().map(|v| v / norm).collect()
}

/// Removes the `h^2` error from paired eigenvalue lists on two spacings.
pub fn richardson_levels(fine: &[f64], h_fine: f64, coarse: &[f64], h_coarse: f64) -> Vec<f64> {
    fine.iter()
        .zip(coarse)
        .map(|(f, c)| crate::numeric::richardson_h2(*f, h_fine, *c, h_coarse))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsolve::{build_laplace_beltrami_1d, Axis, FlatMetric, Grid1D};
    use core::f64::consts::PI;

    #[test]
    fn sturm_matches_dense_on_random_tridiagonal() {
        let n = 40;
        let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 1.0 + (i as f64 * 0.11).cos()).collect();
        let (vals, vecs) = sturm_eigenpairs(&d, &e, 5, 1);
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if j == i + 1 {
                e[i]
            } else if i == j + 1 {
                e[j]
            } else {
                0.0
            }
        });
        let mut reference: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for i in 0..5 {
            assert!((vals[i] - reference[i]).abs() < 1e-12, "{i}: {} vs {}", vals[i], reference[i]);
            let v = nalgebra::DVector::from_column_slice(&vecs[i]);
            let r = &m * &v - &v * vals[i];
            assert!(r.norm() < 1e-10);
        }
    }

    #[test]
    fn infinite_well_levels() {
        let g = Grid1D::dirichlet(799, 0.0, PI).unwrap();
        let op = build_laplace_beltrami_1d(&g, Axis::R { s: 0.0 }, &FlatMetric, 1.0).unwrap();
        let res = lowest_eigenpairs(&op, 3, 1e-12, 0).unwrap();
        for (e, exact) in res.eigenvalues.iter().zip([0.5, 2.0, 4.5]) {
            assert!((e - exact).abs() < 1e-4, "{e}");
        }
    }

    #[test]
    fn ring_doublets_are_canonical() {
        let g = Grid1D::periodic(64, 2.0 * PI).unwrap();
        let op = build_laplace_beltrami_1d(&g, Axis::S { r: 0.0 }, &FlatMetric, 1.0).unwrap();
        let res = lowest_eigenpairs(&op, 5, 1e-12, 0).unwrap();
        assert!(res.parity[1] > 0.999 && res.parity[2] < -0.999);
        assert!(res.parity[3] > 0.999 && res.parity[4] < -0.999);
        assert!(res.eigenvectors[1][0] > 0.0);
    }
}
