//! Shift-invert block Krylov iteration for the lowest eigenpairs of a
//! block-(cyclic-)tridiagonal stencil.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::SymStencil;
use crate::error::{Error, Result};

const BASIS_BLOCKS: usize = 4;
const MAX_RESTARTS: usize = 300;

/// Cholesky factor of `B - sigma I` for a block-tridiagonal `B`, with a dense
/// border row when the blocks close periodically.
pub struct BlockCholesky {
    nb: usize,
    m: usize,
    cyclic: bool,
    diag: Vec<DMatrix<f64>>,
    /// `L[b, b - 1]`, entry 0 unused.
    sub: Vec<DMatrix<f64>>,
    /// `L[nb - 1, j]` for `j < nb - 1` (periodic case only).
    border: Vec<DMatrix<f64>>,
}

impl BlockCholesky {
    pub(crate) fn new(st: &SymStencil, sigma: f64) -> Option<Self> {
        let (nb, m) = (st.nb, st.m);
        if st.cyclic && nb < 3 {
            return None;
        }
        let cyclic = st.cyclic;
        let block = |b: usize| {
            let mut a = DMatrix::zeros(m, m);
            for j in 0..m {
                a[(j, j)] = st.diag[b * m + j] - sigma;
                if j + 1 < m {
                    let e = st.r_off[b * m + j];
                    a[(j, j + 1)] = e;
                    a[(j + 1, j)] = e;
                }
            }
            a
        };
        let coupling = |b: usize| DMatrix::from_diagonal(&DVector::from_column_slice(&st.s_off[b * m..(b + 1) * m]));
        let n_main = if cyclic { nb - 1 } else { nb };

        let mut diag: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        let mut sub: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        for b in 0..n_main {
            let mut s = block(b);
            if b > 0 {
                let mut t = coupling(b - 1);
                if !diag[b - 1].solve_lower_triangular_mut(&mut t) {
                    return None;
                }
                s -= t.tr_mul(&t);
                sub.push(t.transpose());
            } else {
                sub.push(DMatrix::zeros(0, 0));
            }
            diag.push(Cholesky::new(s)?.unpack());
        }

        let mut border = Vec::new();
        if cyclic {
            let last = nb - 1;
            let mut t = coupling(last);
            if !diag[0].solve_lower_triangular_mut(&mut t) {
                return None;
            }
            border.push(t.transpose());
            for j in 1..last {
                let mut r = -(&border[j - 1] * sub[j].transpose());
                if j == last - 1 {
                    r += coupling(last - 1);
                }
                let mut t = r.transpose();
                if !diag[j].solve_lower_triangular_mut(&mut t) {
                    return None;
                }
                border.push(t.transpose());
            }
            let mut s = block(last);
            for e in &border {
                s -= e * e.transpose();
            }
            diag.push(Cholesky::new(s)?.unpack());
        }
        Some(Self {
            nb,
            m,
            cyclic,
            diag,
            sub,
            border,
        })
    }

    /// Overwrites `x` (dimension times columns) with `(B - sigma I)^{-1} x`.
    pub fn solve_in_place(&self, x: &mut DMatrix<f64>) {
        let (nb, m, c) = (self.nb, self.m, x.ncols());
        let n_main = if self.cyclic { nb - 1 } else { nb };
        let rows = |x: &DMatrix<f64>, b: usize| x.view((b * m, 0), (m, c)).clone_owned();

        for b in 0..n_main {
            let mut blk = rows(x, b);
            if b > 0 {
                blk -= &self.sub[b] * rows(x, b - 1);
            }
            self.diag[b].solve_lower_triangular_mut(&mut blk);
            x.view_mut((b * m, 0), (m, c)).copy_from(&blk);
        }
        if self.cyclic {
            let last = nb - 1;
            let mut blk = rows(x, last);
            for (j, e) in self.border.iter().enumerate() {
                blk -= e * rows(x, j);
            }
            self.diag[last].solve_lower_triangular_mut(&mut blk);
            self.diag[last].tr_solve_lower_triangular_mut(&mut blk);
            x.view_mut((last * m, 0), (m, c)).copy_from(&blk);
        }
        let tail = if self.cyclic { Some(rows(x, nb - 1)) } else { None };
        for b in (0..n_main).rev() {
            let mut blk = rows(x, b);
            if b + 1 < n_main {
                blk -= self.sub[b + 1].tr_mul(&rows(x, b + 1));
            }
            if let Some(t) = &tail {
                blk -= self.border[b].tr_mul(t);
            }
            self.diag[b].tr_solve_lower_triangular_mut(&mut blk);
            x.view_mut((b * m, 0), (m, c)).copy_from(&blk);
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, c, |_, _| {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0
    })
}

/// Orthonormalises the columns of `y` against the first `p` columns of `q`
/// and against each other, replacing collapsed columns with random ones.
fn orthonormalize(q: &DMatrix<f64>, p: usize, y: &mut DMatrix<f64>, rng: &mut ChaCha8Rng) {
    let n = y.nrows();
    for col in 0..y.ncols() {
        let mut attempts = 0;
        loop {
            let mut v = y.column(col).clone_owned();
            let before = v.norm();
            for _ in 0..2 {
                if p > 0 {
                    let qp = q.view((0, 0), (n, p));
                    let coeff = qp.tr_mul(&v);
                    v -= qp * coeff;
                }
                for j in 0..col {
                    let d = y.column(j).dot(&v);
                    v.axpy(-d, &y.column(j), 1.0);
                }
            }
            let after = v.norm();
            if after > 1e-14 * before && after > 0.0 {
                y.set_column(col, &(v / after));
                break;
            }
            attempts += 1;
            let fresh = random_matrix(rng, n, 1);
            y.set_column(col, &fresh.column(0));
            if attempts > 5 {
                break;
            }
        }
    }
}

fn apply_columns(st: &SymStencil, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, x.ncols());
    let mut buf = alloc::vec![0.0; n];
    for c in 0..x.ncols() {
        st.apply(x.column(c).as_slice(), &mut buf);
        out.column_mut(c).copy_from_slice(&buf);
    }
    out
}

fn factor_at_or_below(st: &SymStencil, mut sigma: f64) -> (BlockCholesky, f64) {
    let mut step = 1e-3 * sigma.abs().max(1.0);
    loop {
        if let Some(f) = BlockCholesky::new(st, sigma) {
            return (f, sigma);
        }
        sigma -= step;
        step *= 2.0;
    }
}

/// Lowest `k` eigenpairs of the symmetric stencil; vectors are returned in
/// the symmetrised (unit Euclidean norm) representation.
pub(crate) fn block_krylov(
    st: &SymStencil,
    k: usize,
    tol: f64,
    seed: u64,
    hint: Option<f64>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = st.diag.len();
    let b = (k + k / 2 + 4).min(n / BASIS_BLOCKS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lower = st.gershgorin_lower();
    let start = hint.map(|h| h.max(lower)).unwrap_or(lower);
    let (mut fact, mut sigma) = factor_at_or_below(st, start);

    let mut x = random_matrix(&mut rng, n, b);
    let empty = DMatrix::zeros(n, 0);
    orthonormalize(&empty, 0, &mut x, &mut rng);

    for _iteration in 0..MAX_RESTARTS {
        let width = b * BASIS_BLOCKS;
        let mut q = DMatrix::zeros(n, width);
        q.view_mut((0, 0), (n, b)).copy_from(&x);
        for j in 1..BASIS_BLOCKS {
            let mut y = q.view((0, (j - 1) * b), (n, b)).clone_owned();
            fact.solve_in_place(&mut y);
            orthonormalize(&q, j * b, &mut y, &mut rng);
            q.view_mut((0, j * b), (n, b)).copy_from(&y);
        }
        let bq = apply_columns(st, &q);
        let mut t = q.tr_mul(&bq);
        t = (&t + t.transpose()) * 0.5;
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..width).collect();
        order.sort_by(|a, c| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*c]));
        let theta: Vec<f64> = order.iter().take(b).map(|i| eig.eigenvalues[*i]).collect();
        let z = DMatrix::from_fn(width, b, |r, c| eig.eigenvectors[(r, order[c])]);
        let x_new = &q * &z;
        let r = &bq * &z - &x_new * DMatrix::from_diagonal(&DVector::from_column_slice(&theta));
        let res: Vec<f64> = (0..b).map(|c| r.column(c).norm()).collect();

        let converged = (0..k).all(|i| res[i] <= tol * theta[i].abs().max(1.0));
        if converged {
            let vecs = (0..k).map(|c| x_new.column(c).iter().copied().collect()).collect();
            return Ok((theta[..k].to_vec(), vecs));
        }
        x = x_new;
        orthonormalize(&empty, 0, &mut x, &mut rng);

        let spread = (theta[k.min(b - 1)] - theta[0]).max(0.0);
        let target = theta[0] - (0.25 * spread).max(2.0 * res[0]).max(1e-8 * theta[0].abs().max(1.0));
        if target > sigma + 0.3 * (theta[0] - sigma) {
            if let Some(f) = BlockCholesky::new(st, target) {
                fact = f;
                sigma = target;
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_RESTARTS,
    })
}

