//! Small linear-algebra kernels: tridiagonal elimination, block-tridiagonal LU
//! with dense blocks, and restarted GMRES.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solve a tridiagonal system with real coefficients for several right-hand
/// sides stored as separate slices. `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i + 1] * rhs[i + 1];
    }
    Ok(())
}

/// Block-tridiagonal matrix with `nb` square dense blocks of size `m`.
/// `lower[k]` couples block row `k` to block `k - 1`, `upper[k]` to `k + 1`.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    pub m: usize,
    pub lower: Vec<DMatrix<f64>>,
    pub diag: Vec<DMatrix<f64>>,
    pub upper: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn zeros(nb: usize, m: usize) -> Self {
        Self {
            m,
            lower: (0..nb).map(|_| DMatrix::zeros(m, m)).collect(),
            diag: (0..nb).map(|_| DMatrix::zeros(m, m)).collect(),
            upper: (0..nb).map(|_| DMatrix::zeros(m, m)).collect(),
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let nb = self.n_blocks();
        let mut y = vec![0.0; nb * m];
        for k in 0..nb {
            let mut acc = &self.diag[k] * DVector::from_column_slice(&x[k * m..(k + 1) * m]);
            if k > 0 {
                acc += &self.lower[k] * DVector::from_column_slice(&x[(k - 1) * m..k * m]);
            }
            if k + 1 < nb {
                acc += &self.upper[k] * DVector::from_column_slice(&x[(k + 1) * m..(k + 2) * m]);
            }
            y[k * m..(k + 1) * m].copy_from_slice(acc.as_slice());
        }
        y
    }

    /// Block LU factorization (Thomas recursion on blocks, partial pivoting inside blocks).
    pub fn factor(&self) -> Result<BlockLu> {
        let nb = self.n_blocks();
        let mut schur_lu = Vec::with_capacity(nb);
        let mut coupling = Vec::with_capacity(nb);
        let mut s = self.diag[0].clone();
        for k in 0..nb {
            let lu = s.clone().lu();
            if !lu.is_invertible() {
                return Err(Error::Numerical(format!("singular diagonal block {k}")));
            }
            if k + 1 < nb {
                let mut x = self.upper[k].clone();
                if !lu.solve_mut(&mut x) {
                    return Err(Error::Numerical(format!("singular diagonal block {k}")));
                }
                s = &self.diag[k + 1] - &self.lower[k + 1] * &x;
                coupling.push(x);
            }
            schur_lu.push(lu);
        }
        Ok(BlockLu { m: self.m, schur_lu, coupling, lower: self.lower.clone() })
    }
}

/// Factorization produced by [`BlockTridiagonal::factor`].
pub struct BlockLu {
    m: usize,
    schur_lu: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    coupling: Vec<DMatrix<f64>>,
    lower: Vec<DMatrix<f64>>,
}

impl BlockLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let nb = self.schur_lu.len();
        let mut y: Vec<DVector<f64>> = Vec::with_capacity(nb);
        for k in 0..nb {
            let mut rhs = DVector::from_column_slice(&b[k * m..(k + 1) * m]);
            if k > 0 {
                rhs -= &self.lower[k] * &y[k - 1];
            }
            self.schur_lu[k].solve_mut(&mut rhs);
            y.push(rhs);
        }
        for k in (0..nb - 1).rev() {
            let corr = &self.coupling[k] * &y[k + 1];
            y[k] -= corr;
        }
        let mut out = Vec::with_capacity(nb * m);
        for v in y {
            out.extend_from_slice(v.as_slice());
        }
        out
    }
}

/// Outcome of a GMRES solve.
#[derive(Debug, Clone)]
pub struct GmresInfo {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES for `A x = b`, starting from `x`.
/// Converges when `|b - A x| <= rtol * |b|`.
pub fn gmres(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresInfo {
    let n = b.len();
    let bnorm = norm(b).max(1e-300);
    let mut total = 0usize;
    loop {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta <= rtol * bnorm || total >= max_iter {
            return GmresInfo { iterations: total, residual: beta / bnorm, converged: beta <= rtol * bnorm };
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|q| q / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            total += 1;
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hij: f64 = w.iter().zip(vi).map(|(a, b)| a * b).sum();
                h[i][k] = hij;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= hij * b);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = if d == 0.0 { 1.0 } else { h[k][k] / d };
            sn[k] = if d == 0.0 { 0.0 } else { h[k + 1][k] / d };
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= rtol * bnorm || wn == 0.0 || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|a| a / wn).collect());
        }
        // back substitution
        let mut yk = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * yk[j];
            }
            yk[i] = s / h[i][i];
        }
        for (j, zj) in z.iter().enumerate().take(k_used) {
            for p in 0..n {
                x[p] += yk[j] * zj[p];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense() {
        let lower = [0.0, 1.0, -0.5, 2.0];
        let diag = [4.0, 5.0, 6.0, 7.0];
        let upper = [1.0, 0.3, 1.1, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let mut b = [0.0; 4];
        for i in 0..4 {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += lower[i] * x[i - 1];
            }
            if i < 3 {
                b[i] += upper[i] * x[i + 1];
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }

    fn sample_blocks() -> BlockTridiagonal {
        let mut a = BlockTridiagonal::zeros(4, 3);
        for k in 0..4 {
            for i in 0..3 {
                for j in 0..3 {
                    a.diag[k][(i, j)] = if i == j { 6.0 + k as f64 } else { (i + 2 * j + k) as f64 * 0.3 - 0.5 };
                    a.lower[k][(i, j)] = if k > 0 { 0.2 * (i as f64 - j as f64) + 0.1 } else { 0.0 };
                    a.upper[k][(i, j)] = if k < 3 { -0.3 + 0.1 * (i * j) as f64 } else { 0.0 };
                }
            }
        }
        a
    }

    #[test]
    fn block_lu_solves() {
        let a = sample_blocks();
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = a.matvec(&x);
        let lu = a.factor().unwrap();
        let y = lu.solve(&b);
        for i in 0..12 {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gmres_converges_without_preconditioner() {
        let a = sample_blocks();
        let x: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let b = a.matvec(&x);
        let mut y = vec![0.0; 12];
        let info = gmres(&|v| a.matvec(v), &|v| v.to_vec(), &b, &mut y, 1e-12, 5, 200);
        assert!(info.converged, "{info:?}");
        for i in 0..12 {
            assert!((x[i] - y[i]).abs() < 1e-9);
        }
    }
}
