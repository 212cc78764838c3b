//! Dense complex matrices, a one-sided Jacobi SVD and minimum-norm least squares.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(
                "matrix",
                format!("{} values do not fill a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix dimensions do not agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "vector length does not match columns");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin SVD `A = U diag(σ) V^H` with `k = min(m, n)` singular values in
/// descending order; `U` is `m x k`, `V` is `n x k`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let k = self.sigma.len();
        let us = CMatrix::from_fn(self.u.rows(), k, |i, j| self.u[(i, j)] * self.sigma[j]);
        us.matmul(&self.v.conj_transpose())
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let max = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > rel_tol * max && s > 0.0).count()
    }
}

pub fn svd(a: &CMatrix) -> Svd {
    if a.rows() >= a.cols() {
        jacobi_svd(a)
    } else {
        let t = jacobi_svd(&a.conj_transpose());
        Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    }
}

/// One-sided (Hestenes) Jacobi on the columns of `a`, requires `m >= n`.
fn jacobi_svd(a: &CMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
        .collect();

    for _sweep in 0..100 {
        let mut rotated = false;
        for j in 0..n {
            for k in (j + 1)..n {
                let alpha: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[k].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cols[j].iter().zip(&cols[k]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, j, k, c, s, phase);
                rotate(&mut v, j, k, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut u = CMatrix::zeros(m, n);
    let mut vm = CMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &(s, src)) in order.iter().enumerate() {
        sigma.push(s);
        for i in 0..m {
            u[(i, dst)] = if s > 0.0 { cols[src][i] / s } else { Complex64::new(0.0, 0.0) };
        }
        for i in 0..n {
            vm[(i, dst)] = v[src][i];
        }
    }
    Svd { u, sigma, v: vm }
}

/// Plane rotation making columns `j` and `k` orthogonal; `phase` is the unit
/// phase of `x_j^H x_k`.
fn rotate(cols: &mut [Vec<Complex64>], j: usize, k: usize, c: f64, s: f64, phase: Complex64) {
    let (left, right) = cols.split_at_mut(k);
    let xj = &mut left[j];
    let xk = &mut right[0];
    let pc = phase.conj();
    for (a, b) in xj.iter_mut().zip(xk.iter_mut()) {
        let (aj, bk) = (*a, *b);
        *a = aj * c - bk * pc * s;
        *b = aj * phase * s + bk * c;
    }
}

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: Vec<Complex64>,
    pub rank: usize,
    /// `||A x - b||`.
    pub residual: f64,
    pub singular_values: Vec<f64>,
}

/// Minimum-norm solution of `min ||A x - b||`, discarding singular values below
/// `rcond * σ_max`.
pub fn lstsq(a: &CMatrix, b: &[Complex64], rcond: f64) -> Result<LstsqSolution> {
    if b.len() != a.rows() {
        return Err(Error::invalid(
            "rhs",
            format!("right-hand side has {} entries, matrix has {} rows", b.len(), a.rows()),
        ));
    }
    let d = svd(a);
    let rank = d.rank(rcond);
    let mut x = vec![Complex64::new(0.0, 0.0); a.cols()];
    for r in 0..rank {
        let coef: Complex64 = (0..a.rows()).map(|i| d.u[(i, r)].conj() * b[i]).sum::<Complex64>() / d.sigma[r];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += d.v[(j, r)] * coef;
        }
    }
    let ax = a.mul_vec(&x);
    let residual = ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    Ok(LstsqSolution {
        x,
        rank,
        residual,
        singular_values: d.sigma,
    })
}
