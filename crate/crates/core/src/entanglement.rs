//! Schmidt analysis of the biphoton state restricted to a `d x d` OAM subspace.

use serde::Serialize;

use crate::amplitude::AmplitudeMatrix;
use crate::linalg::{svd, CMatrix};
use crate::{Error, Result};

/// Relative threshold below which a Schmidt weight does not count towards the rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

/// Checks that `d` is an odd subspace dimension of at least 3.
pub fn check_dimension(d: usize) -> Result<()> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::invalid("d", format!("subspace dimension must be odd and >= 3, got {d}")));
    }
    Ok(())
}

/// Rows and columns `l = -(d-1)/2 ..= (d-1)/2` of the amplitude matrix,
/// rescaled to unit Frobenius norm.
pub fn restrict(matrix: &AmplitudeMatrix, d: usize) -> Result<CMatrix> {
    check_dimension(d)?;
    let h = ((d - 1) / 2) as i32;
    let w = matrix.window();
    if !(w.contains(-h) && w.contains(h)) {
        return Err(Error::WindowTooSmall {
            d,
            min: w.min,
            max: w.max,
        });
    }
    let block = CMatrix::from_fn(d, d, |i, j| matrix.get(i as i32 - h, j as i32 - h));
    let norm = block.frobenius_norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroMatrix);
    }
    Ok(CMatrix::from_fn(d, d, |i, j| block[(i, j)] / norm))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schmidt {
    /// Normalized singular values (`Σ λ^2 = 1`), descending.
    pub lambdas: Vec<f64>,
    /// Schmidt number `1 / Σ λ^4`.
    #[serde(rename = "K")]
    pub k: f64,
    /// Number of `λ_k` above the rank tolerance times `λ_max`.
    #[serde(rename = "r")]
    pub rank: usize,
}

pub fn schmidt(m: &CMatrix, rank_tol: f64) -> Result<Schmidt> {
    let sigma = svd(m).sigma;
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroMatrix);
    }
    let lambdas: Vec<f64> = sigma.iter().map(|s| s / total.sqrt()).collect();
    let k = 1.0 / lambdas.iter().map(|l| l.powi(4)).sum::<f64>();
    let max = lambdas[0];
    let rank = lambdas.iter().filter(|&&l| l > rank_tol * max).count();
    Ok(Schmidt { lambdas, k, rank })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MesReport {
    pub lambdas: Vec<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub r: usize,
    pub is_mes: bool,
    /// `λ_k - 1/√d`.
    pub deviations: Vec<f64>,
}

/// Maximal entanglement: all `d` Schmidt coefficients equal `1/√d` within `tol`.
pub fn is_mes(m: &CMatrix, tol: f64) -> Result<MesReport> {
    let d = m.rows().min(m.cols());
    let s = schmidt(m, DEFAULT_RANK_TOL)?;
    let target = (d as f64).sqrt().recip();
    let deviations: Vec<f64> = s.lambdas.iter().map(|l| l - target).collect();
    let is_mes = deviations.iter().all(|e| e.abs() <= tol);
    Ok(MesReport {
        lambdas: s.lambdas,
        k: s.k,
        r: s.rank,
        is_mes,
        deviations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::{Normalization, OamWindow};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn matrix(d: usize, v: &[(f64, f64)]) -> CMatrix {
        CMatrix::from_fn(d, d, |i, j| {
            let (re, im) = v[i * d + j];
            Complex64::new(re, im)
        })
    }

    #[test]
    fn product_and_maximally_entangled_states() {
        let product = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i + 1) as f64 * (j as f64 - 0.5), 0.0));
        let s = schmidt(&product, DEFAULT_RANK_TOL).unwrap();
        assert!((s.k - 1.0).abs() < 1e-12);
        assert_eq!(s.rank, 1);

        let anti = CMatrix::from_fn(5, 5, |i, j| {
            if i + j == 4 {
                Complex64::from_polar(1.0, i as f64)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let r = is_mes(&anti, 1e-12).unwrap();
        assert!(r.is_mes);
        assert!((r.k - 5.0).abs() < 1e-12);
        assert_eq!(r.r, 5);

        let uneven = CMatrix::from_fn(3, 3, |i, j| Complex64::new(if i == j { [1.0, 1.0, 1.1][i] } else { 0.0 }, 0.0));
        assert!(!is_mes(&uneven, 1e-3).unwrap().is_mes);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        assert!(matches!(schmidt(&CMatrix::zeros(3, 3), 1e-6), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn restriction_checks_dimension_and_window() {
        let w = OamWindow::symmetric(2);
        let entries = (0..25).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let m = AmplitudeMatrix::from_entries(w, entries, Normalization::Raw).unwrap();
        let r = restrict(&m, 3).unwrap();
        assert!((r.frobenius_norm() - 1.0).abs() < 1e-14);
        let ratio = r[(2, 1)] / m.get(1, 0);
        assert!((r[(0, 1)] / m.get(-1, 0) - ratio).norm() < 1e-14);
        let five = restrict(&m, 5).unwrap();
        assert!((five[(0, 1)] / m.get(-2, -1) - five[(4, 4)] / m.get(2, 2)).norm() < 1e-14);
        assert!(restrict(&m, 4).is_err());
        assert!(restrict(&m, 1).is_err());
        assert!(matches!(restrict(&m, 7), Err(Error::WindowTooSmall { d: 7, .. })));
    }

    fn entries(d: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d)
    }

    proptest! {
        #[test]
        fn schmidt_number_is_bounded_and_invariant(
            v in entries(5),
            scale in 0.01..100.0f64,
            phase in -3.2..3.2f64,
            perm_seed in 0usize..120,
        ) {
            let d = 5;
            let a = matrix(d, &v);
            prop_assume!(a.frobenius_norm() > 1e-3);
            let s = schmidt(&a, DEFAULT_RANK_TOL).unwrap();
            prop_assert!(s.k >= 1.0 - 1e-12 && s.k <= d as f64 + 1e-12);
            prop_assert!((s.lambdas.iter().map(|l| l * l).sum::<f64>() - 1.0).abs() < 1e-10);

            let factor = Complex64::from_polar(scale, phase);
            let scaled = CMatrix::from_fn(d, d, |i, j| a[(i, j)] * factor);
            prop_assert!((schmidt(&scaled, DEFAULT_RANK_TOL).unwrap().k - s.k).abs() < 1e-9);

            let mut perm: Vec<usize> = (0..d).collect();
            let mut seed = perm_seed;
            for k in (1..d).rev() {
                perm.swap(k, seed % (k + 1));
                seed /= k + 1;
            }
            let permuted = CMatrix::from_fn(d, d, |i, j| a[(perm[i], perm[(j + 2) % d])]);
            prop_assert!((schmidt(&permuted, DEFAULT_RANK_TOL).unwrap().k - s.k).abs() < 1e-9);

            let t = schmidt(&a.transpose(), DEFAULT_RANK_TOL).unwrap();
            for (x, y) in t.lambdas.iter().zip(&s.lambdas) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
