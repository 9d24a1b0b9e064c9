//! Small dense linear-algebra helpers over row-major design matrices.
//!
//! Designs are stored as flat row-major slices with `k` columns, which is how
//! [`CenteredPanel`](crate::panel::CenteredPanel) keeps its regressors.

use nalgebra::{DMatrix, DVector};

/// Relative threshold on the diagonal of R below which a design is singular.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub null_direction: Vec<f64>,
}

/// Solves `min Σ w_j (y_j - x_jᵀb)²` by QR of the row-scaled design.
pub(crate) fn weighted_lstsq(
    x: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    k: usize,
) -> Result<Vec<f64>, Singular> {
    let n = y.len();
    debug_assert_eq!(x.len(), n * k);
    let root_w = |j: usize| weights.map_or(1.0, |w| w[j].max(0.0).sqrt());
    let a = DMatrix::from_fn(n, k, |j, c| root_w(j) * x[j * k + c]);
    let b = DVector::from_fn(n, |j, _| root_w(j) * y[j]);
    if n < k {
        return Err(Singular {
            null_direction: null_direction(&a.transpose() * &a),
        });
    }

    let qr = a.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let min_diag = (0..k).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(max_diag > 0.0) || min_diag <= RANK_TOL * max_diag {
        return Err(Singular {
            null_direction: null_direction(&a.transpose() * &a),
        });
    }
    let qtb = qr.q().transpose() * b;
    let sol = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Singular {
            null_direction: null_direction(&a.transpose() * &a),
        })?;
    Ok(sol.iter().copied().collect())
}

/// Unit vector spanning the (numerically) smallest eigen-direction.
fn null_direction(gram: DMatrix<f64>) -> Vec<f64> {
    let k = gram.nrows();
    if k == 0 {
        return Vec::new();
    }
    let eig = gram.symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let v = eig.eigenvectors.column(idx);
    // Sign convention: largest-magnitude component positive.
    let pivot = v.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    v.iter().map(|c| sign * c).collect()
}

/// `Σ_j x_j x_jᵀ`, optionally weighted.
pub(crate) fn cross_product(x: &[f64], weights: Option<&[f64]>, k: usize) -> DMatrix<f64> {
    let n = x.len() / k;
    let mut m = DMatrix::zeros(k, k);
    for j in 0..n {
        let w = weights.map_or(1.0, |w| w[j]);
        let row = &x[j * k..(j + 1) * k];
        for a in 0..k {
            for b in 0..=a {
                m[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            m[(b, a)] = m[(a, b)];
        }
    }
    m
}

/// Inverse of a symmetric positive definite matrix, `None` when not SPD.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = m.clone().cholesky()?.inverse();
    Some(symmetrize(inv))
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Solves the square system exactly; `None` if numerically singular.
pub(crate) fn solve_square(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return None;
    }
    let lu = a.lu();
    let u = lu.u();
    let k = u.nrows();
    let min_piv = (0..k).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if min_piv <= 1e-12 * scale {
        return None;
    }
    lu.solve(&b)
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}
