//! Eigen-decomposition of a general real matrix whose spectrum is real.
//!
//! Real Schur form `A = Q·T·Qᵀ` followed by back-substitution on the upper
//! triangular factor, one eigenvector per diagonal entry.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Imaginary parts below this (relative to ‖A‖) are discarded.
const IMAG_TOL: f64 = 1e-10;

pub(crate) struct RealEigen {
    /// In Schur-diagonal order.
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn real_eigen(a: DMatrix<f64>) -> Result<RealEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", n, a.ncols())));
    }
    let anorm = a.amax().max(f64::MIN_POSITIVE);
    let schur = nalgebra::Schur::try_new(a, f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::Convergence {
            iterations: 100 * n.max(10),
            residual: f64::NAN,
        })?;
    let (mut q, mut t) = schur.unpack();

    // Reject genuine complex pairs; flatten numerically-real 2x2 blocks.
    let mut i = 0;
    while i + 1 < n {
        let sub = t[(i + 1, i)];
        if sub.abs() > IMAG_TOL * anorm * 1e-3 {
            let (p, r, s, u) = (t[(i, i)], t[(i, i + 1)], sub, t[(i + 1, i + 1)]);
            let half_tr = 0.5 * (p + u);
            let disc = (0.5 * (p - u)).powi(2) + r * s;
            if disc < 0.0 && disc.abs().sqrt() > IMAG_TOL * anorm {
                return Err(Error::Unstable(format!(
                    "complex eigenvalue pair {half_tr:e} ± {:e}i",
                    disc.abs().sqrt()
                )));
            }
            if disc >= 0.0 {
                // real pair left coupled: rotate it to triangular form
                let root = disc.sqrt();
                let lam = if half_tr >= 0.0 { half_tr + root } else { half_tr - root };
                let (mut c, mut sn) = (r, lam - p);
                if c.abs() + sn.abs() == 0.0 {
                    c = lam - u;
                    sn = s;
                }
                let h = c.hypot(sn);
                let (c, sn) = (c / h, sn / h);
                rotate(&mut t, i, c, sn);
                rotate_cols(&mut q, i, c, sn);
            } else {
                t[(i + 1, i)] = 0.0;
            }
        }
        i += 1;
    }
    finish(q, t, anorm)
}

fn rotate(t: &mut DMatrix<f64>, i: usize, c: f64, s: f64) {
    let n = t.nrows();
    for k in 0..n {
        let (a, b) = (t[(i, k)], t[(i + 1, k)]);
        t[(i, k)] = c * a + s * b;
        t[(i + 1, k)] = -s * a + c * b;
    }
    rotate_cols(t, i, c, s);
    t[(i + 1, i)] = 0.0;
}

fn rotate_cols(m: &mut DMatrix<f64>, i: usize, c: f64, s: f64) {
    for k in 0..m.nrows() {
        let (a, b) = (m[(k, i)], m[(k, i + 1)]);
        m[(k, i)] = c * a + s * b;
        m[(k, i + 1)] = -s * a + c * b;
    }
}

fn finish(q: DMatrix<f64>, t: DMatrix<f64>, anorm: f64) -> Result<RealEigen> {
    let n = t.nrows();
    let values: Vec<f64> = (0..n).map(|k| t[(k, k)]).collect();
    let small = f64::EPSILON * anorm;
    let mut y = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let lam = values[k];
        y[(k, k)] = 1.0;
        for r in (0..k).rev() {
            let mut acc = 0.0;
            for l in r + 1..=k {
                acc += t[(r, l)] * y[(l, k)];
            }
            let mut piv = t[(r, r)] - lam;
            if piv.abs() < small {
                piv = small;
            }
            y[(r, k)] = -acc / piv;
        }
    }
    let mut vectors = q * y;
    for k in 0..n {
        let nrm = vectors.column(k).norm();
        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(Error::Normalization(format!("eigenvector {k} has norm {nrm:e}")));
        }
        vectors.column_mut(k).scale_mut(1.0 / nrm);
    }
    Ok(RealEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_eigenpairs_of_nonsymmetric_matrix() {
        // similarity transform of a known diagonal
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, -1.0, 0.5, 2.0, 4.0]));
        let s = DMatrix::from_fn(5, 5, |r, c| if r == c { 2.0 } else { 0.3 * (r as f64 - c as f64 + 0.7).sin() });
        let a = &s * d * s.clone().try_inverse().unwrap();
        let eig = real_eigen(a.clone()).unwrap();
        let mut vals = eig.values.clone();
        vals.sort_by(f64::total_cmp);
        for (v, x) in vals.iter().zip([-3.0, -1.0, 0.5, 2.0, 4.0]) {
            assert!((v - x).abs() < 1e-10);
        }
        for k in 0..5 {
            let v = eig.vectors.column(k);
            let r = &a * v - v * eig.values[k];
            assert!(r.norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(real_eigen(a), Err(Error::Unstable(_))));
    }
}
