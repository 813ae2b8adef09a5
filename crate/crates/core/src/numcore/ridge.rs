//! Regularized least squares through the normal equations.

use super::linalg::RealMatrix;
use crate::error::{Error, Result};

/// Relative pivot threshold below which a λ = 0 system counts as rank deficient.
const PIVOT_TOL: f64 = 1e-12;
/// Diagonal jitter added once when a regularized factorization breaks down.
const JITTER: f64 = 1e-10;

/// Solves `argmin_w ‖columns·w − target‖² + lambda·‖w‖²`.
///
/// `columns` is (dim × k); each column is one dictionary vector.
pub fn ridge_solve(columns: &RealMatrix, target: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if target.len() != columns.rows() {
        return Err(Error::dim("ridge_solve target", columns.rows(), target.len()));
    }
    let gram = columns.gram();
    let rhs = columns.tr_mul_vec(target)?;
    ridge_solve_gram(&gram, &rhs, lambda)
}

/// Solves `(gram + lambda·I) w = rhs` for a symmetric positive semidefinite `gram`.
pub fn ridge_solve_gram(gram: &RealMatrix, rhs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let k = gram.rows();
    if gram.cols() != k {
        return Err(Error::dim("ridge_solve gram", k, gram.cols()));
    }
    if rhs.len() != k {
        return Err(Error::dim("ridge_solve rhs", k, rhs.len()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge lambda must be >= 0, got {lambda}"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut system = gram.clone();
    for i in 0..k {
        system.set(i, i, gram.get(i, i) + lambda);
    }
    let scale = (0..k)
        .map(|i| system.get(i, i))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    match cholesky(&system, scale) {
        Ok(l) => Ok(cholesky_solve(&l, rhs)),
        Err(e) if lambda == 0.0 => Err(e),
        Err(_) => {
            for i in 0..k {
                system.set(i, i, system.get(i, i) + JITTER * scale);
            }
            let l = cholesky(&system, scale)?;
            Ok(cholesky_solve(&l, rhs))
        }
    }
}

fn cholesky(a: &RealMatrix, scale: f64) -> Result<RealMatrix> {
    let n = a.rows();
    let mut l = RealMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for p in 0..j {
            d -= l.get(j, p) * l.get(j, p);
        }
        if !(d > PIVOT_TOL * scale) {
            return Err(Error::Singular { column: j, pivot: d });
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for p in 0..j {
                s -= l.get(i, p) * l.get(j, p);
            }
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &RealMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= l.get(i, p) * y[p];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for p in i + 1..n {
            s -= l.get(p, i) * x[p];
        }
        x[i] = s / l.get(i, i);
    }
    x
}
