//! Small dense linear-algebra helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};

pub type Point = DVector<f64>;
pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Bilinear form `a^T m b`.
pub fn bilinear(m: &Matrix, a: &Vector, b: &Vector) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[(i, j)] * b[j];
        }
        acc += a[i] * row;
    }
    acc
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Positive-definite reference metric obtained from `g` by flipping the
/// sign of its negative eigenvalues.
pub fn euclideanized(g: &Matrix) -> Matrix {
    let eig = symmetrize(g).symmetric_eigen();
    let abs = eig.eigenvalues.map(f64::abs);
    &eig.eigenvectors * Matrix::from_diagonal(&abs) * eig.eigenvectors.transpose()
}

/// Eigenvalues of the symmetric form `b` relative to the positive-definite
/// reference `reference`, sorted ascending.
pub fn relative_eigenvalues(b: &Matrix, reference: &Matrix) -> Vec<f64> {
    let eig = symmetrize(reference).symmetric_eigen();
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt());
    let w = &eig.eigenvectors * Matrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let c = symmetrize(&(&w * b * &w));
    let mut vals: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Count of (negative, zero, positive) eigenvalues with a zero band of `tol`.
pub fn signature(vals: &[f64], tol: f64) -> (usize, usize, usize) {
    let neg = vals.iter().filter(|&&v| v < -tol).count();
    let pos = vals.iter().filter(|&&v| v > tol).count();
    (neg, vals.len() - neg - pos, pos)
}

/// Ratio of extreme singular values; infinite for a singular matrix.
pub fn condition_number(m: &Matrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclideanized_minkowski_is_identity() {
        let g = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, -1.0]));
        let e = euclideanized(&g);
        assert!((e - Matrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn relative_eigenvalues_respect_reference_scaling() {
        let b = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, -8.0]));
        let r = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 4.0]));
        let vals = relative_eigenvalues(&b, &r);
        assert!((vals[0] + 2.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert_eq!(signature(&vals, 1e-12), (1, 0, 1));
    }
}
