//! Dense linear algebra helpers on top of `ndarray`, with `nalgebra` doing
//! the symmetric eigendecompositions.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

fn to_nalgebra(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
/// Eigenvectors are the columns of the returned matrix.
pub fn symmetric_eigen(a: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("eigendecomposition needs a square matrix".into()));
    }
    // symmetrize away rounding asymmetry
    let sym = (&a + &a.t()) * 0.5;
    let eig = SymmetricEigen::try_new(to_nalgebra(sym.view()), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))?;
    let d = a.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Array2::from_shape_fn((d, d), |(r, c)| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `(W Wᵀ)^(-1/2) W`: the closest matrix to `w` with orthonormal rows.
pub fn symmetric_decorrelation(w: &Array2<f64>) -> Result<Array2<f64>> {
    let (values, vectors) = symmetric_eigen(w.dot(&w.t()).view())?;
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Numeric("singular matrix in symmetric decorrelation".into()));
    }
    let scaled = &vectors * &values.mapv(|v| 1.0 / v.sqrt()).insert_axis(Axis(0));
    Ok(scaled.dot(&vectors.t()).dot(w))
}

/// Covariance `XᵀX / n` of a column-centered matrix.
pub fn centered_covariance(x: ArrayView2<'_, f64>) -> Array2<f64> {
    x.t().dot(&x) / x.nrows() as f64
}

/// Covariance with the column means removed first, normalized by `n`.
pub fn covariance(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mean = x.mean_axis(Axis(0)).expect("non-empty matrix");
    let centered = &x - &mean.insert_axis(Axis(0));
    centered_covariance(centered.view())
}

pub fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖A − I‖_F`.
pub fn distance_from_identity(a: ArrayView2<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for ((i, j), v) in a.indexed_iter() {
        let t = if i == j { v - 1.0 } else { *v };
        acc += t * t;
    }
    acc.sqrt()
}

/// Random orthogonal matrix: standard normal entries, then orthonormalized.
pub fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> Result<Array2<f64>> {
    let g = Array2::from_shape_simple_fn((d, d), || rng.sample::<f64, _>(StandardNormal));
    symmetric_decorrelation(&g)
}

/// Inverse of a symmetric positive definite matrix via its eigenpairs.
pub fn spd_inverse(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (values, vectors) = symmetric_eigen(a)?;
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Numeric("matrix is not positive definite".into()));
    }
    let scaled = &vectors * &values.mapv(|v| 1.0 / v).insert_axis(Axis(0));
    Ok(scaled.dot(&vectors.t()))
}
