//! PCA whitening. The whitened PCA axes double as the PCA baseline.

use ndarray::{Array1, Array2, Axis};

use crate::embed_io::EmbeddingMatrix;
use crate::linalg;
use crate::{Error, Result};

/// Default relative eigenvalue floor: `1e-10 ×` the largest eigenvalue.
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct WhiteningModel {
    pub mean: Array1<f64>,
    /// Orthonormal eigenvectors as columns, in descending eigenvalue order.
    pub components: Array2<f64>,
    pub eigenvalues: Array1<f64>,
}

impl WhiteningModel {
    /// `components · diag(λ)^(-1/2)`, so that `Z = (X − mean) · W`.
    pub fn whitening_matrix(&self) -> Array2<f64> {
        &self.components * &self.eigenvalues.mapv(|v| 1.0 / v.sqrt()).insert_axis(Axis(0))
    }

    /// `diag(λ)^(1/2) · componentsᵀ`, the inverse of [`Self::whitening_matrix`].
    pub fn dewhitening_matrix(&self) -> Array2<f64> {
        (&self.components * &self.eigenvalues.mapv(f64::sqrt).insert_axis(Axis(0))).reversed_axes()
    }

    pub fn transform(&self, x: &Array2<f64>) -> Array2<f64> {
        (x - &self.mean.view().insert_axis(Axis(0))).dot(&self.whitening_matrix())
    }

    pub fn inverse_transform(&self, z: &Array2<f64>) -> Array2<f64> {
        z.dot(&self.dewhitening_matrix()) + &self.mean.view().insert_axis(Axis(0))
    }
}

/// Whiten a centered matrix so that `ZᵀZ / n = I`.
///
/// `eigen_floor` is relative to the largest eigenvalue; any eigenvalue below
/// it makes the input [`Error::RankDeficient`].
pub fn pca_whiten(x: &EmbeddingMatrix, eigen_floor: f64) -> Result<(EmbeddingMatrix, WhiteningModel)> {
    let (n, d) = (x.nrows(), x.ncols());
    if n <= d {
        return Err(Error::NotEnoughSamples { n, d });
    }
    let mean = x.data().mean_axis(Axis(0)).expect("n > 0");
    let centered = x.data() - &mean.view().insert_axis(Axis(0));
    let cov = linalg::centered_covariance(centered.view());
    let (eigenvalues, mut components) = linalg::symmetric_eigen(cov.view())?;

    let floor = eigen_floor * eigenvalues[0].max(0.0);
    if let Some(&smallest) = eigenvalues.iter().last() {
        if !(smallest >= floor) || !(eigenvalues[0] > 0.0) {
            return Err(Error::RankDeficient { value: smallest, floor });
        }
    }

    for mut col in components.columns_mut() {
        let mut pivot = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }

    let model = WhiteningModel {
        mean,
        components,
        eigenvalues,
    };
    let z = centered.dot(&model.whitening_matrix());
    let z = x.with_data(z)?.with_flags(true, false);
    Ok((z, model))
}

/// `‖cov(Z) − I‖_F` with covariance normalized by `n`.
pub fn whiteness_deviation(z: &Array2<f64>) -> f64 {
    linalg::distance_from_identity(linalg::covariance(z.view()).view())
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::*;
    use crate::embed_io::center_columns;
    use crate::linalg::{distance_from_identity, frobenius};

    fn correlated_gaussian(n: usize, rho: f64, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Array2::zeros((n, 2));
        for mut row in data.outer_iter_mut() {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            row[0] = 3.0 * a;
            row[1] = 0.5 * (rho * a + (1.0 - rho * rho).sqrt() * b);
        }
        center_columns(&EmbeddingMatrix::from_array(data).unwrap())
    }

    #[test]
    fn correlated_sample_becomes_white() {
        let x = correlated_gaussian(10_000, 0.8, 1);
        let (z, model) = pca_whiten(&x, DEFAULT_EIGEN_FLOOR).unwrap();
        // covariance recomputed straight from the output
        let n = z.nrows() as f64;
        let col = |j: usize| z.data().column(j).to_owned();
        let (a, b) = (col(0), col(1));
        let c00 = a.dot(&a) / n;
        let c11 = b.dot(&b) / n;
        let c01 = a.dot(&b) / n;
        assert!((c00 - 1.0).abs() < 1e-2 && (c11 - 1.0).abs() < 1e-2 && c01.abs() < 1e-2);
        assert!(whiteness_deviation(z.data()) < 1e-6);
        assert!(model.eigenvalues[0] >= model.eigenvalues[1]);
        assert!(distance_from_identity(model.components.t().dot(&model.components).view()) < 1e-9);
    }

    #[test]
    fn white_input_gets_an_orthogonal_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Array2::from_shape_simple_fn((5000, 3), || rng.sample::<f64, _>(StandardNormal));
        let g = center_columns(&EmbeddingMatrix::from_array(g).unwrap());
        // exact whitening first, then whiten again
        let (w, _) = pca_whiten(&g, DEFAULT_EIGEN_FLOOR).unwrap();
        let (z, model) = pca_whiten(&w, DEFAULT_EIGEN_FLOOR).unwrap();
        assert!(model.eigenvalues.iter().all(|&v| (v - 1.0).abs() < 1e-9));
        let m = model.whitening_matrix();
        assert!(distance_from_identity(m.t().dot(&m).view()) < 1e-8);
        assert!(whiteness_deviation(z.data()) < 1e-9);
    }

    #[test]
    fn rank_one_input_is_rejected() {
        let data = Array2::from_shape_fn((50, 3), |(i, j)| (i as f64 - 24.5) * [1.0, 2.0, -1.0][j]);
        let x = center_columns(&EmbeddingMatrix::from_array(data).unwrap());
        assert!(matches!(pca_whiten(&x, DEFAULT_EIGEN_FLOOR), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn too_few_rows() {
        let x = EmbeddingMatrix::from_array(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(pca_whiten(&x, DEFAULT_EIGEN_FLOOR), Err(Error::NotEnoughSamples { .. })));
    }

    #[test]
    fn reconstruction_and_variance_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mix = Array2::from_shape_simple_fn((4, 4), || rng.random_range(-1.0..1.0));
        let raw = Array2::from_shape_simple_fn((2000, 4), || rng.random_range(-1.0..1.0)).dot(&mix);
        let x = center_columns(&EmbeddingMatrix::from_array(raw).unwrap());
        let (z, model) = pca_whiten(&x, DEFAULT_EIGEN_FLOOR).unwrap();

        let back = model.inverse_transform(z.data());
        let rel = frobenius((&back - x.data()).view()) / frobenius(x.data().view());
        assert!(rel < 1e-8, "relative reconstruction error {rel}");

        let total_var: f64 = x.data().columns().into_iter().map(|c| c.dot(&c) / 2000.0).sum();
        let eig_sum = model.eigenvalues.sum();
        assert!(((eig_sum - total_var) / total_var).abs() < 1e-9);

        for col in model.components.columns() {
            let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(pivot > 0.0);
        }
    }
}
