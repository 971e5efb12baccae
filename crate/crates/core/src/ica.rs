//! Symmetric FastICA with the log-cosh contrast, plus the skewness helpers
//! used to orient the recovered axes.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embed_io::EmbeddingMatrix;
use crate::linalg::symmetric_decorrelation;
use crate::stats;
use crate::whiten::{whiteness_deviation, WhiteningModel};
use crate::{Error, Result};

/// Largest `‖cov(Z) − I‖_F` accepted as whitened input.
pub const WHITENESS_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
pub struct IcaParams {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for IcaParams {
    fn default() -> Self {
        IcaParams {
            max_iter: 10_000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcaResult {
    /// Independent components, one per column, every column positively skewed.
    pub sources: EmbeddingMatrix,
    /// `sources = input · unmixing`. For a whitened input this is orthogonal.
    pub unmixing: Array2<f64>,
    pub skewness: Array1<f64>,
    /// Sign applied to each raw component during orientation.
    pub flips: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl IcaResult {
    /// Transformation from the centered, unwhitened data: `S = X · B`.
    pub fn compose_with(&self, whitening: &WhiteningModel) -> Array2<f64> {
        whitening.whitening_matrix().dot(&self.unmixing)
    }
}

/// Run parallel FastICA on whitened data.
///
/// Convergence is declared when `max_i | |w_i · w_i⁺| − 1 |` drops below
/// `tol`. Pure Gaussian input has no preferred rotation; the result is then
/// arbitrary and `converged` may be false.
pub fn fastica(z: &EmbeddingMatrix, params: &IcaParams) -> Result<IcaResult> {
    if params.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(params.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let deviation = whiteness_deviation(z.data());
    if !(deviation <= WHITENESS_TOLERANCE) {
        return Err(Error::NotWhitened { deviation });
    }

    let x = z.data();
    let (n, d) = x.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init = Array2::from_shape_simple_fn((d, d), || rng.sample::<f64, _>(StandardNormal));
    let mut w = symmetric_decorrelation(&init)?;

    let mut converged = false;
    let mut iterations_used = 0;
    for _ in 0..params.max_iter {
        iterations_used += 1;
        let projected = x.dot(&w.t());
        let g = projected.mapv(f64::tanh);
        let g_prime_mean = g.mapv(|t| 1.0 - t * t).mean_axis(Axis(0)).expect("n > 0");
        let w_next = g.t().dot(x) / n as f64 - &(&w * &g_prime_mean.insert_axis(Axis(1)));
        let w_next = symmetric_decorrelation(&w_next)?;

        let lim = w_next
            .outer_iter()
            .zip(w.outer_iter())
            .map(|(a, b)| (a.dot(&b).abs() - 1.0).abs())
            .fold(0.0f64, f64::max);
        w = w_next;
        if lim < params.tol {
            converged = true;
            break;
        }
    }

    let raw = z.with_data(x.dot(&w.t()))?;
    let (sources, flips) = orient_positive_skew(&raw);
    let unmixing = &w.t() * &Array1::from(flips.clone()).insert_axis(Axis(0));
    let skewness = lenient_skewness(sources.data());
    Ok(IcaResult {
        sources: sources.with_flags(true, false),
        unmixing,
        skewness,
        flips,
        iterations_used,
        converged,
    })
}

/// Biased sample skewness of every column.
pub fn column_skewness(m: &Array2<f64>) -> Result<Array1<f64>> {
    if m.nrows() < 3 {
        return Err(Error::InvalidArgument(format!(
            "skewness needs at least 3 samples, got {}",
            m.nrows()
        )));
    }
    m.columns()
        .into_iter()
        .enumerate()
        .map(|(j, c)| stats::skewness(c).ok_or(Error::DegenerateColumn { column: j }))
        .collect()
}

/// Skewness with degenerate columns reported as 0.
pub fn lenient_skewness(m: &Array2<f64>) -> Array1<f64> {
    if m.nrows() < 3 {
        return Array1::zeros(m.ncols());
    }
    m.columns()
        .into_iter()
        .map(|c| stats::skewness(c).unwrap_or(0.0))
        .collect()
}

/// Negate every column whose skewness is negative. Zero skewness is left
/// alone (sign +1).
pub fn orient_positive_skew(s: &EmbeddingMatrix) -> (EmbeddingMatrix, Vec<f64>) {
    let gamma = lenient_skewness(s.data());
    let flips: Vec<f64> = gamma.iter().map(|&g| if g < 0.0 { -1.0 } else { 1.0 }).collect();
    let data = s.data() * &Array1::from(flips.clone()).insert_axis(Axis(0));
    let out = s
        .with_data(data)
        .expect("negation keeps entries finite")
        .with_flags(s.is_centered(), s.is_normalized());
    (out, flips)
}
