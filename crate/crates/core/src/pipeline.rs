//! The end-to-end flow shared by the command line tool and the demo:
//! whiten, decompose, order the axes by one of the methods, then reduce.

use std::fmt;
use std::str::FromStr;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::dimred::{
    apply_projection, apply_random_order, prefix_axes, random_order, skewness_sort_order, ProjectionMatrix, ProjectionMode,
};
use crate::embed_io::{center_columns, EmbeddingMatrix};
use crate::ica::{fastica, lenient_skewness, orient_positive_skew, IcaParams, IcaResult};
use crate::tica::{tica_fit, TicaModel, TicaParams};
use crate::tour::{anchor_tour, apply_tour, axis_embeddings, permute_columns, solve_axis_tour, TourOrder};
use crate::whiten::{pca_whiten, WhiteningModel, DEFAULT_EIGEN_FLOOR};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 100;

/// Stage offsets mixed into the run seed.
pub mod stage {
    pub const ICA: u64 = 1;
    pub const TOUR: u64 = 2;
    pub const RANDOM_ORDER: u64 = 3;
    pub const TICA: u64 = 4;
    pub const EVAL: u64 = 5;
    pub const BASELINE: u64 = 6;
}

/// SplitMix64 finalizer over `seed + stage · golden gamma`.
pub fn stage_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed.wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    AxisTour,
    SkewSort,
    RandOrder,
    Pca,
    Tica9,
    Tica75,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::AxisTour,
        Method::SkewSort,
        Method::RandOrder,
        Method::Pca,
        Method::Tica9,
        Method::Tica75,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::AxisTour => "axistour",
            Method::SkewSort => "skewsort",
            Method::RandOrder => "randorder",
            Method::Pca => "pca",
            Method::Tica9 => "tica9",
            Method::Tica75 => "tica75",
        }
    }

    pub fn needs_ica(self) -> bool {
        matches!(self, Method::AxisTour | Method::SkewSort | Method::RandOrder)
    }

    pub fn tica_width(self) -> Option<usize> {
        match self {
            Method::Tica9 => Some(9),
            Method::Tica75 => Some(75),
            _ => None,
        }
    }

    /// How the method merges axes when `p < d`.
    pub fn default_reduction(self) -> Reduction {
        match self {
            Method::Pca => Reduction::Prefix,
            _ => Reduction::Projection,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Keep the first `p` axes.
    Prefix,
    /// Merge consecutive axes with skewness weights.
    Projection,
}

impl FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prefix" => Ok(Reduction::Prefix),
            "projection" => Ok(Reduction::Projection),
            other => Err(Error::InvalidArgument(format!("unknown reduction {other:?}"))),
        }
    }
}

/// Centered and whitened input.
pub fn whiten(x: &EmbeddingMatrix) -> Result<(EmbeddingMatrix, WhiteningModel)> {
    pca_whiten(&center_columns(x), DEFAULT_EIGEN_FLOOR)
}

pub fn ica(z: &EmbeddingMatrix, seed: u64, max_iter: usize) -> Result<IcaResult> {
    fastica(z, &IcaParams { max_iter, tol: 1e-10, seed: stage_seed(seed, stage::ICA) })
}

#[derive(Debug, Clone, Copy)]
pub struct MethodOptions {
    pub k: usize,
    pub seed: u64,
    pub tica_iterations: usize,
    pub tica_step: f64,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions { k: DEFAULT_K, seed: 0, tica_iterations: 10_000, tica_step: 0.1 }
    }
}

/// Axes of one method, already in that method's order.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub method: Method,
    pub matrix: EmbeddingMatrix,
    /// Skewness of every output column (signed for the random order).
    pub gamma: Array1<f64>,
    /// Source column of every output column.
    pub order: Vec<usize>,
    pub tour: Option<TourOrder>,
    pub tica: Option<TicaModel>,
}

/// Orders the axes. `ica` is required for the ICA-based methods; `z` is the
/// whitened matrix used by PCA and TICA.
pub fn run_method(method: Method, z: &EmbeddingMatrix, ica: Option<&IcaResult>, opts: &MethodOptions) -> Result<MethodOutput> {
    let need_ica = || ica.ok_or_else(|| Error::InvalidArgument(format!("{method} needs an ICA result")));
    let output = |matrix: EmbeddingMatrix, gamma, order, tour, tica| MethodOutput { method, matrix, gamma, order, tour, tica };
    match method {
        Method::AxisTour => {
            let s = &need_ica()?.sources;
            let v = axis_embeddings(s, opts.k.min(s.nrows()))?;
            let tour = anchor_tour(&solve_axis_tour(&v, stage_seed(opts.seed, stage::TOUR))?, &v)?;
            let t = apply_tour(s, &tour)?;
            let gamma = select(&need_ica()?.skewness, &tour.tau);
            Ok(output(t, gamma, tour.tau.clone(), Some(tour), None))
        }
        Method::SkewSort => {
            let r = need_ica()?;
            let order = skewness_sort_order(&r.sources);
            let t = permute_columns(&r.sources, &order)?;
            Ok(output(t, select(&r.skewness, &order), order, None, None))
        }
        Method::RandOrder => {
            let r = need_ica()?;
            let (perm, signs) = random_order(r.sources.ncols(), stage_seed(opts.seed, stage::RANDOM_ORDER));
            let t = apply_random_order(&r.sources, &perm, &signs)?;
            let gamma = select(&r.skewness, &perm) * &Array1::from(signs);
            Ok(output(t, gamma, perm, None, None))
        }
        Method::Pca => {
            let gamma = lenient_skewness(z.data());
            Ok(output(z.clone(), gamma, (0..z.ncols()).collect(), None, None))
        }
        Method::Tica9 | Method::Tica75 => {
            let width = method.tica_width().expect("tica method").min(z.ncols());
            let params = TicaParams {
                width,
                iterations: opts.tica_iterations,
                step: opts.tica_step,
                seed: stage_seed(opts.seed, stage::TICA),
                ..TicaParams::default()
            };
            let model = tica_fit(z, &params)?;
            let (s, _) = orient_positive_skew(&model.sources(z)?);
            let gamma = lenient_skewness(s.data());
            Ok(output(s, gamma, (0..z.ncols()).collect(), None, Some(model)))
        }
    }
}

fn select(values: &Array1<f64>, order: &[usize]) -> Array1<f64> {
    order.iter().map(|&i| values[i]).collect()
}

/// Skewness-weighted projection for a method's ordered axes. PCA and TICA
/// axes can be negatively skewed, so every method but the random order
/// weights by `|γ|`.
pub fn projection(out: &MethodOutput, p: usize, alpha: f64) -> Result<ProjectionMatrix> {
    let mode = match out.method {
        Method::RandOrder => ProjectionMode::RandomOrder,
        Method::SkewSort => ProjectionMode::SkewnessSort,
        _ => ProjectionMode::AxisTour,
    };
    let gamma = match mode {
        ProjectionMode::RandomOrder => out.gamma.clone(),
        _ => out.gamma.mapv(f64::abs),
    };
    ProjectionMatrix::build(gamma.view(), p, alpha, mode)
}

/// Reduces a method's ordered axes to `p` dimensions.
pub fn reduce(out: &MethodOutput, p: usize, alpha: f64, reduction: Reduction) -> Result<EmbeddingMatrix> {
    match reduction {
        Reduction::Prefix => prefix_axes(&out.matrix, p),
        Reduction::Projection => apply_projection(&out.matrix, &projection(out, p, alpha)?),
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1};

    use super::*;
    use crate::linalg::random_orthogonal;

    fn mixed(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Array2::from_shape_simple_fn((n, d), || Exp1.sample(&mut rng));
        let a = random_orthogonal(d, &mut rng).unwrap();
        EmbeddingMatrix::from_array(s.dot(&a)).unwrap()
    }

    #[test]
    fn stage_seeds_differ() {
        let seeds: Vec<u64> = (1..=6).map(|s| stage_seed(42, s)).collect();
        for i in 0..6 {
            for j in 0..i {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        assert_eq!(stage_seed(42, 1), stage_seed(42, 1));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("tour".parse::<Method>().is_err());
    }

    #[test]
    fn every_method_keeps_geometry_at_full_dimension() {
        let x = mixed(400, 6, 1);
        let (z, _) = whiten(&x).unwrap();
        let r = ica(&z, 3, 500).unwrap();
        let opts = MethodOptions { k: 10, seed: 3, tica_iterations: 5, tica_step: 0.1 };
        let gram = |m: &EmbeddingMatrix| m.data().dot(&m.data().t());
        let base = gram(&z);
        for m in Method::ALL {
            let out = run_method(m, &z, Some(&r), &opts).unwrap();
            let full = reduce(&out, 6, 1.0 / 3.0, m.default_reduction()).unwrap();
            let diff = (&gram(&full) - &base).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
            assert!(diff < 1e-8, "{m}: {diff}");
            assert_eq!(reduce(&out, 2, 1.0 / 3.0, m.default_reduction()).unwrap().ncols(), 2);
        }
    }

    #[test]
    fn ica_methods_require_ica() {
        let (z, _) = whiten(&mixed(100, 3, 2)).unwrap();
        assert!(run_method(Method::AxisTour, &z, None, &MethodOptions::default()).is_err());
        assert!(run_method(Method::Pca, &z, None, &MethodOptions::default()).is_ok());
    }
}
