//! Topographic ICA on a one-dimensional axis topology.
//!
//! Neighbouring components share variance through `H`, a banded kernel built
//! from a rectangular filter convolved with itself. The model is fitted by
//! gradient ascent on the approximated log-likelihood
//! `E[Σ_m G(Σ_ℓ h_ℓm s_ℓ²)]` with `G(y) = −β½ √y + β₀`, orthonormalizing
//! `W` after every step.

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::embed_io::EmbeddingMatrix;
use crate::ica::WHITENESS_TOLERANCE;
use crate::linalg::{distance_from_identity, random_orthogonal, symmetric_decorrelation};
use crate::whiten::whiteness_deviation;
use crate::{Error, Result};

pub const BETA_HALF: f64 = 0.8;
pub const BETA_ZERO: f64 = 1.2;
const Y_FLOOR: f64 = 1e-12;
/// Step halvings tried per iteration before `W` is left as is.
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodMatrix {
    pub h: Array2<f64>,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    /// Wrap the kernel around the ends of the axis range.
    pub cyclic: bool,
    /// Self-convolutions applied to the rectangle: 2 gives `rect∗rect∗rect`.
    pub self_convolutions: usize,
}

impl Default for Topology {
    fn default() -> Self {
        Topology { cyclic: false, self_convolutions: 2 }
    }
}

/// Rectangle of `width` ones convolved `times` times with itself.
pub fn rect_kernel(width: usize, times: usize) -> Vec<f64> {
    let rect = vec![1.0; width];
    let mut k = rect.clone();
    for _ in 0..times {
        let mut next = vec![0.0; k.len() + width - 1];
        for (i, &a) in k.iter().enumerate() {
            for (j, &b) in rect.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        k = next;
    }
    k
}

pub fn neighborhood_matrix(d: usize, width: usize) -> Result<NeighborhoodMatrix> {
    neighborhood_matrix_with(d, width, Topology::default())
}

/// Row `ℓ` is the kernel centred at `ℓ`, truncated at the ends (or wrapped
/// for a cyclic topology). Even-length kernels have no centre tap; the two
/// half-shifted placements are averaged, which keeps `H` symmetric.
pub fn neighborhood_matrix_with(d: usize, width: usize, topology: Topology) -> Result<NeighborhoodMatrix> {
    if width < 1 || width > d {
        return Err(Error::InvalidArgument(format!("width {width} outside 1..={d}")));
    }
    let kernel = rect_kernel(width, topology.self_convolutions);
    let len = kernel.len() as i64;
    let centres: Vec<i64> = if len % 2 == 1 { vec![(len - 1) / 2] } else { vec![len / 2 - 1, len / 2] };
    let tap = |offset: i64| -> f64 {
        centres
            .iter()
            .map(|&c| {
                let t = offset + c;
                if (0..len).contains(&t) {
                    kernel[t as usize]
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            / centres.len() as f64
    };
    let di = d as i64;
    let h = Array2::from_shape_fn((d, d), |(l, m)| {
        let offset = m as i64 - l as i64;
        if topology.cyclic {
            // every image of the offset that the kernel reaches
            let reach = len / di + 2;
            (-reach..=reach).map(|w| tap(offset + w * di)).sum()
        } else {
            tap(offset)
        }
    });
    Ok(NeighborhoodMatrix { h, width })
}

/// `Y = (S ⊙ S) · H`, row `i` holding `Σ_ℓ h_ℓm s_iℓ²` in column `m`.
fn local_energy(s: &Array2<f64>, h: &NeighborhoodMatrix) -> Array2<f64> {
    s.mapv(|v| v * v).dot(&h.h)
}

fn big_g(y: f64) -> f64 {
    -BETA_HALF * y.max(0.0).sqrt() + BETA_ZERO
}

fn small_g(y: f64) -> f64 {
    -BETA_HALF / (2.0 * y.max(Y_FLOOR).sqrt())
}

/// Mean over rows of `Σ_m G(y_m)`.
pub fn approx_log_likelihood(s: &Array2<f64>, h: &NeighborhoodMatrix) -> Result<f64> {
    if h.h.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch(format!("H is {}×{} for {} columns", h.h.nrows(), h.h.ncols(), s.ncols())));
    }
    if s.nrows() == 0 {
        return Err(Error::Empty("source matrix".into()));
    }
    Ok(local_energy(s, h).mapv(big_g).sum() / s.nrows() as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct TicaParams {
    pub width: usize,
    pub iterations: usize,
    pub step: f64,
    /// Step multiplier applied every [`TicaParams::decay_every`] iterations.
    pub decay: f64,
    pub decay_every: usize,
    pub seed: u64,
    pub topology: Topology,
}

impl Default for TicaParams {
    fn default() -> Self {
        TicaParams {
            width: 9,
            iterations: 10_000,
            step: 0.1,
            decay: 0.999,
            decay_every: 100,
            seed: 0,
            topology: Topology::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TicaModel {
    /// Rows are the filters: `S = Z · Wᵀ`.
    pub w: Array2<f64>,
    pub neighborhood: NeighborhoodMatrix,
    pub beta_half: f64,
    pub beta_zero: f64,
    pub step: f64,
    pub iterations: usize,
    /// Likelihood before the first step, then after every step.
    pub likelihood_trace: Vec<f64>,
    /// `‖WWᵀ − I‖_F` after every step.
    pub orthonormality_trace: Vec<f64>,
}

impl TicaModel {
    pub fn sources(&self, z: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        Ok(z.with_data(z.data().dot(&self.w.t()))?.with_flags(z.is_centered(), false))
    }
}

/// Gradient ascent from a seeded random orthonormal `W`:
/// `W ← W + step · (2/n) (S ⊙ (g(Y)·H))ᵀ Z`, then `W ← (WWᵀ)^(-1/2) W`.
/// A step that would lower the likelihood is halved (for good) and retried,
/// so the likelihood trace never decreases.
pub fn tica_fit(z: &EmbeddingMatrix, params: &TicaParams) -> Result<TicaModel> {
    if !(params.step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {}", params.step)));
    }
    let deviation = whiteness_deviation(z.data());
    if !(deviation <= WHITENESS_TOLERANCE) {
        return Err(Error::NotWhitened { deviation });
    }
    let x = z.data();
    let (n, d) = x.dim();
    let neighborhood = neighborhood_matrix_with(d, params.width, params.topology)?;
    let mut w = random_orthogonal(d, &mut ChaCha8Rng::seed_from_u64(params.seed))?;

    let mut step = params.step;
    let mut likelihood_trace = Vec::with_capacity(params.iterations + 1);
    let mut orthonormality_trace = Vec::with_capacity(params.iterations);
    let mut s = x.dot(&w.t());
    let mut y = local_energy(&s, &neighborhood);
    let mut current = y.mapv(big_g).sum() / n as f64;
    likelihood_trace.push(current);
    for it in 0..params.iterations {
        let r = y.mapv(small_g).dot(&neighborhood.h);
        let grad = (&s * &r).t().dot(x) * (2.0 / n as f64);
        // the gradient scales with the raw H entries, so a fixed step can
        // overshoot; halve it until the likelihood does not drop
        for _ in 0..=MAX_HALVINGS {
            let candidate = symmetric_decorrelation(&(&w + &(&grad * step)))?;
            let cs = x.dot(&candidate.t());
            let cy = local_energy(&cs, &neighborhood);
            let cl = cy.mapv(big_g).sum() / n as f64;
            if cl >= current {
                (w, s, y, current) = (candidate, cs, cy, cl);
                break;
            }
            step *= 0.5;
        }
        let dev = distance_from_identity(w.dot(&w.t()).view());
        if !dev.is_finite() || !current.is_finite() {
            return Err(Error::Numeric(format!("W diverged at iteration {it}")));
        }
        likelihood_trace.push(current);
        orthonormality_trace.push(dev);
        if params.decay_every > 0 && (it + 1) % params.decay_every == 0 {
            step *= params.decay;
        }
    }
    Ok(TicaModel {
        w,
        neighborhood,
        beta_half: BETA_HALF,
        beta_zero: BETA_ZERO,
        step,
        iterations: params.iterations,
        likelihood_trace,
        orthonormality_trace,
    })
}

/// `cov(s_τ(ℓ)², s_τ(ℓ+1)²)` along the order, normalized by `n`.
pub fn higher_order_correlation(s: &Array2<f64>, order: &[usize]) -> Result<Vec<f64>> {
    let d = s.ncols();
    let mut seen = vec![false; d];
    if order.len() != d || order.iter().any(|&o| o >= d || std::mem::replace(&mut seen[o], true)) {
        return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{d}")));
    }
    let sq = s.mapv(|v| v * v);
    let mean = sq.mean_axis(Axis(0)).ok_or_else(|| Error::Empty("source matrix".into()))?;
    let centered = &sq - &mean.insert_axis(Axis(0));
    let n = s.nrows() as f64;
    Ok(order
        .windows(2)
        .map(|w| centered.column(w[0]).dot(&centered.column(w[1])) / n)
        .collect())
}

#[derive(Debug, Clone)]
pub struct SyntheticTopographicSource {
    pub u: Array2<f64>,
    pub z: Array2<f64>,
    pub sigma: Array2<f64>,
    pub s: Array2<f64>,
}

/// `u ~ Exp(1)`, `z ~ N(0, 1)`, `σ = √(u·H)`, `s = σ ⊙ z`, all `n × d`.
pub fn generate_topographic_sources(d: usize, n: usize, width: usize, seed: u64) -> Result<SyntheticTopographicSource> {
    let h = neighborhood_matrix(d, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Array2::from_shape_simple_fn((n, d), || Exp1.sample(&mut rng));
    let z = Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(&mut rng));
    let sigma = u.dot(&h.h).mapv(f64::sqrt);
    let s = &sigma * &z;
    Ok(SyntheticTopographicSource { u, z, sigma, s })
}
