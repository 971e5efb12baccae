//! Semantic-continuity metrics over an ordering of axis embeddings.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dimred::Interval;
use crate::embed_io::{normalize_rows, EmbeddingMatrix};
use crate::stats::{self, spearman};
use crate::tour::{axis_embeddings_normalized, AxisEmbeddingSet};
use crate::viz::ProjectionFrame;
use crate::{Error, Result};

pub const HISTOGRAM_BINS: usize = 40;
pub const HISTOGRAM_RANGE: (f64, f64) = (-0.2, 0.6);

fn check_order(order: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    if order.len() != d || order.iter().any(|&o| o >= d || std::mem::replace(&mut seen[o], true)) {
        return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{d}")));
    }
    Ok(())
}

fn cos_rows(v: &Array2<f64>, i: usize, j: usize) -> Result<f64> {
    stats::cosine(v.row(i), v.row(j)).ok_or(Error::ZeroVector)
}

/// `cos(v_τ(ℓ), v_τ(ℓ+1))` for `ℓ = 0..d−1`, no wrap.
pub fn adjacent_cosines(v: &AxisEmbeddingSet, order: &[usize]) -> Result<Vec<f64>> {
    check_order(order, v.dim())?;
    order.windows(2).map(|w| cos_rows(&v.vectors, w[0], w[1])).collect()
}

/// Cosine between the last and first axis of the order.
pub fn wrap_cosine(v: &AxisEmbeddingSet, order: &[usize]) -> Result<f64> {
    check_order(order, v.dim())?;
    cos_rows(&v.vectors, order[order.len() - 1], order[0])
}

/// `c_[d]`: the adjacent cosines plus the wrap term, averaged over `d`.
pub fn average_continuity(v: &AxisEmbeddingSet, order: &[usize]) -> Result<f64> {
    let adjacent = adjacent_cosines(v, order)?;
    let wrap = wrap_cosine(v, order)?;
    Ok((adjacent.iter().sum::<f64>() + wrap) / order.len() as f64)
}

/// `c_I`: mean adjacent cosine between ordered positions inside `interval`.
pub fn interval_continuity(v: &AxisEmbeddingSet, order: &[usize], interval: Interval) -> Result<f64> {
    if interval.len() < 2 || interval.end > order.len() {
        return Err(Error::InvalidArgument(format!(
            "interval {interval} needs two axes within 1–{}",
            order.len()
        )));
    }
    let adjacent = adjacent_cosines(v, order)?;
    let inner = &adjacent[interval.start..interval.end - 1];
    Ok(inner.iter().sum::<f64>() / inner.len() as f64)
}

/// `d_I`: mean distance from the origin of the shown points.
pub fn scatter_quality(frame: &ProjectionFrame) -> Result<f64> {
    if frame.show.is_empty() {
        return Err(Error::EmptyShowSet);
    }
    let total: f64 = frame
        .show
        .iter()
        .map(|&i| frame.coords.row(i).dot(&frame.coords.row(i)).sqrt())
        .sum();
    Ok(total / frame.show.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!("{bins} bins over [{lo}, {hi}]")));
        }
        let mut h = Histogram { lo, hi, counts: vec![0; bins], below: 0, above: 0 };
        let width = (hi - lo) / bins as f64;
        for &x in values {
            if x < lo {
                h.below += 1;
            } else if x > hi {
                h.above += 1;
            } else {
                let b = (((x - lo) / width) as usize).min(bins - 1);
                h.counts[b] += 1;
            }
        }
        Ok(h)
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n).map(|b| self.lo + (self.hi - self.lo) * b as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub adjacent_cosines: Vec<f64>,
    pub wrap_cosine: f64,
    pub mean: f64,
    /// Population variance of the `d` cycle cosines.
    pub variance: f64,
    pub histogram: Histogram,
}

pub fn continuity_report(v: &AxisEmbeddingSet, order: &[usize]) -> Result<ContinuityReport> {
    let adjacent = adjacent_cosines(v, order)?;
    let wrap = wrap_cosine(v, order)?;
    let d = order.len() as f64;
    let mean = (adjacent.iter().sum::<f64>() + wrap) / d;
    let variance = adjacent.iter().chain(std::iter::once(&wrap)).map(|c| (c - mean).powi(2)).sum::<f64>() / d;
    let histogram = Histogram::new(&adjacent, HISTOGRAM_BINS, HISTOGRAM_RANGE.0, HISTOGRAM_RANGE.1)?;
    Ok(ContinuityReport { adjacent_cosines: adjacent, wrap_cosine: wrap, mean, variance, histogram })
}

/// Mean and unbiased variance of the cosine between independent standard
/// normal vectors in `d` dimensions. For large `d` these approach `0` and
/// `1/d`; small `d` sits visibly above `1/d`.
pub fn random_baseline_cosine_stats(d: usize, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if trials < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 trials, got {trials}")));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut values = Vec::with_capacity(trials);
    while values.len() < trials {
        a.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        b.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        if let Some(c) = stats::cosine(ArrayView1::from(&a), ArrayView1::from(&b)) {
            values.push(c);
        }
    }
    let mean = stats::mean(&values);
    let var = values.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok((mean, var))
}

#[derive(Debug, Clone, Serialize)]
pub struct KSensitivity {
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
    /// `c[i][j]` for `k1[i]`, `k2[j]`.
    pub c: Vec<Vec<f64>>,
    /// `M(k1[i])`: row means of `c`.
    pub m: Vec<f64>,
}

/// Continuity of each toured matrix (keyed by the `k₁` used to tour it)
/// with axis embeddings rebuilt from the top `k₂` words. The matrices must
/// already be in tour order, so the order here is the identity.
pub fn k_sensitivity(toured_by_k1: &BTreeMap<usize, EmbeddingMatrix>, k2_list: &[usize]) -> Result<KSensitivity> {
    if toured_by_k1.is_empty() || k2_list.is_empty() {
        return Err(Error::Empty("k-sensitivity grid".into()));
    }
    let mut c = Vec::with_capacity(toured_by_k1.len());
    for t in toured_by_k1.values() {
        let t_hat = normalize_rows(t)?;
        let order: Vec<usize> = (0..t.ncols()).collect();
        let row = k2_list
            .iter()
            .map(|&k2| average_continuity(&axis_embeddings_normalized(t_hat.data(), k2)?, &order))
            .collect::<Result<Vec<f64>>>()?;
        c.push(row);
    }
    let m = c.iter().map(|row| stats::mean(row)).collect();
    Ok(KSensitivity { k1: toured_by_k1.keys().copied().collect(), k2: k2_list.to_vec(), c, m })
}

/// Spearman correlation between the skewness of each ordered axis and the
/// mean cosine to its two cyclic neighbours. `gamma` is indexed by axis,
/// not by position.
pub fn skewness_continuity_correlation(v: &AxisEmbeddingSet, order: &[usize], gamma: ArrayView1<'_, f64>) -> Result<f64> {
    let d = order.len();
    if d < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 axes, got {d}")));
    }
    if gamma.len() != d {
        return Err(Error::DimensionMismatch(format!("{} skewness values for {d} axes", gamma.len())));
    }
    let adjacent = adjacent_cosines(v, order)?;
    let wrap = wrap_cosine(v, order)?;
    // cycle[ℓ] = cos(position ℓ, position ℓ+1 mod d)
    let mut cycle = adjacent;
    cycle.push(wrap);
    let neighbour: Vec<f64> = (0..d).map(|l| (cycle[(l + d - 1) % d] + cycle[l]) / 2.0).collect();
    let g: Vec<f64> = order.iter().map(|&a| gamma[a]).collect();
    spearman(&g, &neighbour)
}
