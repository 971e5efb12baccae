//! Merging consecutive axes into fewer dimensions.
//!
//! The axis range is split into `p` contiguous intervals and each interval
//! is collapsed onto one unit vector whose weights grow with the skewness of
//! its axes (`γ^α`). Intervals are stored 0-based and half-open; the
//! `Display` form and the CLI use 1-based inclusive bounds.

use std::fmt;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed_io::EmbeddingMatrix;
use crate::ica::lenient_skewness;
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.0 / 3.0;

/// Axes `start..end` (0-based, half-open).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidArgument(format!("empty interval {start}..{end}")));
        }
        Ok(Interval { start, end })
    }

    /// From 1-based inclusive bounds, as written on the command line.
    pub fn from_one_based(a: usize, b: usize) -> Result<Self> {
        if a == 0 || b < a {
            return Err(Error::InvalidArgument(format!("interval {a}:{b} is not 1 ≤ a ≤ b")));
        }
        Ok(Interval { start: a - 1, end: b })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, axis: usize) -> bool {
        (self.start..self.end).contains(&axis)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}–{}", self.start + 1, self.end)
    }
}

impl std::str::FromStr for Interval {
    type Err = Error;

    /// `a:b`, 1-based inclusive.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected a:b, got {s:?}"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        Interval::from_one_based(a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalPartition {
    pub d: usize,
    pub p: usize,
    pub intervals: Vec<Interval>,
}

/// `p` contiguous intervals covering `0..d`; the first `d % p` are one axis
/// longer than the rest.
pub fn make_intervals(d: usize, p: usize) -> Result<IntervalPartition> {
    if p < 1 || p > d {
        return Err(Error::InvalidArgument(format!("p = {p} outside 1..={d}")));
    }
    let (base, extra) = (d / p, d % p);
    let mut intervals = Vec::with_capacity(p);
    let mut start = 0;
    for r in 0..p {
        let len = base + usize::from(r < extra);
        intervals.push(Interval { start, end: start + len });
        start += len;
    }
    Ok(IntervalPartition { d, p, intervals })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    AxisTour,
    SkewnessSort,
    RandomOrder,
}

#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    /// `d × p`; column `r` lives on interval `r`.
    pub f: Array2<f64>,
    pub alpha: f64,
    pub mode: ProjectionMode,
}

fn check_interval(interval: Interval, d: usize) -> Result<()> {
    if interval.is_empty() || interval.end > d {
        return Err(Error::InvalidArgument(format!("interval {interval} outside 1–{d}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be ≥ 0, got {alpha}")));
    }
    Ok(())
}

/// Unit vector on `interval` with weights `γ_ℓ^α`. Falls back to uniform
/// weights when `α = 0` or every `γ` in the interval is zero.
pub fn projection_vector(gamma: ArrayView1<'_, f64>, interval: Interval, alpha: f64) -> Result<Array1<f64>> {
    check_alpha(alpha)?;
    check_interval(interval, gamma.len())?;
    if let Some(g) = gamma.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative skewness weight {g}")));
    }
    weighted(gamma, interval, alpha, |g| g.powf(alpha))
}

/// Like [`projection_vector`] but each weight carries the sign of its
/// skewness, `sgn(γ)|γ|^α`, with `sgn(0) = +1`.
pub fn signed_projection_vector(gamma: ArrayView1<'_, f64>, interval: Interval, alpha: f64) -> Result<Array1<f64>> {
    check_alpha(alpha)?;
    check_interval(interval, gamma.len())?;
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidArgument("non-finite skewness".into()));
    }
    weighted(gamma, interval, alpha, |g| {
        let sign = if g < 0.0 { -1.0 } else { 1.0 };
        if alpha == 0.0 {
            sign
        } else {
            sign * g.abs().powf(alpha)
        }
    })
}

fn weighted(
    gamma: ArrayView1<'_, f64>,
    interval: Interval,
    alpha: f64,
    weight: impl Fn(f64) -> f64,
) -> Result<Array1<f64>> {
    let mut f = Array1::zeros(gamma.len());
    let mut seg = f.slice_mut(s![interval.start..interval.end]);
    if interval.len() == 1 {
        // exact, so that p = d is the identity bit for bit
        seg[0] = if weight(gamma[interval.start]) < 0.0 { -1.0 } else { 1.0 };
        return Ok(f);
    }
    let local = gamma.slice(s![interval.start..interval.end]);
    if alpha > 0.0 && local.iter().all(|&g| g == 0.0) {
        seg.fill(1.0);
    } else {
        seg.assign(&local.mapv(&weight));
    }
    let norm = seg.dot(&seg).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Numeric(format!("degenerate weights on interval {interval}")));
    }
    seg /= norm;
    Ok(f)
}

impl ProjectionMatrix {
    /// Skewness-weighted projection over `make_intervals(d, p)`.
    pub fn build(gamma: ArrayView1<'_, f64>, p: usize, alpha: f64, mode: ProjectionMode) -> Result<Self> {
        let d = gamma.len();
        let partition = make_intervals(d, p)?;
        let mut f = Array2::zeros((d, p));
        for (r, &interval) in partition.intervals.iter().enumerate() {
            let col = match mode {
                ProjectionMode::RandomOrder => signed_projection_vector(gamma, interval, alpha)?,
                _ => projection_vector(gamma, interval, alpha)?,
            };
            f.column_mut(r).assign(&col);
        }
        Ok(ProjectionMatrix { f, alpha, mode })
    }
}

/// `T · F`, where `F` merges the axes of every interval of
/// `make_intervals(d, p)` with weights `γ^α`.
pub fn reduce_dimensions(t: &EmbeddingMatrix, gamma: ArrayView1<'_, f64>, p: usize, alpha: f64) -> Result<EmbeddingMatrix> {
    reduce_with_mode(t, gamma, p, alpha, ProjectionMode::AxisTour)
}

pub fn reduce_with_mode(
    t: &EmbeddingMatrix,
    gamma: ArrayView1<'_, f64>,
    p: usize,
    alpha: f64,
    mode: ProjectionMode,
) -> Result<EmbeddingMatrix> {
    if gamma.len() != t.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} skewness values for {} columns",
            gamma.len(),
            t.ncols()
        )));
    }
    let proj = ProjectionMatrix::build(gamma, p, alpha, mode)?;
    apply_projection(t, &proj)
}

pub fn apply_projection(t: &EmbeddingMatrix, proj: &ProjectionMatrix) -> Result<EmbeddingMatrix> {
    if proj.f.nrows() != t.ncols() {
        return Err(Error::DimensionMismatch(format!("F has {} rows for {} columns", proj.f.nrows(), t.ncols())));
    }
    if proj.f.nrows() == proj.f.ncols() && is_identity(&proj.f) {
        return Ok(t.clone());
    }
    t.with_data(t.data().dot(&proj.f))
}

fn is_identity(f: &Array2<f64>) -> bool {
    f.indexed_iter().all(|((i, j), &v)| v == if i == j { 1.0 } else { 0.0 })
}

/// Columns ordered by descending skewness, ties by smaller index.
pub fn skewness_sort_order(s: &EmbeddingMatrix) -> Vec<usize> {
    order_by_descending(lenient_skewness(s.data()).view())
}

pub fn order_by_descending(gamma: ArrayView1<'_, f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gamma.len()).collect();
    order.sort_by(|&a, &b| gamma[b].total_cmp(&gamma[a]).then(a.cmp(&b)));
    order
}

/// Seeded uniform permutation of `0..d` and independent ±1 signs.
pub fn random_order(d: usize, seed: u64) -> (Vec<usize>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    let signs = (0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    (perm, signs)
}

/// Columns reordered by `perm` and multiplied by `signs`.
pub fn apply_random_order(s: &EmbeddingMatrix, perm: &[usize], signs: &[f64]) -> Result<EmbeddingMatrix> {
    if signs.len() != perm.len() {
        return Err(Error::DimensionMismatch("signs and permutation differ in length".into()));
    }
    let permuted = crate::tour::permute_columns(s, perm)?;
    let signs = Array1::from(signs.to_vec());
    let data = permuted.data() * &signs.insert_axis(Axis(0));
    Ok(s.with_data(data)?.with_flags(s.is_centered(), s.is_normalized()))
}

/// The first `p` columns.
pub fn prefix_axes(e: &EmbeddingMatrix, p: usize) -> Result<EmbeddingMatrix> {
    if p < 1 || p > e.ncols() {
        return Err(Error::InvalidArgument(format!("p = {p} outside 1..={}", e.ncols())));
    }
    if p == e.ncols() {
        return Ok(e.clone());
    }
    e.with_data(e.data().slice(s![.., ..p]).to_owned())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::*;

    fn lengths(p: &IntervalPartition) -> Vec<usize> {
        p.intervals.iter().map(Interval::len).collect()
    }

    #[test]
    fn interval_examples() {
        let p = make_intervals(10, 3).unwrap();
        assert_eq!(lengths(&p), vec![4, 3, 3]);
        let shown: Vec<String> = p.intervals.iter().map(ToString::to_string).collect();
        assert_eq!(shown, vec!["1–4", "5–7", "8–10"]);

        let mut expect = vec![43; 6];
        expect.push(42);
        assert_eq!(lengths(&make_intervals(300, 7).unwrap()), expect);
        assert!(lengths(&make_intervals(5, 5).unwrap()).iter().all(|&l| l == 1));
        assert!(make_intervals(3, 4).is_err());
        assert!(make_intervals(3, 0).is_err());
    }

    #[test]
    fn interval_parsing() {
        assert_eq!("86:94".parse::<Interval>().unwrap(), Interval { start: 85, end: 94 });
        assert!("0:3".parse::<Interval>().is_err());
        assert!("4:3".parse::<Interval>().is_err());
        assert!("4".parse::<Interval>().is_err());
    }

    #[test]
    fn projection_vector_examples() {
        let gamma = array![8.0, 1.0, 3.0];
        let i = Interval::new(0, 2).unwrap();
        let f = projection_vector(gamma.view(), i, 1.0 / 3.0).unwrap();
        let r5 = 5f64.sqrt();
        assert_abs_diff_eq!(f[0], 2.0 / r5, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], 1.0 / r5, epsilon = 1e-12);
        assert_eq!(f[2], 0.0);

        let u = projection_vector(gamma.view(), Interval::new(0, 3).unwrap(), 0.0).unwrap();
        assert!(u.iter().all(|&v| (v - 1.0 / 3f64.sqrt()).abs() < 1e-15));

        let single = projection_vector(gamma.view(), Interval::new(2, 3).unwrap(), 0.7).unwrap();
        assert_eq!(single.to_vec(), vec![0.0, 0.0, 1.0]);

        let zeros = array![0.0, 0.0, 0.0, 0.0];
        let z = projection_vector(zeros.view(), Interval::new(1, 3).unwrap(), 1.0 / 3.0).unwrap();
        assert_abs_diff_eq!(z[1], 1.0 / 2f64.sqrt(), epsilon = 1e-15);

        assert!(projection_vector(array![-1.0, 1.0].view(), i, 1.0).is_err());
        assert!(projection_vector(gamma.view(), i, -0.5).is_err());
    }

    #[test]
    fn signed_projection_examples() {
        let r5 = 5f64.sqrt();
        let i = Interval::new(0, 2).unwrap();
        let f = signed_projection_vector(array![-8.0, 1.0].view(), i, 1.0 / 3.0).unwrap();
        assert_abs_diff_eq!(f[0], -2.0 / r5, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], 1.0 / r5, epsilon = 1e-12);

        let pos = array![0.5, 2.0, 0.1];
        let all = Interval::new(0, 3).unwrap();
        let a = signed_projection_vector(pos.view(), all, 1.0 / 3.0).unwrap();
        let b = projection_vector(pos.view(), all, 1.0 / 3.0).unwrap();
        assert_eq!(a, b);

        let neg = signed_projection_vector(array![0.3, -0.2].view(), Interval::new(1, 2).unwrap(), 1.0 / 3.0).unwrap();
        assert_eq!(neg.to_vec(), vec![0.0, -1.0]);
    }

    #[test]
    fn reduction_examples() {
        let t = EmbeddingMatrix::from_array(array![[1.0, 2.0, 3.0, 4.0], [0.5, -1.0, 0.0, 2.0], [3.0, 0.0, 1.0, 1.0]]).unwrap();
        let gamma = array![8.0, 1.0, 1.0, 27.0];

        assert_eq!(reduce_dimensions(&t, gamma.view(), 4, DEFAULT_ALPHA).unwrap().data(), t.data());

        let one = reduce_dimensions(&t, gamma.view(), 1, 0.0).unwrap();
        for (i, row) in t.data().outer_iter().enumerate() {
            assert_abs_diff_eq!(one.data()[[i, 0]], row.sum() / 2.0, epsilon = 1e-12);
        }

        // hand-built F for p = 2 with α = 1/3: weights (2,1)/√5 and (1,3)/√10
        let r5 = 5f64.sqrt();
        let r10 = 10f64.sqrt();
        let two = reduce_dimensions(&t, gamma.view(), 2, 1.0 / 3.0).unwrap();
        let expect = array![
            [(2.0 + 2.0) / r5, (3.0 + 12.0) / r10],
            [(1.0 - 1.0) / r5, (0.0 + 6.0) / r10],
            [6.0 / r5, (1.0 + 3.0) / r10]
        ];
        for (a, b) in two.data().iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        assert!(reduce_dimensions(&t, array![1.0, 2.0].view(), 1, 0.0).is_err());
    }

    #[test]
    fn skewness_order_examples() {
        assert_eq!(order_by_descending(array![0.1, 0.9, 0.5].view()), vec![1, 2, 0]);
        assert_eq!(order_by_descending(array![0.4, 0.4, 0.4].view()), vec![0, 1, 2]);
        assert_eq!(order_by_descending(array![3.0, 2.0, 1.0].view()), vec![0, 1, 2]);
    }

    #[test]
    fn random_order_examples() {
        assert_eq!(random_order(300, 5), random_order(300, 5));
        assert_ne!(random_order(300, 5).0, random_order(300, 6).0);
        let (p, s) = random_order(1, 9);
        assert_eq!(p, vec![0]);
        assert_eq!(s.len(), 1);
        assert!(s[0] == 1.0 || s[0] == -1.0);
    }

    #[test]
    fn signed_reorder() {
        let e = EmbeddingMatrix::from_array(array![[1.0, 2.0, 3.0]]).unwrap();
        let out = apply_random_order(&e, &[2, 0, 1], &[1.0, -1.0, 1.0]).unwrap();
        assert_eq!(out.data(), &array![[3.0, -1.0, 2.0]]);
    }

    #[test]
    fn prefix_examples() {
        let e = EmbeddingMatrix::from_array(array![[1.0, 2.0, 3.0, 4.0], [5.0, 6.0, 7.0, 8.0]]).unwrap();
        assert_eq!(prefix_axes(&e, 4).unwrap().data(), e.data());
        assert_eq!(prefix_axes(&e, 1).unwrap().data(), &array![[1.0], [5.0]]);
        assert_eq!(prefix_axes(&e, 2).unwrap().data(), &array![[1.0, 2.0], [5.0, 6.0]]);
        assert!(prefix_axes(&e, 5).is_err());
    }

    #[test]
    fn intervals_exhaustive() {
        for d in 1..=64 {
            for p in 1..=d {
                let part = make_intervals(d, p).unwrap();
                let lens = lengths(&part);
                assert_eq!(lens.iter().sum::<usize>(), d);
                assert_eq!(part.intervals[0].start, 0);
                assert_eq!(part.intervals[p - 1].end, d);
                for w in part.intervals.windows(2) {
                    assert_eq!(w[0].end, w[1].start);
                }
                for (r, &l) in lens.iter().enumerate() {
                    assert_eq!(l, d / p + usize::from(r < d % p));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn projection_columns_are_unit_and_confined(
            gamma in proptest::collection::vec(0.0f64..5.0, 1..40),
            p_frac in 0.0f64..1.0,
            alpha in 0.0f64..2.0,
        ) {
            let d = gamma.len();
            let p = 1 + ((d - 1) as f64 * p_frac) as usize;
            let g = Array1::from(gamma);
            let proj = ProjectionMatrix::build(g.view(), p, alpha, ProjectionMode::AxisTour).unwrap();
            let part = make_intervals(d, p).unwrap();
            for (r, interval) in part.intervals.iter().enumerate() {
                let col = proj.f.column(r);
                prop_assert!((col.dot(&col) - 1.0).abs() < 1e-12);
                for (l, &v) in col.iter().enumerate() {
                    prop_assert!(v >= 0.0);
                    if !interval.contains(l) {
                        prop_assert_eq!(v, 0.0);
                    }
                }
            }
        }

        #[test]
        fn full_dimension_is_identity(seed in 0u64..200, d in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = Array2::from_shape_simple_fn((7, d), || rng.sample::<f64, _>(StandardNormal));
            let gamma = Array1::from_shape_simple_fn(d, || rng.random_range(0.0..3.0));
            let e = EmbeddingMatrix::from_array(t.clone()).unwrap();
            let out = reduce_dimensions(&e, gamma.view(), d, DEFAULT_ALPHA).unwrap();
            prop_assert_eq!(out.data(), &t);
        }
    }
}
