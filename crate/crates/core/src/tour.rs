//! Axis embeddings and the closed tour over them.
//!
//! Each axis is represented by the mean of the normalized embeddings of its
//! top-k words. The axes are then ordered by a cycle that maximizes the sum
//! of cosine similarities between neighbours (equivalently, minimizes the
//! total `1 − cos` cost), and the cycle is rotated so that its weakest edge
//! becomes the wrap-around between the last and the first axis.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed_io::{normalize_rows, EmbeddingMatrix};
use crate::redact::redact;
use crate::{Error, Result};

/// Largest instance accepted by [`held_karp_exact`].
pub const HELD_KARP_MAX: usize = 15;
/// Number of distinct greedy starts tried by [`solve_axis_tour`].
pub const MAX_STARTS: usize = 16;

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct AxisEmbeddingSet {
    pub k: usize,
    /// Row `ℓ` is the embedding of axis `ℓ`.
    pub vectors: Array2<f64>,
    /// Top-k word indices of every axis, in descending value order.
    pub top_sets: Vec<Vec<usize>>,
}

impl AxisEmbeddingSet {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn cosine_matrix(&self) -> Result<CosineMatrix> {
        CosineMatrix::from_rows(&self.vectors)
    }
}

/// Symmetric matrix of pairwise cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineMatrix {
    d: usize,
    values: Vec<f64>,
}

impl CosineMatrix {
    pub fn from_rows(rows: &Array2<f64>) -> Result<Self> {
        let d = rows.nrows();
        let norms: Vec<f64> = rows.outer_iter().map(|r| r.dot(&r).sqrt()).collect();
        if norms.iter().any(|&n| n == 0.0) {
            return Err(Error::ZeroVector);
        }
        let mut values = vec![0.0; d * d];
        for i in 0..d {
            values[i * d + i] = 1.0;
            for j in i + 1..d {
                let c = rows.row(i).dot(&rows.row(j)) / (norms[i] * norms[j]);
                values[i * d + j] = c;
                values[j * d + i] = c;
            }
        }
        Ok(CosineMatrix { d, values })
    }

    /// From explicit values; the matrix must be square and symmetric.
    pub fn from_values(d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != d * d {
            return Err(Error::DimensionMismatch(format!("{} values for {d}×{d}", values.len())));
        }
        for i in 0..d {
            for j in 0..i {
                if values[i * d + j] != values[j * d + i] {
                    return Err(Error::InvalidArgument("similarity matrix is not symmetric".into()));
                }
            }
        }
        Ok(CosineMatrix { d, values })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }
}

/// An ordering of the axes viewed as a closed cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TourOrder {
    pub tau: Vec<usize>,
    /// Sum of the `d` cycle cosines, wrap edge included.
    pub score: f64,
    pub anchored: bool,
}

impl TourOrder {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Already anchored ordering, e.g. the identity for pre-ordered axes.
    pub fn fixed(tau: Vec<usize>, sim: &CosineMatrix) -> Result<Self> {
        check_permutation(&tau, sim.dim())?;
        let score = cycle_score(&tau, sim);
        Ok(TourOrder {
            tau,
            score,
            anchored: true,
        })
    }
}

/// Indices of the `k` largest entries, largest first; ties go to the
/// smaller index.
pub fn top_k_indices(column: ArrayView1<'_, f64>, k: usize) -> Result<Vec<usize>> {
    let n = column.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={n}")));
    }
    let cmp = |a: &usize, b: &usize| column[*b].total_cmp(&column[*a]).then(a.cmp(b));
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    Ok(idx)
}

/// Axis embeddings: `v_ℓ` is the mean of the normalized rows holding the
/// `k` largest values of column `ℓ`.
pub fn axis_embeddings(s: &EmbeddingMatrix, k: usize) -> Result<AxisEmbeddingSet> {
    let normalized = normalize_rows(s)?;
    axis_embeddings_normalized(normalized.data(), k)
}

pub(crate) fn axis_embeddings_normalized(s_hat: &Array2<f64>, k: usize) -> Result<AxisEmbeddingSet> {
    let d = s_hat.ncols();
    let mut vectors = Array2::zeros((d, d));
    let mut top_sets = Vec::with_capacity(d);
    for axis in 0..d {
        let top = top_k_indices(s_hat.column(axis), k)?;
        let mean = s_hat.select(Axis(0), &top).mean_axis(Axis(0)).expect("k >= 1");
        vectors.row_mut(axis).assign(&mean);
        top_sets.push(top);
    }
    Ok(AxisEmbeddingSet { k, vectors, top_sets })
}

/// `1 − cos(a, b)`, in `[0, 2]`.
pub fn tour_cost(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    let c = crate::stats::cosine(a, b).ok_or(Error::ZeroVector)?;
    Ok((1.0 - c).clamp(0.0, 2.0))
}

/// Sum of similarities around the closed cycle.
pub fn cycle_score(tau: &[usize], sim: &CosineMatrix) -> f64 {
    let d = tau.len();
    if d < 2 {
        return 0.0;
    }
    (0..d).map(|i| sim.get(tau[i], tau[(i + 1) % d])).sum()
}

fn check_permutation(tau: &[usize], d: usize) -> Result<()> {
    if tau.len() != d {
        return Err(Error::DimensionMismatch(format!("order of length {} for {d} axes", tau.len())));
    }
    let mut seen = vec![false; d];
    for &t in tau {
        if t >= d || std::mem::replace(&mut seen[t], true) {
            return Err(Error::InvalidArgument(format!("{tau:?} is not a permutation of 0..{d}")));
        }
    }
    Ok(())
}

/// Heuristic maximum-similarity cycle over the axis embeddings.
pub fn solve_axis_tour(v: &AxisEmbeddingSet, seed: u64) -> Result<TourOrder> {
    solve_cycle(&v.cosine_matrix()?, seed)
}

/// Greedy nearest-neighbour construction from up to [`MAX_STARTS`] seeded
/// starts, each polished with 2-opt and Or-opt (segments of 1–3) until no
/// move improves it. The best cycle wins; equal scores go to the
/// lexicographically smallest canonical cycle.
pub fn solve_cycle(sim: &CosineMatrix, seed: u64) -> Result<TourOrder> {
    let d = sim.dim();
    if d < 2 {
        return Err(Error::InvalidArgument(format!("a tour needs at least 2 axes, got {d}")));
    }
    let mut starts: Vec<usize> = (0..d).collect();
    starts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    starts.truncate(d.min(MAX_STARTS));

    let mut best: Option<(Vec<usize>, f64)> = None;
    for &start in &starts {
        let mut tour = greedy_cycle(sim, start);
        improve(&mut tour, sim);
        let tour = canonical(tour);
        let score = cycle_score(&tour, sim);
        let better = match &best {
            None => true,
            Some((bt, bs)) => {
                if (score - bs).abs() <= GAIN_EPS {
                    tour < *bt
                } else {
                    score > *bs
                }
            }
        };
        if better {
            best = Some((tour, score));
        }
    }
    let (tau, score) = best.expect("at least one start");
    Ok(TourOrder {
        tau,
        score,
        anchored: false,
    })
}

fn greedy_cycle(sim: &CosineMatrix, start: usize) -> Vec<usize> {
    let d = sim.dim();
    let mut visited = vec![false; d];
    let mut tour = Vec::with_capacity(d);
    let mut current = start;
    visited[start] = true;
    tour.push(start);
    while tour.len() < d {
        let mut next = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for (cand, &seen) in visited.iter().enumerate() {
            if !seen && sim.get(current, cand) > best {
                best = sim.get(current, cand);
                next = cand;
            }
        }
        visited[next] = true;
        tour.push(next);
        current = next;
    }
    tour
}

fn improve(tour: &mut Vec<usize>, sim: &CosineMatrix) {
    loop {
        let a = two_opt(tour, sim);
        let b = or_opt(tour, sim);
        if !a && !b {
            break;
        }
    }
}

/// One sweep of 2-opt; returns whether anything changed.
fn two_opt(tour: &mut [usize], sim: &CosineMatrix) -> bool {
    let d = tour.len();
    if d < 4 {
        return false;
    }
    let mut changed = false;
    for i in 0..d - 2 {
        for j in i + 2..d {
            if i == 0 && j == d - 1 {
                continue;
            }
            let (a, b) = (tour[i], tour[i + 1]);
            let (c, e) = (tour[j], tour[(j + 1) % d]);
            let gain = sim.get(a, c) + sim.get(b, e) - sim.get(a, b) - sim.get(c, e);
            if gain > GAIN_EPS {
                tour[i + 1..=j].reverse();
                changed = true;
            }
        }
    }
    changed
}

/// One sweep of Or-opt: move a segment of 1–3 consecutive axes, possibly
/// reversed, to the best place elsewhere in the cycle.
fn or_opt(tour: &mut Vec<usize>, sim: &CosineMatrix) -> bool {
    let d = tour.len();
    let mut changed = false;
    for len in 1..=3usize {
        if d < len + 3 {
            break;
        }
        let mut i = 0;
        while i < d {
            let seg: Vec<usize> = (0..len).map(|o| tour[(i + o) % d]).collect();
            let prev = tour[(i + d - 1) % d];
            let next = tour[(i + len) % d];
            let (first, last) = (seg[0], seg[len - 1]);
            let removal = sim.get(prev, next) - sim.get(prev, first) - sim.get(last, next);

            // remaining cycle, walked from `next` round to `prev`
            let rest: Vec<usize> = (0..d - len).map(|o| tour[(i + len + o) % d]).collect();
            let mut best: Option<(f64, usize, bool)> = None;
            for q in 0..rest.len() - 1 {
                let (x, y) = (rest[q], rest[q + 1]);
                let base = removal - sim.get(x, y);
                let forward = base + sim.get(x, first) + sim.get(last, y);
                let backward = base + sim.get(x, last) + sim.get(first, y);
                for (gain, rev) in [(forward, false), (backward, true)] {
                    if gain > GAIN_EPS && best.is_none_or(|(g, _, _)| gain > g) {
                        best = Some((gain, q, rev));
                    }
                }
            }
            if let Some((_, q, rev)) = best {
                let mut moved = seg;
                if rev {
                    moved.reverse();
                }
                let mut rebuilt = Vec::with_capacity(d);
                rebuilt.extend_from_slice(&rest[..=q]);
                rebuilt.extend_from_slice(&moved);
                rebuilt.extend_from_slice(&rest[q + 1..]);
                *tour = rebuilt;
                changed = true;
            }
            i += 1;
        }
    }
    changed
}

/// Rotate so axis 0 leads and orient so the smaller neighbour follows it.
fn canonical(mut tour: Vec<usize>) -> Vec<usize> {
    let d = tour.len();
    let zero = tour.iter().position(|&t| t == 0).expect("permutation contains 0");
    tour.rotate_left(zero);
    if d > 2 && tour[1] > tour[d - 1] {
        tour[1..].reverse();
    }
    tour
}

/// Exact maximum-similarity cycle by dynamic programming over subsets.
pub fn held_karp_exact(v: &AxisEmbeddingSet) -> Result<TourOrder> {
    held_karp_cycle(&v.cosine_matrix()?)
}

pub fn held_karp_cycle(sim: &CosineMatrix) -> Result<TourOrder> {
    let d = sim.dim();
    if d > HELD_KARP_MAX {
        return Err(Error::TooManyAxes { d, max: HELD_KARP_MAX });
    }
    if d < 2 {
        return Err(Error::InvalidArgument(format!("a tour needs at least 2 axes, got {d}")));
    }
    // axis 0 is the fixed start; bit b of a mask stands for axis b + 1
    let m = d - 1;
    let full = (1usize << m) - 1;
    let mut best = vec![f64::NEG_INFINITY; (1 << m) * m];
    let mut parent = vec![usize::MAX; (1 << m) * m];
    for j in 0..m {
        best[(1 << j) * m + j] = sim.get(0, j + 1);
    }
    for mask in 1..=full {
        for j in 0..m {
            let here = best[mask * m + j];
            if mask & (1 << j) == 0 || here == f64::NEG_INFINITY {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let value = here + sim.get(j + 1, k + 1);
                if value > best[next * m + k] {
                    best[next * m + k] = value;
                    parent[next * m + k] = j;
                }
            }
        }
    }
    let (last, _) = (0..m)
        .map(|j| (j, best[full * m + j] + sim.get(j + 1, 0)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

    let mut path = Vec::with_capacity(d);
    let (mut mask, mut j) = (full, last);
    while j != usize::MAX {
        path.push(j + 1);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        j = p;
    }
    path.push(0);
    path.reverse();
    let tau = canonical(path);
    let score = cycle_score(&tau, sim);
    Ok(TourOrder {
        tau,
        score,
        anchored: false,
    })
}

/// Rotate the cycle so its minimum-similarity edge joins the last axis back
/// to the first. Among equally weak edges the one giving the smallest first
/// axis wins. The direction of travel and the score are kept.
pub fn anchor_tour(tour: &TourOrder, v: &AxisEmbeddingSet) -> Result<TourOrder> {
    anchor_cycle(tour, &v.cosine_matrix()?)
}

pub fn anchor_cycle(tour: &TourOrder, sim: &CosineMatrix) -> Result<TourOrder> {
    let d = tour.len();
    check_permutation(&tour.tau, sim.dim())?;
    let mut best: Option<(f64, usize, usize)> = None; // (cos, first axis, rotation)
    for i in 0..d {
        let c = sim.get(tour.tau[i], tour.tau[(i + 1) % d]);
        let rotation = (i + 1) % d;
        let first = tour.tau[rotation];
        let better = match best {
            None => true,
            Some((bc, bf, _)) => match c.partial_cmp(&bc).unwrap_or(Ordering::Equal) {
                Ordering::Less => true,
                Ordering::Equal => first < bf,
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((c, first, rotation));
        }
    }
    let mut tau = tour.tau.clone();
    if let Some((_, _, rotation)) = best {
        tau.rotate_left(rotation);
    }
    Ok(TourOrder {
        tau,
        score: tour.score,
        anchored: true,
    })
}

/// Column `ℓ` of the result is column `tau[ℓ]` of `s`.
pub fn apply_tour(s: &EmbeddingMatrix, tour: &TourOrder) -> Result<EmbeddingMatrix> {
    if !tour.anchored {
        return Err(Error::TourNotAnchored);
    }
    permute_columns(s, &tour.tau)
}

pub fn permute_columns(s: &EmbeddingMatrix, order: &[usize]) -> Result<EmbeddingMatrix> {
    check_permutation(order, s.ncols())?;
    Ok(s.with_data(s.data().select(Axis(1), order))?
        .with_flags(s.is_centered(), s.is_normalized()))
}

/// The `m` top words of an axis (by normalized value), best first, with
/// URL/email/phone-shaped tokens masked.
pub fn top_words(s: &EmbeddingMatrix, axis: usize, m: usize) -> Result<Vec<String>> {
    if axis >= s.ncols() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    let normalized = normalize_rows(s)?;
    let top = top_k_indices(normalized.data().column(axis), m)?;
    Ok(top
        .into_iter()
        .map(|i| redact(s.vocab().word(i)).into_owned())
        .collect())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::embed_io::Vocabulary;

    fn random_unit_rows(d: usize, dim: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Array2::from_shape_simple_fn((d, dim), || {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        for mut r in m.outer_iter_mut() {
            let n = r.dot(&r).sqrt();
            r /= n;
        }
        m
    }

    fn brute_force_best(sim: &CosineMatrix) -> f64 {
        fn rec(path: &mut Vec<usize>, used: &mut Vec<bool>, sim: &CosineMatrix, best: &mut f64) {
            let d = sim.dim();
            if path.len() == d {
                *best = best.max(cycle_score(path, sim));
                return;
            }
            for c in 1..d {
                if !used[c] {
                    used[c] = true;
                    path.push(c);
                    rec(path, used, sim, best);
                    path.pop();
                    used[c] = false;
                }
            }
        }
        let d = sim.dim();
        let mut best = f64::NEG_INFINITY;
        let mut used = vec![false; d];
        used[0] = true;
        rec(&mut vec![0], &mut used, sim, &mut best);
        best
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(top_k_indices(array![0.9, 0.1, 0.5].view(), 2).unwrap(), vec![0, 2]);
        assert_eq!(top_k_indices(array![0.5, 0.5, 0.1].view(), 1).unwrap(), vec![0]);
        assert_eq!(top_k_indices(array![0.2, 0.7, 0.1].view(), 3).unwrap(), vec![1, 0, 2]);
        assert!(top_k_indices(array![0.2].view(), 2).is_err());
    }

    #[test]
    fn axis_embedding_examples() {
        // rows already unit norm
        let s = array![[1.0, 0.0], [0.6, 0.8], [0.0, 1.0], [0.8, -0.6]];
        let e = EmbeddingMatrix::from_array(s.clone()).unwrap();

        let k1 = axis_embeddings(&e, 1).unwrap();
        assert_eq!(k1.top_sets, vec![vec![0], vec![2]]);
        assert_eq!(k1.vectors.row(0).to_vec(), vec![1.0, 0.0]);

        // top-2 of axis 0: rows 0 and 3; of axis 1: rows 2 and 1
        let k2 = axis_embeddings(&e, 2).unwrap();
        assert_eq!(k2.top_sets, vec![vec![0, 3], vec![2, 1]]);
        assert_abs_diff_eq!(k2.vectors[[0, 0]], 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(k2.vectors[[0, 1]], -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(k2.vectors[[1, 0]], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(k2.vectors[[1, 1]], 0.9, epsilon = 1e-12);

        let all = axis_embeddings(&e, 4).unwrap();
        let mean = s.mean_axis(Axis(0)).unwrap();
        for row in all.vectors.outer_iter() {
            for (a, b) in row.iter().zip(mean.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn axis_embeddings_are_recomputable_means() {
        let s = random_unit_rows(40, 5, 1);
        let set = axis_embeddings(&EmbeddingMatrix::from_array(s.clone()).unwrap(), 7).unwrap();
        for (axis, top) in set.top_sets.iter().enumerate() {
            assert_eq!(top.len(), 7);
            let mut uniq = top.clone();
            uniq.sort();
            uniq.dedup();
            assert_eq!(uniq.len(), 7);
            let mut acc = Array1::<f64>::zeros(5);
            for &i in top {
                acc += &s.row(i);
            }
            acc /= 7.0;
            for (a, b) in acc.iter().zip(set.vectors.row(axis)) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tour_cost_examples() {
        let a = array![1.0, 2.0];
        assert_abs_diff_eq!(tour_cost(a.view(), a.view()).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tour_cost(array![1.0, 0.0].view(), array![0.0, 3.0].view()).unwrap(), 1.0);
        assert_abs_diff_eq!(tour_cost(a.view(), (-&a).view()).unwrap(), 2.0, epsilon = 1e-15);
        assert!(tour_cost(a.view(), array![0.0, 0.0].view()).is_err());
    }

    #[test]
    fn two_axis_tour() {
        let v = array![[1.0, 0.2], [0.3, 1.0]];
        let sim = CosineMatrix::from_rows(&v).unwrap();
        let t = solve_cycle(&sim, 0).unwrap();
        assert_eq!(t.tau, vec![0, 1]);
        assert_abs_diff_eq!(t.score, 2.0 * sim.get(0, 1), epsilon = 1e-15);
        let hk = held_karp_cycle(&sim).unwrap();
        assert_abs_diff_eq!(hk.score, t.score, epsilon = 1e-15);
    }

    #[test]
    fn three_axis_exact() {
        let v = random_unit_rows(3, 3, 2);
        let sim = CosineMatrix::from_rows(&v).unwrap();
        let hk = held_karp_cycle(&sim).unwrap();
        assert_abs_diff_eq!(hk.score, sim.get(0, 1) + sim.get(1, 2) + sim.get(2, 0), epsilon = 1e-12);
    }

    #[test]
    fn held_karp_matches_enumeration() {
        for seed in 0..10 {
            let d = 3 + (seed as usize % 6);
            let sim = CosineMatrix::from_rows(&random_unit_rows(d, d, 100 + seed)).unwrap();
            let hk = held_karp_cycle(&sim).unwrap();
            assert_abs_diff_eq!(hk.score, brute_force_best(&sim), epsilon = 1e-12);
            assert_abs_diff_eq!(hk.score, cycle_score(&hk.tau, &sim), epsilon = 1e-12);
        }
    }

    #[test]
    fn heuristic_matches_exact_at_six() {
        let sim = CosineMatrix::from_rows(&random_unit_rows(6, 6, 42)).unwrap();
        let h = solve_cycle(&sim, 7).unwrap();
        assert_abs_diff_eq!(h.score, brute_force_best(&sim), epsilon = 1e-12);
    }

    #[test]
    fn heuristic_never_beats_exact_at_eight() {
        let sim = CosineMatrix::from_rows(&random_unit_rows(8, 8, 8)).unwrap();
        let h = solve_cycle(&sim, 1).unwrap();
        let hk = held_karp_cycle(&sim).unwrap();
        assert!(hk.score >= h.score - 1e-12);
    }

    #[test]
    fn held_karp_bound() {
        let sim = CosineMatrix::from_rows(&random_unit_rows(16, 4, 0)).unwrap();
        assert!(matches!(held_karp_cycle(&sim), Err(Error::TooManyAxes { d: 16, .. })));
    }

    #[test]
    fn identical_vectors_score_d() {
        let v = Array2::from_elem((5, 3), 1.0);
        let sim = CosineMatrix::from_rows(&v).unwrap();
        let t = solve_cycle(&sim, 3).unwrap();
        assert_abs_diff_eq!(t.score, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cycle_score(&[4, 2, 0, 1, 3], &sim), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn heuristic_beats_random_permutations() {
        let sim = CosineMatrix::from_rows(&random_unit_rows(30, 10, 5)).unwrap();
        let t = solve_cycle(&sim, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut perm: Vec<usize> = (0..30).collect();
        for _ in 0..1000 {
            perm.shuffle(&mut rng);
            assert!(t.score >= cycle_score(&perm, &sim));
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let sim = CosineMatrix::from_rows(&random_unit_rows(40, 12, 6)).unwrap();
        assert_eq!(solve_cycle(&sim, 4).unwrap(), solve_cycle(&sim, 4).unwrap());
    }

    fn three_axis_sim() -> CosineMatrix {
        // c(1,2)=0.9, c(2,3)=0.8, c(3,1)=0.1 in 0-based labels
        CosineMatrix::from_values(3, vec![1.0, 0.9, 0.1, 0.9, 1.0, 0.8, 0.1, 0.8, 1.0]).unwrap()
    }

    #[test]
    fn anchoring_moves_weakest_edge_to_wrap() {
        let sim = three_axis_sim();
        // enumerate the three rotations of the cycle 0 → 1 → 2
        for tau in [vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]] {
            let t = TourOrder { score: cycle_score(&tau, &sim), tau, anchored: false };
            let a = anchor_cycle(&t, &sim).unwrap();
            assert_eq!(a.tau, vec![0, 1, 2]);
            assert!(a.anchored);
            assert_eq!(a.score, t.score);
        }
    }

    #[test]
    fn anchoring_ties_and_idempotence() {
        let sim = CosineMatrix::from_values(4, {
            let mut v = vec![0.5; 16];
            for i in 0..4 {
                v[i * 4 + i] = 1.0;
            }
            v
        })
        .unwrap();
        let t = TourOrder { tau: vec![2, 3, 1, 0], score: 2.0, anchored: false };
        let a = anchor_cycle(&t, &sim).unwrap();
        assert_eq!(a.tau, vec![0, 2, 3, 1]);
        assert_eq!(anchor_cycle(&a, &sim).unwrap(), a);
    }

    #[test]
    fn apply_tour_examples() {
        let s = EmbeddingMatrix::from_array(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let ident = TourOrder { tau: vec![0, 1], score: 0.0, anchored: true };
        assert_eq!(apply_tour(&s, &ident).unwrap().data(), s.data());
        let swap = TourOrder { tau: vec![1, 0], score: 0.0, anchored: true };
        assert_eq!(apply_tour(&s, &swap).unwrap().data(), &array![[2.0, 1.0], [4.0, 3.0]]);
        let loose = TourOrder { anchored: false, ..swap.clone() };
        assert!(matches!(apply_tour(&s, &loose), Err(Error::TourNotAnchored)));
        let short = TourOrder { tau: vec![0], score: 0.0, anchored: true };
        assert!(apply_tour(&s, &short).is_err());

        let big = random_unit_rows(6, 5, 3);
        let e = EmbeddingMatrix::from_array(big.clone()).unwrap();
        let tau = vec![3, 0, 4, 1, 2];
        let t = apply_tour(&e, &TourOrder { tau: tau.clone(), score: 0.0, anchored: true }).unwrap();
        for i in 0..6 {
            for (l, &src) in tau.iter().enumerate() {
                assert_eq!(t.data()[[i, l]], big[[i, src]]);
            }
        }
    }

    #[test]
    fn top_words_examples() {
        let vocab = Vocabulary::new(
            ["cat", "http://x.org", "dog", "emu"].iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        let data = array![[0.9, 0.1], [0.8, 0.1], [0.1, 0.9], [0.5, 0.5]];
        let e = EmbeddingMatrix::new(vocab, data).unwrap();
        assert_eq!(top_words(&e, 0, 1).unwrap(), vec!["cat"]);
        // normalized column 0: .994, .992, .110, .707
        assert_eq!(top_words(&e, 0, 3).unwrap(), vec!["cat", "***.org", "emu"]);
        assert!(top_words(&e, 0, 5).is_err());
    }

    proptest! {
        #[test]
        fn column_permutation_preserves_geometry(seed in 0u64..1000) {
            let m = random_unit_rows(5, 6, seed);
            let e = EmbeddingMatrix::from_array(m.clone()).unwrap();
            let mut tau: Vec<usize> = (0..6).collect();
            tau.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let t = apply_tour(&e, &TourOrder { tau, score: 0.0, anchored: true }).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let before = m.row(i).dot(&m.row(j));
                    let after = t.data().row(i).dot(&t.data().row(j));
                    prop_assert!((before - after).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn anchoring_keeps_edge_multiset(seed in 0u64..500) {
            let sim = CosineMatrix::from_rows(&random_unit_rows(7, 4, seed)).unwrap();
            let mut tau: Vec<usize> = (0..7).collect();
            tau.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 1));
            let t = TourOrder { score: cycle_score(&tau, &sim), tau, anchored: false };
            let a = anchor_cycle(&t, &sim).unwrap();
            let edges = |tau: &[usize]| {
                let mut e: Vec<f64> = (0..7).map(|i| sim.get(tau[i], tau[(i + 1) % 7])).collect();
                e.sort_by(f64::total_cmp);
                e
            };
            prop_assert_eq!(edges(&t.tau), edges(&a.tau));
            let wrap = sim.get(a.tau[6], a.tau[0]);
            prop_assert!(edges(&a.tau)[0] == wrap);
        }
    }
}
