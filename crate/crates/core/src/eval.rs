//! Downstream benchmarks: analogy, word similarity and categorization.
//!
//! Items with out-of-vocabulary words are skipped; the fraction kept is
//! reported as `coverage` so results stay comparable across vocabularies.

use std::io::BufRead;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed_io::{normalize_rows, EmbeddingMatrix};
use crate::stats::{cosine, spearman};
use crate::{Error, Result};

const QUERY_CHUNK: usize = 256;
pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Default)]
pub struct AnalogyDataset {
    pub name: String,
    pub items: Vec<[String; 4]>,
}

#[derive(Debug, Clone, Default)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct CategorizationDataset {
    pub name: String,
    pub items: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub dataset: String,
    /// Accuracy, ρ or purity; `None` when nothing could be scored.
    pub score: Option<f64>,
    pub scored: usize,
    pub total: usize,
    pub coverage: f64,
    pub p: usize,
    pub method: String,
}

impl EvalReport {
    fn new(task: &str, dataset: &str, score: Option<f64>, scored: usize, total: usize, p: usize) -> Self {
        EvalReport {
            task: task.to_string(),
            dataset: dataset.to_string(),
            score,
            scored,
            total,
            coverage: if total == 0 { 0.0 } else { scored as f64 / total as f64 },
            p,
            method: String::new(),
        }
    }

    pub fn with_method(mut self, method: &str) -> Self {
        self.method = method.to_string();
        self
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    Ok(std::io::BufReader::new(std::fs::File::open(path).map_err(|e| Error::io(path, e))?))
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::io("<reader>", e))),
    })
}

/// Four whitespace-separated tokens per line; `:` lines start a section.
pub fn read_analogy<R: BufRead>(reader: R, name: &str) -> Result<AnalogyDataset> {
    let mut items = Vec::new();
    for line in lines(reader) {
        let (no, line) = line?;
        let line = line.trim();
        if line.starts_with(':') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::InconsistentDimension { line: no, expected: 4, found: toks.len() });
        }
        items.push([toks[0], toks[1], toks[2], toks[3]].map(str::to_string));
    }
    Ok(AnalogyDataset { name: name.to_string(), items })
}

/// `w1 w2 score` per line.
pub fn read_similarity<R: BufRead>(reader: R, name: &str) -> Result<SimilarityDataset> {
    let mut pairs = Vec::new();
    for line in lines(reader) {
        let (no, line) = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::InconsistentDimension { line: no, expected: 3, found: toks.len() });
        }
        let score: f64 = toks[2].parse().map_err(|_| Error::ParseNumber { line: no, literal: toks[2].to_string() })?;
        if !score.is_finite() {
            return Err(Error::NonFiniteEntry { line: no, literal: toks[2].to_string() });
        }
        pairs.push((toks[0].to_string(), toks[1].to_string(), score));
    }
    Ok(SimilarityDataset { name: name.to_string(), pairs })
}

/// `word<TAB>label` per line.
pub fn read_categorization<R: BufRead>(reader: R, name: &str) -> Result<CategorizationDataset> {
    let mut items = Vec::new();
    for line in lines(reader) {
        let (no, line) = line?;
        let (word, label) = line
            .split_once('\t')
            .ok_or(Error::InconsistentDimension { line: no, expected: 2, found: 1 })?;
        let (word, label) = (word.trim(), label.trim());
        if word.is_empty() || label.is_empty() {
            return Err(Error::InvalidArgument(format!("line {no}: empty word or label")));
        }
        items.push((word.to_string(), label.to_string()));
    }
    Ok(CategorizationDataset { name: name.to_string(), items })
}

pub fn load_analogy(path: impl AsRef<Path>) -> Result<AnalogyDataset> {
    let path = path.as_ref();
    read_analogy(open(path)?, &dataset_name(path))
}

pub fn load_similarity(path: impl AsRef<Path>) -> Result<SimilarityDataset> {
    let path = path.as_ref();
    read_similarity(open(path)?, &dataset_name(path))
}

pub fn load_categorization(path: impl AsRef<Path>) -> Result<CategorizationDataset> {
    let path = path.as_ref();
    read_categorization(open(path)?, &dataset_name(path))
}

/// Top-1 accuracy of `y₂ − y₁ + y₃ ≈ y₄` by cosine, excluding the three
/// query words from the candidates.
pub fn eval_analogy(e: &EmbeddingMatrix, data: &AnalogyDataset) -> Result<EvalReport> {
    if data.items.is_empty() {
        return Err(Error::Empty(format!("analogy dataset {}", data.name)));
    }
    let vocab = e.vocab();
    let resolved: Vec<[usize; 4]> = data
        .items
        .iter()
        .filter_map(|item| {
            let ids = item.iter().map(|w| vocab.get(w)).collect::<Option<Vec<_>>>()?;
            Some([ids[0], ids[1], ids[2], ids[3]])
        })
        .collect();
    let p = e.ncols();
    if resolved.is_empty() {
        return Ok(EvalReport::new("analogy", &data.name, None, 0, data.items.len(), p));
    }
    let unit = normalize_rows(e)?;
    let x = e.data();
    let mut correct = 0;
    for chunk in resolved.chunks(QUERY_CHUNK) {
        let mut q = Array2::zeros((chunk.len(), p));
        for (r, ids) in chunk.iter().enumerate() {
            let v = &x.row(ids[1]) - &x.row(ids[0]) + x.row(ids[2]);
            let norm = v.dot(&v).sqrt();
            if norm > 0.0 {
                q.row_mut(r).assign(&(v / norm));
            }
        }
        let sims = q.dot(&unit.data().t());
        for (r, ids) in chunk.iter().enumerate() {
            let row = sims.row(r);
            let mut best = usize::MAX;
            let mut best_sim = f64::NEG_INFINITY;
            for (cand, &s) in row.iter().enumerate() {
                if s > best_sim && !ids[..3].contains(&cand) {
                    best_sim = s;
                    best = cand;
                }
            }
            if best == ids[3] {
                correct += 1;
            }
        }
    }
    let acc = correct as f64 / resolved.len() as f64;
    Ok(EvalReport::new("analogy", &data.name, Some(acc), resolved.len(), data.items.len(), p))
}

/// Spearman correlation of model cosines with human scores.
pub fn eval_similarity(e: &EmbeddingMatrix, data: &SimilarityDataset) -> Result<EvalReport> {
    let mut model = Vec::new();
    let mut human = Vec::new();
    for (a, b, score) in &data.pairs {
        if let (Some(x), Some(y)) = (e.row(a), e.row(b)) {
            model.push(cosine(x, y).ok_or(Error::ZeroVector)?);
            human.push(*score);
        }
    }
    if model.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!(
            "{}: only {} in-vocabulary pairs",
            data.name,
            model.len()
        )));
    }
    let rho = spearman(&model, &human)?;
    Ok(EvalReport::new("similarity", &data.name, Some(rho), model.len(), data.pairs.len(), e.ncols()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Ward,
    Average,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clustering {
    KMeans,
    Hierarchical(Linkage, Distance),
}

impl Clustering {
    /// The hierarchical settings tried alongside k-means when requested.
    pub const HIERARCHICAL: [Clustering; 5] = [
        Clustering::Hierarchical(Linkage::Ward, Distance::Euclidean),
        Clustering::Hierarchical(Linkage::Average, Distance::Euclidean),
        Clustering::Hierarchical(Linkage::Complete, Distance::Euclidean),
        Clustering::Hierarchical(Linkage::Average, Distance::Cosine),
        Clustering::Hierarchical(Linkage::Complete, Distance::Cosine),
    ];
}

/// Purity of a k-means clustering with one cluster per class.
pub fn eval_categorization(e: &EmbeddingMatrix, data: &CategorizationDataset, seed: u64) -> Result<EvalReport> {
    eval_categorization_with(e, data, seed, &[Clustering::KMeans])
}

/// Best purity over the given clustering settings.
pub fn eval_categorization_with(
    e: &EmbeddingMatrix,
    data: &CategorizationDataset,
    seed: u64,
    methods: &[Clustering],
) -> Result<EvalReport> {
    let mut rows = Vec::new();
    let mut label_names: Vec<&str> = Vec::new();
    let mut labels = Vec::new();
    for (word, label) in &data.items {
        if let Some(i) = e.vocab().get(word) {
            rows.push(i);
            let id = match label_names.iter().position(|l| l == label) {
                Some(id) => id,
                None => {
                    label_names.push(label);
                    label_names.len() - 1
                }
            };
            labels.push(id);
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty(format!("{}: no in-vocabulary items", data.name)));
    }
    let k = label_names.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("{}: need at least 2 classes in vocabulary", data.name)));
    }
    let points = e.data().select(Axis(0), &rows);
    let mut best: Option<f64> = None;
    for &method in methods {
        let assign = match method {
            Clustering::KMeans => kmeans(points.view(), k, KMEANS_RESTARTS, seed)?.assignments,
            Clustering::Hierarchical(link, dist) => hierarchical(points.view(), k, link, dist)?,
        };
        let p = purity(&assign, &labels);
        best = Some(best.map_or(p, |b: f64| b.max(p)));
    }
    Ok(EvalReport::new("categorization", &data.name, best, rows.len(), data.items.len(), e.ncols()))
}

/// `Σ_clusters max-class-count / total`.
pub fn purity(assignments: &[usize], labels: &[usize]) -> f64 {
    let nc = assignments.iter().max().map_or(0, |m| m + 1);
    let nl = labels.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0usize; nc * nl];
    for (&a, &l) in assignments.iter().zip(labels) {
        table[a * nl + l] += 1;
    }
    let hit: usize = (0..nc).map(|c| table[c * nl..(c + 1) * nl].iter().copied().max().unwrap_or(0)).sum();
    hit as f64 / assignments.len() as f64
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding and Lloyd iterations; the lowest-inertia restart wins.
pub fn kmeans(points: ArrayView2<'_, f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} for {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, plus_plus(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points.outer_iter().map(|p| sq_dist(p, points.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.outer_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points.row(pick)));
        }
    }
    centroids
}

fn lloyd(points: ArrayView2<'_, f64>, mut centroids: Array2<f64>) -> KMeansResult {
    let (n, k) = (points.nrows(), centroids.nrows());
    let mut assignments = vec![usize::MAX; n];
    let mut inertia = 0.0;
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        inertia = 0.0;
        for (i, p) in points.outer_iter().enumerate() {
            let (mut bc, mut bd) = (0, f64::INFINITY);
            for (c, centroid) in centroids.outer_iter().enumerate() {
                let d = sq_dist(p, centroid);
                if d < bd {
                    bd = d;
                    bc = c;
                }
            }
            inertia += bd;
            if assignments[i] != bc {
                assignments[i] = bc;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (i, p) in points.outer_iter().enumerate() {
            let mut row = sums.row_mut(assignments[i]);
            row += &p;
            counts[assignments[i]] += 1;
        }
        for c in 0..k {
            // an emptied cluster keeps its old centroid
            if counts[c] > 0 {
                centroids.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            }
        }
    }
    KMeansResult { assignments, centroids, inertia }
}

/// Agglomerative clustering cut into `k` clusters. Labels are compacted to
/// `0..k` in order of first appearance.
pub fn hierarchical(points: ArrayView2<'_, f64>, k: usize, linkage: Linkage, distance: Distance) -> Result<Vec<usize>> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} for {n} points")));
    }
    if n == 1 {
        return Ok(vec![0]);
    }
    let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n - 1 {
        for j in i + 1..n {
            let (a, b) = (points.row(i), points.row(j));
            condensed.push(match distance {
                Distance::Euclidean => sq_dist(a, b).sqrt(),
                Distance::Cosine => 1.0 - cosine(a, b).unwrap_or(0.0),
            });
        }
    }
    let method = match linkage {
        Linkage::Ward => kodama::Method::Ward,
        Linkage::Average => kodama::Method::Average,
        Linkage::Complete => kodama::Method::Complete,
    };
    let dendrogram = kodama::linkage(&mut condensed, n, method);

    // union-find over the first n − k merges
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (step_no, step) in dendrogram.steps().iter().take(n - k).enumerate() {
        let merged = n + step_no;
        let a = find(&mut parent, step.cluster1);
        let b = find(&mut parent, step.cluster2);
        parent[a] = merged;
        parent[b] = merged;
    }
    let mut ids = std::collections::HashMap::new();
    Ok((0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            let next = ids.len();
            *ids.entry(root).or_insert(next)
        })
        .collect())
}
