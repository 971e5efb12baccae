//! Single-stage subcommands, and the pieces of them that `pipeline` reuses.

use std::path::{Path, PathBuf};

use axistour::continuity::{self, Histogram};
use axistour::dimred::{make_intervals, Interval, DEFAULT_ALPHA};
use axistour::embed_io::{load_any, normalize_rows, LoadOptions};
use axistour::eval::{self, AnalogyDataset, CategorizationDataset, Clustering, EvalReport, SimilarityDataset};
use axistour::ica::{lenient_skewness, orient_positive_skew, IcaResult};
use axistour::pipeline::{self, stage, stage_seed, Method, MethodOutput, Reduction, DEFAULT_K};
use axistour::redact::redact;
use axistour::tica::{higher_order_correlation, tica_fit, TicaModel, TicaParams, Topology};
use axistour::tour::{self, TourOrder};
use axistour::viz::{self, ScatterFormat};
use axistour::{EmbeddingMatrix, Error};
use clap::Args;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::resolve_data_path;
use crate::output::OutDir;
use crate::{CliError, Stage};

pub const BASELINE_TRIALS: usize = 10_000;
pub const TOP_WORDS_PER_AXIS: usize = 10;

#[derive(Args)]
pub struct InputArgs {
    /// Embedding file: GloVe/word2vec text, or a `.bin` cache written by this tool
    #[arg(long)]
    pub input: PathBuf,
    /// Keep only the first N words
    #[arg(long)]
    pub max_words: Option<usize>,
    /// Lowercase tokens while loading (first occurrence wins)
    #[arg(long)]
    pub lowercase: bool,
}

impl InputArgs {
    fn load(&self) -> Result<EmbeddingMatrix, CliError> {
        load_input(&self.input, self.max_words, self.lowercase)
    }
}

pub fn load_input(path: &Path, max_words: Option<usize>, lowercase: bool) -> Result<EmbeddingMatrix, CliError> {
    let path = resolve_data_path(path);
    load_any(&path, LoadOptions { max_words, lowercase }).map_err(|e| CliError::load(e).context(&path))
}

pub fn parse_method(method: &str, reduction: Option<&str>) -> Result<(Method, Reduction), CliError> {
    let method: Method = method.parse().map_err(CliError::usage_from)?;
    let reduction = match reduction {
        Some(r) => r.parse().map_err(CliError::usage_from)?,
        None => method.default_reduction(),
    };
    Ok((method, reduction))
}

pub fn parse_intervals(specs: &[String]) -> Result<Vec<Interval>, CliError> {
    specs.iter().map(|s| s.parse().map_err(CliError::usage_from)).collect()
}

/// `a:b`, 1-based inclusive, as accepted on the command line.
pub fn interval_key(i: Interval) -> String {
    format!("{}:{}", i.start + 1, i.end)
}

// ---- ica ----

#[derive(Args)]
pub struct IcaArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory
    #[arg(long, default_value = "ica-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

pub fn ica(args: IcaArgs) -> Result<(), CliError> {
    let x = args.input.load()?;
    let (z, whitening) = pipeline::whiten(&x).stage("whiten")?;
    let r = pipeline::ica(&z, args.seed, args.max_iter).stage("ica")?;
    let mut out = OutDir::create(&args.out)?;
    out.matrix("ica", "sources.bin", &r.sources)?;
    write_ica(&mut out, &r, &r.compose_with(&whitening))?;
    println!("ica: n = {}, d = {}, {} iterations, converged = {}", x.nrows(), x.ncols(), r.iterations_used, r.converged);
    Ok(())
}

/// `unmixing.txt` (`S = X_centered · B`) and `skewness.csv`.
pub fn write_ica(out: &mut OutDir, r: &IcaResult, unmixing: &Array2<f64>) -> Result<(), CliError> {
    if !r.converged {
        eprintln!("warning: FastICA stopped after {} iterations without converging", r.iterations_used);
    }
    out.plain("ica", "unmixing.txt", unmixing)?;
    out.csv(
        "ica",
        "skewness.csv",
        &["axis", "skewness"],
        r.skewness.iter().enumerate().map(|(i, g)| [(i + 1).to_string(), g.to_string()]),
    )
}

// ---- tour ----

#[derive(Args)]
pub struct TourArgs {
    /// ICA sources, e.g. `sources.bin` from `ica`
    #[command(flatten)]
    input: InputArgs,
    /// Top-k words per axis embedding
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solve exactly with Held-Karp (at most 15 axes)
    #[arg(long)]
    exact: bool,
    /// Output directory
    #[arg(long, default_value = "tour-out")]
    out: PathBuf,
}

pub fn tour(args: TourArgs) -> Result<(), CliError> {
    let s = args.input.load()?;
    let v = tour::axis_embeddings(&s, args.k.min(s.nrows())).stage("tour")?;
    let raw = if args.exact {
        tour::held_karp_exact(&v)
    } else {
        tour::solve_axis_tour(&v, stage_seed(args.seed, stage::TOUR))
    }
    .stage("tour")?;
    let order = tour::anchor_tour(&raw, &v).stage("tour")?;
    let toured = tour::apply_tour(&s, &order).stage("tour")?;
    let mut out = OutDir::create(&args.out)?;
    out.write("tour", "tour.txt", tour_text(&order))?;
    out.matrix("tour", "toured.bin", &toured)?;
    write_top_words(&mut out, &toured, &order.tau)?;
    println!("tour: d = {}, score = {:.6}, mean cosine = {:.6}", order.len(), order.score, order.score / order.len() as f64);
    Ok(())
}

/// `tau:` (1-based axes), `score:` and `anchored:` lines.
pub fn tour_text(t: &TourOrder) -> String {
    let tau: Vec<String> = t.tau.iter().map(|i| (i + 1).to_string()).collect();
    format!("tau: {}\nscore: {}\nanchored: {}\n", tau.join(" "), t.score, t.anchored)
}

/// `position,axis,words`: the top words of every column of an ordered
/// matrix; `axis` is the 1-based source axis it came from.
pub fn write_top_words(out: &mut OutDir, ordered: &EmbeddingMatrix, source: &[usize]) -> Result<(), CliError> {
    let normalized = normalize_rows(ordered).stage("tour")?;
    let m = TOP_WORDS_PER_AXIS.min(ordered.nrows());
    let mut rows = Vec::with_capacity(ordered.ncols());
    for (pos, &axis) in source.iter().enumerate() {
        let top = tour::top_k_indices(normalized.data().column(pos), m).stage("tour")?;
        let words: Vec<String> = top.iter().map(|&i| redact(ordered.vocab().word(i)).into_owned()).collect();
        rows.push([(pos + 1).to_string(), (axis + 1).to_string(), words.join(" ")]);
    }
    out.csv("tour", "top_words.csv", &["position", "axis", "words"], rows)
}

// ---- reduce ----

#[derive(Args)]
pub struct ReduceArgs {
    /// An ordered matrix, e.g. `toured.bin`
    #[command(flatten)]
    input: InputArgs,
    /// Target dimensions, e.g. `2,10,50`
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Skewness exponent of the projection weights
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Ordering that produced the input: axistour, skewsort, randorder, pca, tica9 or tica75
    #[arg(long, default_value = "axistour")]
    method: String,
    /// prefix or projection (default depends on the method)
    #[arg(long)]
    reduction: Option<String>,
    /// Output directory
    #[arg(long, default_value = "reduce-out")]
    out: PathBuf,
}

pub fn reduce(args: ReduceArgs) -> Result<(), CliError> {
    let (method, reduction) = parse_method(&args.method, args.reduction.as_deref())?;
    let ordered = as_ordered(method, args.input.load()?);
    let mut out = OutDir::create(&args.out)?;
    for &p in &args.dims {
        let reduced = pipeline::reduce(&ordered, p, args.alpha, reduction).stage("reduce")?;
        out.matrix("reduce", &format!("reduced_p{p}.bin"), &reduced)?;
    }
    println!("reduce: wrote {} matrices to {}", args.dims.len(), out.root().display());
    Ok(())
}

/// Treats a loaded matrix as the already ordered output of `method`, with
/// the skewness of its own columns.
fn as_ordered(method: Method, t: EmbeddingMatrix) -> MethodOutput {
    let gamma = lenient_skewness(t.data());
    MethodOutput { method, order: (0..t.ncols()).collect(), matrix: t, gamma, tour: None, tica: None }
}

// ---- metrics ----

#[derive(Args)]
pub struct MetricsArgs {
    /// An ordered matrix, e.g. `toured.bin`
    #[command(flatten)]
    input: InputArgs,
    /// Top-k words per axis embedding
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Axis interval `a:b` (1-based, inclusive); repeatable. Default: blocks of about 10 axes
    #[arg(long = "interval")]
    intervals: Vec<String>,
    /// Seed of the random-vector cosine baseline
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, default_value = "metrics-out")]
    out: PathBuf,
}

pub fn metrics(args: MetricsArgs) -> Result<(), CliError> {
    let intervals = parse_intervals(&args.intervals)?;
    let t = args.input.load()?;
    let m = compute_metrics(&t, args.k, &intervals, args.seed)?;
    let mut out = OutDir::create(&args.out)?;
    write_metrics(&mut out, &m)?;
    println!("metrics: c_[d] = {:.6} over {} axes", m.average_continuity, m.d);
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub interval: String,
    /// Mean adjacent cosine inside the interval; needs two axes.
    pub c_i: Option<f64>,
    /// Mean distance of the shown words from the origin; none when nothing is shown.
    pub d_i: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// `c_[d]`, wrap edge included.
    pub average_continuity: f64,
    pub variance: f64,
    pub wrap_cosine: f64,
    pub skewness_continuity_spearman: Option<f64>,
    pub baseline_mean: f64,
    pub baseline_variance: f64,
    pub intervals: Vec<IntervalMetrics>,
    pub adjacent_cosines: Vec<f64>,
    pub histogram: Histogram,
}

/// Intervals of about ten axes covering `0..d`.
fn default_intervals(d: usize) -> Vec<Interval> {
    make_intervals(d, (d / 10).max(1)).map(|p| p.intervals).unwrap_or_default()
}

/// Metrics of a matrix whose columns are already in order.
pub fn compute_metrics(t: &EmbeddingMatrix, k: usize, intervals: &[Interval], seed: u64) -> Result<MetricsSummary, CliError> {
    let d = t.ncols();
    let k = k.min(t.nrows());
    let t_hat = normalize_rows(t).stage("metrics")?;
    let v = tour::axis_embeddings(t, k).stage("metrics")?;
    let order: Vec<usize> = (0..d).collect();
    let report = continuity::continuity_report(&v, &order).stage("metrics")?;
    let gamma = lenient_skewness(t.data());
    let rho = match continuity::skewness_continuity_correlation(&v, &order, gamma.view()) {
        Ok(rho) => Some(rho),
        Err(Error::UndefinedCorrelation(_) | Error::InvalidArgument(_)) => None,
        Err(e) => return Err(CliError::at("metrics", e)),
    };
    let (baseline_mean, baseline_variance) =
        continuity::random_baseline_cosine_stats(d, BASELINE_TRIALS, stage_seed(seed, stage::BASELINE)).stage("metrics")?;

    let intervals = if intervals.is_empty() { default_intervals(d) } else { intervals.to_vec() };
    let mut per_interval = Vec::with_capacity(intervals.len());
    for interval in intervals {
        if interval.end > d {
            return Err(CliError::usage(format!("interval {} exceeds the {d} axes", interval_key(interval))));
        }
        let c_i = if interval.len() >= 2 {
            Some(continuity::interval_continuity(&v, &order, interval).stage("metrics")?)
        } else {
            None
        };
        let frame = viz::project_2d(&t_hat, interval).stage("metrics")?;
        let d_i = match continuity::scatter_quality(&frame) {
            Ok(q) => Some(q),
            Err(Error::EmptyShowSet) => None,
            Err(e) => return Err(CliError::at("metrics", e)),
        };
        per_interval.push(IntervalMetrics { interval: interval_key(interval), c_i, d_i });
    }

    Ok(MetricsSummary {
        n: t.nrows(),
        d,
        k,
        average_continuity: report.mean,
        variance: report.variance,
        wrap_cosine: report.wrap_cosine,
        skewness_continuity_spearman: rho,
        baseline_mean,
        baseline_variance,
        intervals: per_interval,
        adjacent_cosines: report.adjacent_cosines,
        histogram: report.histogram,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `metrics.csv` (`metric,value`), `metrics.json` and `histogram.csv`.
pub fn write_metrics(out: &mut OutDir, m: &MetricsSummary) -> Result<(), CliError> {
    let mut rows: Vec<[String; 2]> = vec![
        ["n".into(), m.n.to_string()],
        ["d".into(), m.d.to_string()],
        ["k".into(), m.k.to_string()],
        ["c_[d]".into(), m.average_continuity.to_string()],
        ["variance".into(), m.variance.to_string()],
        ["wrap_cosine".into(), m.wrap_cosine.to_string()],
        ["skewness_continuity_spearman".into(), opt(m.skewness_continuity_spearman)],
        ["baseline_mean".into(), m.baseline_mean.to_string()],
        ["baseline_variance".into(), m.baseline_variance.to_string()],
        ["histogram_below".into(), m.histogram.below.to_string()],
        ["histogram_above".into(), m.histogram.above.to_string()],
    ];
    for i in &m.intervals {
        rows.push([format!("c_I[{}]", i.interval), opt(i.c_i)]);
        rows.push([format!("d_I[{}]", i.interval), opt(i.d_i)]);
    }
    out.csv("metrics", "metrics.csv", &["metric", "value"], rows)?;
    out.json("metrics", "metrics.json", m)?;
    let edges = m.histogram.bin_edges();
    out.csv(
        "metrics",
        "histogram.csv",
        &["bin_lo", "bin_hi", "count"],
        m.histogram.counts.iter().enumerate().map(|(b, c)| [edges[b].to_string(), edges[b + 1].to_string(), c.to_string()]),
    )
}

// ---- eval ----

#[derive(Args)]
pub struct EvalArgs {
    /// Embedding to score; with --dims it is reduced as an ordered matrix first
    #[command(flatten)]
    input: InputArgs,
    /// Analogy dataset (`a b c d` per line); repeatable
    #[arg(long)]
    analogy: Vec<PathBuf>,
    /// Word-similarity dataset (`w1 w2 score` per line); repeatable
    #[arg(long)]
    similarity: Vec<PathBuf>,
    /// Categorization dataset (`word<TAB>category` per line); repeatable
    #[arg(long)]
    categorization: Vec<PathBuf>,
    /// Dimensions to sweep, e.g. `2,10,50`. Default: the input as is
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    /// Skewness exponent of the projection weights
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Ordering that produced the input: axistour, skewsort, randorder, pca, tica9 or tica75
    #[arg(long, default_value = "axistour")]
    method: String,
    /// prefix or projection (default depends on the method)
    #[arg(long)]
    reduction: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also try hierarchical clustering for categorization (best purity wins)
    #[arg(long)]
    hierarchical: bool,
    /// Output directory
    #[arg(long, default_value = "eval-out")]
    out: PathBuf,
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let (method, reduction) = parse_method(&args.method, args.reduction.as_deref())?;
    let data = Datasets::load(&args.analogy, &args.similarity, &args.categorization)?;
    if data.is_empty() {
        return Err(CliError::usage("no dataset given (--analogy, --similarity or --categorization)".into()));
    }
    let ordered = as_ordered(method, args.input.load()?);
    let settings = EvalSettings { alpha: args.alpha, reduction, seed: args.seed, hierarchical: args.hierarchical };
    let reports = evaluate(&ordered, &args.dims, &data, &settings)?;
    let mut out = OutDir::create(&args.out)?;
    write_eval(&mut out, &reports)?;
    for r in &reports {
        println!("{} {} p={}: {}", r.task, r.dataset, r.p, r.score.map_or("n/a".into(), |s| format!("{s:.4}")));
    }
    Ok(())
}

#[derive(Debug, Default)]
pub struct Datasets {
    pub analogy: Vec<AnalogyDataset>,
    pub similarity: Vec<SimilarityDataset>,
    pub categorization: Vec<CategorizationDataset>,
}

impl Datasets {
    pub fn load(analogy: &[PathBuf], similarity: &[PathBuf], categorization: &[PathBuf]) -> Result<Self, CliError> {
        fn each<T>(paths: &[PathBuf], read: fn(&Path) -> axistour::Result<T>) -> Result<Vec<T>, CliError> {
            paths
                .iter()
                .map(|p| {
                    let path = resolve_data_path(p);
                    read(&path).map_err(|e| CliError::load(e).context(&path))
                })
                .collect()
        }
        Ok(Datasets {
            analogy: each(analogy, |p| eval::load_analogy(p))?,
            similarity: each(similarity, |p| eval::load_similarity(p))?,
            categorization: each(categorization, |p| eval::load_categorization(p))?,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.analogy.is_empty() && self.similarity.is_empty() && self.categorization.is_empty()
    }
}

pub struct EvalSettings {
    pub alpha: f64,
    pub reduction: Reduction,
    pub seed: u64,
    pub hierarchical: bool,
}

/// Scores of every dataset at every `p` (the full dimension when `dims` is
/// empty). A dataset with too little vocabulary coverage gets an empty score
/// instead of failing the run.
pub fn evaluate(ordered: &MethodOutput, dims: &[usize], data: &Datasets, settings: &EvalSettings) -> Result<Vec<EvalReport>, CliError> {
    let dims = if dims.is_empty() { vec![ordered.matrix.ncols()] } else { dims.to_vec() };
    let mut clusterings = vec![Clustering::KMeans];
    if settings.hierarchical {
        clusterings.extend(Clustering::HIERARCHICAL);
    }
    let method = ordered.method.as_str();
    let seed = stage_seed(settings.seed, stage::EVAL);
    let mut reports = Vec::new();
    for p in dims {
        let e = pipeline::reduce(ordered, p, settings.alpha, settings.reduction).stage("reduce")?;
        let mut push = |task: &str, name: &str, total: usize, result: axistour::Result<EvalReport>| -> Result<(), CliError> {
            let report = match result {
                Ok(r) => r,
                Err(err @ (Error::Empty(_) | Error::UndefinedCorrelation(_) | Error::InvalidArgument(_))) => {
                    eprintln!("warning: {task} {name} at p = {p}: {err}");
                    EvalReport {
                        task: task.into(),
                        dataset: name.into(),
                        score: None,
                        scored: 0,
                        total,
                        coverage: 0.0,
                        p,
                        method: String::new(),
                    }
                }
                Err(err) => return Err(CliError::at("eval", err)),
            };
            reports.push(report.with_method(method));
            Ok(())
        };
        for a in &data.analogy {
            push("analogy", &a.name, a.items.len(), eval::eval_analogy(&e, a))?;
        }
        for s in &data.similarity {
            push("similarity", &s.name, s.pairs.len(), eval::eval_similarity(&e, s))?;
        }
        for c in &data.categorization {
            push("categorization", &c.name, c.items.len(), eval::eval_categorization_with(&e, c, seed, &clusterings))?;
        }
    }
    Ok(reports)
}

/// `eval.csv` and `eval.json`.
pub fn write_eval(out: &mut OutDir, reports: &[EvalReport]) -> Result<(), CliError> {
    out.csv(
        "eval",
        "eval.csv",
        &["task", "dataset", "method", "p", "score", "scored", "total", "coverage"],
        reports.iter().map(|r| {
            [
                r.task.clone(),
                r.dataset.clone(),
                r.method.clone(),
                r.p.to_string(),
                opt(r.score),
                r.scored.to_string(),
                r.total.to_string(),
                r.coverage.to_string(),
            ]
        }),
    )?;
    out.json("eval", "eval.json", &reports)
}

// ---- plot ----

#[derive(Args)]
#[command(after_help = "Every word on the upper half-plane is a dot of radius 1.5 at opacity 0.35, \
coloured by its strongest axis in the interval (at most 20000 dots, evenly subsampled). \
The top 5 words of each axis that land on the upper half get a radius-3 ringed marker and a label. \
The unit semicircle spans a 900×500 canvas with a 50 px margin.")]
pub struct PlotArgs {
    /// An ordered matrix, e.g. `toured.bin`
    #[command(flatten)]
    input: InputArgs,
    /// Axis interval `a:b` (1-based, inclusive)
    #[arg(long)]
    interval: String,
    /// svg or csv; default from the extension of --out
    #[arg(long)]
    format: Option<String>,
    /// Output file
    #[arg(long, default_value = "scatter.svg")]
    out: PathBuf,
}

pub fn plot(args: PlotArgs) -> Result<(), CliError> {
    let interval: Interval = args.interval.parse().map_err(CliError::usage_from)?;
    let format: ScatterFormat = match args.format.as_deref() {
        Some(f) => f.parse().map_err(CliError::usage_from)?,
        None if args.out.extension().is_some_and(|e| e == "csv") => ScatterFormat::Csv,
        None => ScatterFormat::Svg,
    };
    let t = args.input.load()?;
    if interval.end > t.ncols() {
        return Err(CliError::usage(format!("interval {} exceeds the {} axes", interval_key(interval), t.ncols())));
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io("plot", dir, e))?;
    }
    let frame = viz::project_2d(&t, interval).stage("plot")?;
    viz::emit_scatter(&frame, t.vocab(), format, &args.out).stage("plot")?;
    match continuity::scatter_quality(&frame) {
        Ok(q) => println!("plot: interval {interval}, d_I = {q:.4}, {} words shown", frame.show.len()),
        Err(_) => println!("plot: interval {interval}, no top words on the upper half"),
    }
    Ok(())
}

// ---- tica ----

#[derive(Args)]
pub struct TicaArgs {
    /// Raw embeddings; they are centered and whitened first
    #[command(flatten)]
    input: InputArgs,
    /// Neighbourhood width (clamped to the number of axes)
    #[arg(long, default_value_t = 9)]
    width: usize,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    /// Initial gradient step, decayed by 0.999 every 100 iterations
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wrap the neighbourhood around the ends of the axis range
    #[arg(long)]
    cyclic: bool,
    /// Self-convolutions of the rectangle kernel
    #[arg(long, default_value_t = 2)]
    self_convolutions: usize,
    /// Output directory
    #[arg(long, default_value = "tica-out")]
    out: PathBuf,
}

pub fn tica(args: TicaArgs) -> Result<(), CliError> {
    let x = args.input.load()?;
    let (z, _) = pipeline::whiten(&x).stage("whiten")?;
    let params = TicaParams {
        width: args.width.min(z.ncols()),
        iterations: args.iterations,
        step: args.step,
        seed: stage_seed(args.seed, stage::TICA),
        topology: Topology { cyclic: args.cyclic, self_convolutions: args.self_convolutions },
        ..TicaParams::default()
    };
    if params.width < args.width {
        eprintln!("warning: width {} clamped to {} axes", args.width, params.width);
    }
    let model = tica_fit(&z, &params).stage("tica")?;
    let (sources, _) = orient_positive_skew(&model.sources(&z).stage("tica")?);
    let mut out = OutDir::create(&args.out)?;
    out.matrix("tica", "tica_sources.bin", &sources)?;
    write_tica(&mut out, &model, &sources)?;
    println!(
        "tica: width {}, likelihood {:.6} → {:.6}",
        params.width,
        model.likelihood_trace.first().copied().unwrap_or(f64::NAN),
        model.likelihood_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

/// `tica_w.txt`, `likelihood.csv` and `higher_order.csv`.
pub fn write_tica(out: &mut OutDir, model: &TicaModel, sources: &EmbeddingMatrix) -> Result<(), CliError> {
    out.plain("tica", "tica_w.txt", &model.w)?;
    out.csv(
        "tica",
        "likelihood.csv",
        &["iteration", "likelihood", "orthonormality"],
        model.likelihood_trace.iter().enumerate().map(|(i, l)| {
            let orth = if i == 0 { String::new() } else { model.orthonormality_trace[i - 1].to_string() };
            [i.to_string(), l.to_string(), orth]
        }),
    )?;
    let order: Vec<usize> = (0..sources.ncols()).collect();
    let corr = higher_order_correlation(sources.data(), &order).stage("tica")?;
    out.csv(
        "tica",
        "higher_order.csv",
        &["left", "right", "energy_covariance"],
        corr.iter().enumerate().map(|(i, c)| [(i + 1).to_string(), (i + 2).to_string(), c.to_string()]),
    )
}
