//! `pipeline` and `report`: whole runs recorded in a manifest.

use std::path::{Path, PathBuf};

use axistour::continuity::Histogram;
use axistour::eval::EvalReport;
use axistour::pipeline::{self, Method, MethodOptions};
use axistour::viz::{self, ScatterFormat};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::{self, Datasets, EvalSettings, IntervalMetrics, MetricsSummary};
use crate::config::{RunConfig, RunOptions};
use crate::output::{csv_bytes, OutDir};
use crate::{CliError, Stage};

pub const MANIFEST: &str = "run_manifest.json";

#[derive(Args)]
pub struct PipelineArgs {
    /// JSON file with the same keys as the flags, or an earlier run_manifest.json; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    options: RunOptions,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IcaSummary {
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config: RunConfig,
    pub n: usize,
    pub d: usize,
    pub stages: Vec<String>,
    pub ica: Option<IcaSummary>,
    pub artifacts: Vec<Artifact>,
}

fn method_stage(method: Method) -> &'static str {
    match method {
        Method::AxisTour => "tour",
        Method::Tica9 | Method::Tica75 => "tica",
        _ => "order",
    }
}

pub fn pipeline(args: PipelineArgs) -> Result<(), CliError> {
    let from_file = match &args.config {
        Some(path) => RunOptions::from_file(path)?,
        None => RunOptions::default(),
    };
    let config = args.options.or(from_file).resolve()?;
    let intervals = commands::parse_intervals(&config.intervals)?;
    let data = Datasets::load(&config.analogy, &config.similarity, &config.categorization)?;

    let x = commands::load_input(&config.input, config.max_words, config.lowercase)?;
    let mut out = OutDir::create(&config.out)?;
    let mut stages = vec!["load"];

    let (z, whitening) = pipeline::whiten(&x).stage("whiten")?;
    stages.push("whiten");
    let d = z.ncols();
    for &p in &config.dims {
        if p < 1 || p > d {
            return Err(CliError::usage(format!("--dims entry {p} outside 1..={d}")));
        }
    }

    let ica = if config.method.needs_ica() {
        let r = pipeline::ica(&z, config.seed, config.ica_max_iter).stage("ica")?;
        commands::write_ica(&mut out, &r, &r.compose_with(&whitening))?;
        stages.push("ica");
        Some(r)
    } else {
        None
    };

    let opts = MethodOptions {
        k: config.k,
        seed: config.seed,
        tica_iterations: config.tica_iterations,
        tica_step: config.tica_step,
    };
    let order_stage = method_stage(config.method);
    let ordered = pipeline::run_method(config.method, &z, ica.as_ref(), &opts).stage(order_stage)?;
    stages.push(order_stage);
    if let Some(tour) = &ordered.tour {
        out.write("tour", "tour.txt", commands::tour_text(tour))?;
    }
    if let Some(model) = &ordered.tica {
        commands::write_tica(&mut out, model, &ordered.matrix)?;
    }
    out.csv(
        order_stage,
        "order.csv",
        &["position", "axis", "skewness"],
        ordered.order.iter().zip(&ordered.gamma).enumerate().map(|(pos, (axis, g))| [(pos + 1).to_string(), (axis + 1).to_string(), g.to_string()]),
    )?;
    out.matrix(order_stage, "ordered.bin", &ordered.matrix)?;
    commands::write_top_words(&mut out, &ordered.matrix, &ordered.order)?;

    let m = commands::compute_metrics(&ordered.matrix, config.k, &intervals, config.seed)?;
    commands::write_metrics(&mut out, &m)?;
    stages.push("metrics");

    let mut reduced_any = false;
    for &p in config.dims.iter().filter(|&&p| p < d) {
        let reduced = pipeline::reduce(&ordered, p, config.alpha, config.reduction).stage("reduce")?;
        out.matrix("reduce", &format!("reduced_p{p}.bin"), &reduced)?;
        reduced_any = true;
    }
    if reduced_any {
        stages.push("reduce");
    }

    if !data.is_empty() {
        let settings = EvalSettings {
            alpha: config.alpha,
            reduction: config.reduction,
            seed: config.seed,
            hierarchical: config.hierarchical,
        };
        let reports = commands::evaluate(&ordered, &config.dims, &data, &settings)?;
        commands::write_eval(&mut out, &reports)?;
        stages.push("eval");
    }

    if !intervals.is_empty() {
        for &interval in &intervals {
            let frame = viz::project_2d(&ordered.matrix, interval).stage("plot")?;
            let path = out.register(&format!("scatter_{}_{}.svg", interval.start + 1, interval.end));
            viz::emit_scatter(&frame, ordered.matrix.vocab(), ScatterFormat::Svg, path).stage("plot")?;
        }
        stages.push("plot");
    }

    let manifest = Manifest {
        tool: format!("axistour {}", env!("CARGO_PKG_VERSION")),
        n: x.nrows(),
        d,
        stages: stages.iter().map(|s| s.to_string()).collect(),
        ica: ica.as_ref().map(|r| IcaSummary { iterations: r.iterations_used, converged: r.converged }),
        artifacts: hash_artifacts(out.root(), out.files())?,
        config,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::data("manifest", e.to_string()))?;
    text.push('\n');
    let path = out.root().join(MANIFEST);
    std::fs::write(&path, text).map_err(|e| CliError::io("manifest", &path, e))?;
    println!(
        "pipeline: {} on {} words × {} dims, c_[d] = {:.4}; {} artifacts in {}",
        manifest.config.method,
        manifest.n,
        d,
        m.average_continuity,
        manifest.artifacts.len(),
        out.root().display()
    );
    Ok(())
}

fn sha256_file(path: &Path, stage: &'static str) -> Result<(u64, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(stage, path, e))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

fn hash_artifacts(root: &Path, files: &[String]) -> Result<Vec<Artifact>, CliError> {
    files
        .iter()
        .map(|f| {
            let (bytes, sha256) = sha256_file(&root.join(f), "manifest")?;
            Ok(Artifact { path: f.clone(), bytes, sha256 })
        })
        .collect()
}

#[derive(Args)]
pub struct ReportArgs {
    /// Output directory of a `pipeline` run
    run_dir: PathBuf,
    /// Where to write report.json and report.csv (default: the run directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Continuity {
    average_continuity: f64,
    variance: f64,
    wrap_cosine: f64,
    skewness_continuity_spearman: Option<f64>,
    baseline_mean: f64,
    baseline_variance: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    method: String,
    seed: u64,
    n: usize,
    d: usize,
    k: usize,
    continuity: Continuity,
    intervals: Vec<IntervalMetrics>,
    histogram: Histogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    tasks: Option<Vec<EvalReport>>,
}

fn read_manifest(run_dir: &Path) -> Result<Manifest, CliError> {
    let path = run_dir.join(MANIFEST);
    if !path.is_file() {
        return Err(CliError::data("report", format!("no {MANIFEST} in {}", run_dir.display())));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io("report", &path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::data("report", format!("corrupt manifest {}: {e}", path.display())))?;
    for a in &manifest.artifacts {
        let (_, sha) = sha256_file(&run_dir.join(&a.path), "report")?;
        if sha != a.sha256 {
            return Err(CliError::data("report", format!("{} does not match its recorded hash", a.path)));
        }
    }
    Ok(manifest)
}

fn read_json<T: serde::de::DeserializeOwned>(run_dir: &Path, manifest: &Manifest, name: &str) -> Result<Option<T>, CliError> {
    if !manifest.artifacts.iter().any(|a| a.path == name) {
        return Ok(None);
    }
    let path = run_dir.join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io("report", &path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| CliError::data("report", format!("{}: {e}", path.display())))
}

pub fn report(args: ReportArgs) -> Result<(), CliError> {
    let manifest = read_manifest(&args.run_dir)?;
    let m: MetricsSummary = read_json(&args.run_dir, &manifest, "metrics.json")?
        .ok_or_else(|| CliError::data("report", "manifest lists no metrics.json".into()))?;
    let tasks: Option<Vec<EvalReport>> = read_json(&args.run_dir, &manifest, "eval.json")?;

    let report = Report {
        method: manifest.config.method.to_string(),
        seed: manifest.config.seed,
        n: m.n,
        d: m.d,
        k: m.k,
        continuity: Continuity {
            average_continuity: m.average_continuity,
            variance: m.variance,
            wrap_cosine: m.wrap_cosine,
            skewness_continuity_spearman: m.skewness_continuity_spearman,
            baseline_mean: m.baseline_mean,
            baseline_variance: m.baseline_variance,
        },
        intervals: m.intervals,
        histogram: m.histogram,
        tasks,
    };

    let out = args.out.unwrap_or_else(|| args.run_dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| CliError::io("report", &out, e))?;
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CliError::data("report", e.to_string()))?;
    json.push('\n');
    let json_path = out.join("report.json");
    std::fs::write(&json_path, json).map_err(|e| CliError::io("report", &json_path, e))?;
    let csv_path = out.join("report.csv");
    let csv = csv_bytes(&["section", "name", "p", "value"], report_rows(&report)).map_err(|e| CliError::data("report", e.to_string()))?;
    std::fs::write(&csv_path, csv).map_err(|e| CliError::io("report", &csv_path, e))?;

    println!("report: {} c_[d] = {:.4}", report.method, report.continuity.average_continuity);
    for i in &report.intervals {
        println!("  [{}] c_I = {}  d_I = {}", i.interval, fmt4(i.c_i), fmt4(i.d_i));
    }
    match &report.tasks {
        Some(tasks) => {
            for t in tasks {
                println!("  {} {} p={}: {}", t.task, t.dataset, t.p, fmt4(t.score));
            }
        }
        None => println!("  no task evaluation in this run"),
    }
    Ok(())
}

fn fmt4(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.4}"))
}

fn report_rows(r: &Report) -> Vec<[String; 4]> {
    let s = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let c = &r.continuity;
    let mut rows: Vec<[String; 4]> = [
        ("c_[d]", Some(c.average_continuity)),
        ("variance", Some(c.variance)),
        ("wrap_cosine", Some(c.wrap_cosine)),
        ("skewness_continuity_spearman", c.skewness_continuity_spearman),
        ("baseline_mean", Some(c.baseline_mean)),
        ("baseline_variance", Some(c.baseline_variance)),
    ]
    .into_iter()
    .map(|(name, v)| ["continuity".into(), name.into(), String::new(), s(v)])
    .collect();
    for i in &r.intervals {
        rows.push(["interval".into(), format!("c_I[{}]", i.interval), String::new(), s(i.c_i)]);
        rows.push(["interval".into(), format!("d_I[{}]", i.interval), String::new(), s(i.d_i)]);
    }
    for t in r.tasks.iter().flatten() {
        rows.push(["task".into(), format!("{}/{}", t.task, t.dataset), t.p.to_string(), s(t.score)]);
    }
    let edges = r.histogram.bin_edges();
    for (b, count) in r.histogram.counts.iter().enumerate() {
        rows.push(["histogram".into(), format!("[{},{})", edges[b], edges[b + 1]), String::new(), count.to_string()]);
    }
    rows
}
