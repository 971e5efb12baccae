//! `axistour`: one subcommand per stage, plus `pipeline`, which runs every
//! stage and records a manifest, and `report`, which summarizes a finished run.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

mod commands;
mod config;
mod output;
mod run;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "axistour", version, about = "Order the ICA axes of word embeddings by semantic continuity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Center, whiten and run FastICA; writes skew-oriented sources
    Ica(commands::IcaArgs),
    /// Order the axes of an ICA source matrix by a closed axis tour
    Tour(commands::TourArgs),
    /// Merge consecutive axes down to p dimensions
    Reduce(commands::ReduceArgs),
    /// Continuity and scatterplot metrics of an already ordered matrix
    Metrics(commands::MetricsArgs),
    /// Analogy, word-similarity and categorization scores
    Eval(commands::EvalArgs),
    /// Semicircle scatterplot of one axis interval
    Plot(commands::PlotArgs),
    /// Topographic ICA with a 1-D neighbourhood
    Tica(commands::TicaArgs),
    /// Every stage end to end, with a manifest of all artifacts
    Pipeline(run::PipelineArgs),
    /// Consolidate the metrics and task scores of a pipeline run
    Report(run::ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage = 1,
    Data = 2,
    Numeric = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub stage: Option<&'static str>,
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        CliError { stage: None, kind: Kind::Usage, message }
    }

    pub fn usage_from(e: axistour::Error) -> Self {
        Self::usage(e.to_string())
    }

    pub fn load(e: axistour::Error) -> Self {
        Self::at("load", e)
    }

    pub fn at(stage: &'static str, e: axistour::Error) -> Self {
        CliError { stage: Some(stage), kind: classify(&e), message: e.to_string() }
    }

    pub fn data(stage: &'static str, message: String) -> Self {
        CliError { stage: Some(stage), kind: Kind::Data, message }
    }

    /// Prefixes the message with the file it concerns, unless it already names it.
    pub fn context(mut self, path: &Path) -> Self {
        let shown = path.display().to_string();
        if !self.message.contains(&shown) {
            self.message = format!("{shown}: {}", self.message);
        }
        self
    }

    pub fn io(stage: &'static str, path: &Path, e: std::io::Error) -> Self {
        Self::data(stage, format!("{}: {e}", path.display()))
    }
}

fn classify(e: &axistour::Error) -> Kind {
    use axistour::Error as E;
    match e {
        E::InvalidArgument(_) | E::TooManyAxes { .. } => Kind::Usage,
        E::RankDeficient { .. }
        | E::NotWhitened { .. }
        | E::DegenerateColumn { .. }
        | E::TourNotAnchored
        | E::ZeroVector
        | E::UndefinedCorrelation(_)
        | E::Numeric(_) => Kind::Numeric,
        _ => Kind::Data,
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(stage) => write!(f, "error in stage {stage}: {}", self.message),
            None => write!(f, "error: {}", self.message),
        }
    }
}

/// Tags a core error with the stage it came from.
pub trait Stage<T> {
    fn stage(self, name: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for axistour::Result<T> {
    fn stage(self, name: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::at(name, e))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Kind::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Ica(args) => commands::ica(args),
        Command::Tour(args) => commands::tour(args),
        Command::Reduce(args) => commands::reduce(args),
        Command::Metrics(args) => commands::metrics(args),
        Command::Eval(args) => commands::eval(args),
        Command::Plot(args) => commands::plot(args),
        Command::Tica(args) => commands::tica(args),
        Command::Pipeline(args) => run::pipeline(args),
        Command::Report(args) => run::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind as u8)
        }
    }
}
