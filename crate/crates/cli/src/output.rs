//! Writing artifacts into an output directory while keeping a list of them.

use std::path::{Path, PathBuf};

use axistour::embed_io::{save_binary, save_matrix_text};
use axistour::EmbeddingMatrix;
use ndarray::Array2;
use serde::Serialize;

use crate::{CliError, Stage};

pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io("output", root, e))?;
        Ok(OutDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Names written so far, in order.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Adds `name` to the list and returns its full path.
    pub fn register(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn write(&mut self, stage: &'static str, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.register(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(stage, &path, e))
    }

    pub fn matrix(&mut self, stage: &'static str, name: &str, e: &EmbeddingMatrix) -> Result<(), CliError> {
        let path = self.register(name);
        save_binary(e, path).stage(stage)
    }

    pub fn plain(&mut self, stage: &'static str, name: &str, m: &Array2<f64>) -> Result<(), CliError> {
        let path = self.register(name);
        save_matrix_text(m, path).stage(stage)
    }

    pub fn json(&mut self, stage: &'static str, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(stage, e.to_string()))?;
        text.push('\n');
        self.write(stage, name, text)
    }

    pub fn csv<R, I>(&mut self, stage: &'static str, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator,
        I::Item: AsRef<[u8]>,
    {
        self.write(stage, name, csv_bytes(header, rows).map_err(|e| CliError::data(stage, e.to_string()))?)
    }
}

pub fn csv_bytes<R, I>(header: &[&str], rows: R) -> Result<Vec<u8>, csv::Error>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator,
    I::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}
