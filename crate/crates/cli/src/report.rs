//! Evaluation reports. Reports are deterministic: they embed the
//! resolved configuration and a content hash but never wall-clock data,
//! so re-running the same experiment reproduces them byte for byte.
//! Timing, when recorded, goes into a separate file.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Mean squared error of the prediction against the oracle grid.
    pub mse: f64,
    /// Mean absolute governing-equation residual on the evaluation grid.
    pub mean_abs_residual: f64,
    /// Convex-hull bounds of the predicted control points.
    pub hull_lo: f64,
    pub hull_hi: f64,
    /// Largest absolute violation of the pinned initial/boundary values.
    pub icbc_max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub command: String,
    pub seed: u64,
    pub cases: Vec<CaseMetrics>,
    pub mean_mse: f64,
    pub config: ExperimentConfig,
    /// SHA-256 over the report content with this field blanked.
    pub content_hash: String,
}

impl MetricsReport {
    pub fn new(
        command: &str,
        seed: u64,
        cases: Vec<CaseMetrics>,
        config: ExperimentConfig,
    ) -> Self {
        let mean_mse = if cases.is_empty() {
            0.0
        } else {
            cases.iter().map(|c| c.mse).sum::<f64>() / cases.len() as f64
        };
        let mut report = MetricsReport {
            command: command.into(),
            seed,
            cases,
            mean_mse,
            config,
            content_hash: String::new(),
        };
        report.content_hash = report.compute_hash();
        report
    }

    fn compute_hash(&self) -> String {
        let mut unhashed = self.clone();
        unhashed.content_hash = String::new();
        let body = toml::to_string_pretty(&unhashed).expect("report serializes");
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    pub fn verify_hash(&self) -> bool {
        self.content_hash == self.compute_hash()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Writes the per-epoch training loss as a two-column CSV.
pub fn write_loss_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (epoch, loss) in history.iter().enumerate() {
        let _ = writeln!(out, "{epoch},{loss:.17e}");
    }
    std::fs::write(path, out)?;
    Ok(())
}
