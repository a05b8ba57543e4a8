//! Machine-readable run records. A manifest captures everything needed to
//! reproduce a run's outputs byte for byte: inputs, variant, the full
//! solver configuration, and the output paths. Timings are informational
//! and the only fields expected to differ between identical runs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use layersplit::pipeline::PipelineSpec;
use serde::Serialize;

pub const DETERMINISM_NOTE: &str =
    "outputs depend only on the inputs and this configuration; runs are \
     bit-identical at any thread count and need no seed";

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub spec: Option<PipelineSpec>,
    /// Present for synthesize runs instead of a solver spec.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality: Option<u8>,
    pub determinism: String,
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock milliseconds per stage; varies run to run.
    pub timings_ms: BTreeMap<String, u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_residual: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            spec: None,
            quality: None,
            determinism: DETERMINISM_NOTE.to_string(),
            outputs: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
            iterations: None,
            converged: None,
            final_residual: None,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) {
        self.inputs.insert(role.to_string(), path.display().to_string());
    }

    pub fn output(&mut self, role: &str, path: &Path) {
        self.outputs.insert(role.to_string(), path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

/// Metrics payload for --metrics-json and the metrics subcommand.
#[derive(Serialize)]
pub struct MetricsJson {
    pub ssim: f64,
    pub gc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_residual: Option<f64>,
}

/// One sweep table row.
#[derive(Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub ssim: f64,
    pub gc: f64,
    pub iterations: usize,
}
