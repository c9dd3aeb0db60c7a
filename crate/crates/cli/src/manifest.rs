//! The run manifest: everything needed to reproduce a run bit for bit.

use std::path::{Path, PathBuf};

use asrel::core_builder::GrowStrategy;
use asrel::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathFiles {
    #[serde(default)]
    pub bgp: Vec<PathBuf>,
    #[serde(default)]
    pub trace: Vec<PathBuf>,
}

impl PathFiles {
    pub fn is_empty(&self) -> bool {
        self.bgp.is_empty() && self.trace.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub paths: PathFiles,
    pub siblings: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    /// Measurement windows for window-stability; `paths` is unused there.
    #[serde(default)]
    pub windows: Vec<PathFiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum CoreSpec {
    File { path: PathBuf },
    Clique,
    Kcore,
    External { peer_edges: PathBuf },
    Grow { size: usize, strategy: GrowStrategy },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    Infer,
    CoreSweep { sizes: Vec<usize>, strategy: GrowStrategy },
    /// Corruption seeds are derived from the manifest seed.
    Corruption { fractions: Vec<f64>, seeds: usize },
    WindowStability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub task: Task,
    pub inputs: Inputs,
    /// Absent for core-size sweeps, which grow their own cores.
    pub core: Option<CoreSpec>,
    pub config: PipelineConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest is plain data");
        s.push('\n');
        s
    }
}
