use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::community::LowDegree;
use crate::error::{Error, Result};
use crate::mobility::{AssignmentMode, RdConfig, TvcConfig};
use crate::profile::ProfileOptions;
use crate::trace_io::{Delimiter, DAY};

/// Campus population sizes usable as sample sizes or synthetic node counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Dartmouth,
    Mit,
    Uf,
    Usc,
}

impl Preset {
    pub fn population(self) -> usize {
        match self {
            Preset::Dartmouth => 1500,
            Preset::Mit => 1366,
            Preset::Uf | Preset::Usc => 3000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSource {
    /// A session file; relative paths resolve against the config file.
    Trace {
        path: PathBuf,
        #[serde(default)]
        delimiter: Option<Delimiter>,
    },
    Rd {
        #[serde(default)]
        model: RdConfig,
    },
    Tvc {
        #[serde(default)]
        model: TvcConfig,
        #[serde(default = "homogeneous")]
        assignment: AssignmentMode,
        /// Community side length in cells.
        #[serde(default = "one")]
        community_span: usize,
    },
}

fn homogeneous() -> AssignmentMode {
    AssignmentMode::Homogeneous
}

fn one() -> usize {
    1
}

impl InputSource {
    pub fn kind(&self) -> &'static str {
        match self {
            InputSource::Trace { .. } => "trace",
            InputSource::Rd { .. } => "rd",
            InputSource::Tvc { .. } => "tvc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Nested windows, in days, all starting at `window_start`.
    pub windows_days: Vec<i64>,
    /// Seconds; defaults to the start of the trace.
    pub window_start: Option<i64>,
    pub slot_length: i64,
    /// Users drawn by systematic sampling; all users when unset.
    pub sample_size: Option<usize>,
    pub power_threshold: f64,
    pub max_components: usize,
    pub graph_thresholds: Vec<f64>,
    pub bins: usize,
    pub cut_heights: Vec<f64>,
    /// Stop Girvan–Newman after this many splits without a modularity gain.
    pub gn_patience: Option<usize>,
    /// Random graphs with more edges than this get a size-matched random
    /// partition instead of a full Girvan–Newman run.
    pub q_rand_edge_limit: usize,
    /// Patience used for Girvan–Newman on random graphs.
    pub q_rand_patience: usize,
    /// Graphs with more vertices than this get path lengths from a
    /// systematic sample of this many sources.
    pub apl_source_limit: usize,
    pub low_degree: LowDegree,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            windows_days: vec![7, 14, 21, 28],
            window_start: None,
            slot_length: DAY,
            sample_size: None,
            power_threshold: 0.9,
            max_components: 7,
            graph_thresholds: vec![0.3, 0.5, 0.7],
            bins: 10,
            cut_heights: (1..10).map(|i| i as f64 / 10.0).collect(),
            gn_patience: None,
            q_rand_edge_limit: 5000,
            q_rand_patience: 25,
            apl_source_limit: 500,
            low_degree: LowDegree::Zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("reports"),
        }
    }
}

/// Everything one analysis run needs. The top-level `seed` drives sampling,
/// baselines and the generators (any generator `seed` field is replaced).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "one_u64")]
    pub seed: u64,
    /// Label for the `dataset` column of metrics files.
    #[serde(default)]
    pub dataset: Option<String>,
    /// Sets the sample size and, for generators, the node count.
    #[serde(default)]
    pub preset: Option<Preset>,
    pub input: InputSource,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one_u64() -> u64 {
    1
}

/// The parts of a config that determine the report bytes.
#[derive(Serialize)]
struct Replay<'a> {
    seed: u64,
    dataset: &'a str,
    input: &'a InputSource,
    analysis: &'a AnalysisConfig,
}

impl PipelineConfig {
    pub fn new(input: InputSource) -> Self {
        PipelineConfig {
            seed: 1,
            dataset: None,
            preset: None,
            input,
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Parse and resolve a config file; a relative trace path is taken
    /// relative to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let InputSource::Trace { path: p, .. } = &mut cfg.input {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| match &self.input {
            InputSource::Tvc {
                assignment: AssignmentMode::Grouped { groups },
                ..
            } => {
                format!("tvc-grouped{groups}")
            }
            InputSource::Tvc { .. } => "tvc-homogeneous".to_string(),
            other => other.kind().to_string(),
        })
    }

    pub fn sample_size(&self) -> Option<usize> {
        self.analysis
            .sample_size
            .or(self.preset.map(Preset::population))
    }

    pub fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            power_threshold: self.analysis.power_threshold,
            max_components: self.analysis.max_components,
        }
    }

    /// Hex SHA-256 over the seed, dataset label, input and analysis
    /// settings. The output directory is not part of it.
    pub fn config_hash(&self) -> String {
        crate::mobility::config_hash(&Replay {
            seed: self.seed,
            dataset: &self.dataset_name(),
            input: &self.effective_input(),
            analysis: &self.analysis,
        })
    }

    /// The input with the run seed and preset applied to generators.
    pub fn effective_input(&self) -> InputSource {
        let mut input = self.input.clone();
        let preset = self.preset.map(Preset::population);
        match &mut input {
            InputSource::Rd { model } => {
                model.seed = self.seed;
                if let Some(n) = preset {
                    model.node_count = n;
                }
            }
            InputSource::Tvc { model, .. } => {
                model.seed = self.seed;
                if let Some(n) = preset {
                    model.node_count = n;
                }
            }
            InputSource::Trace { .. } => {}
        }
        input
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let a = &self.analysis;
        if a.windows_days.is_empty() || a.windows_days.iter().any(|&d| d <= 0) {
            return bad("windows_days must be a nonempty list of positive day counts".into());
        }
        if a.slot_length <= 0 {
            return bad(format!("slot_length {} must be positive", a.slot_length));
        }
        if let Some(&d) = a
            .windows_days
            .iter()
            .find(|&&d| (d * DAY) % a.slot_length != 0)
        {
            return bad(format!(
                "a {d}-day window is not a whole number of {}s slots",
                a.slot_length
            ));
        }
        if self.sample_size() == Some(0) {
            return bad("sample_size must be positive".into());
        }
        self.profile_options()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if a.graph_thresholds.is_empty()
            || a.graph_thresholds.iter().any(|t| !(0.0..=1.0).contains(t))
        {
            return bad("graph_thresholds must be a nonempty list in [0, 1]".into());
        }
        if a.bins == 0 {
            return bad("bins must be positive".into());
        }
        if a.cut_heights.iter().any(|h| h.is_nan() || *h < 0.0) {
            return bad("cut_heights must be nonnegative".into());
        }
        if a.gn_patience == Some(0) || a.q_rand_patience == 0 {
            return bad("patience values must be positive".into());
        }
        if a.apl_source_limit == 0 {
            return bad("apl_source_limit must be positive".into());
        }
        let as_config = |e: Error| Error::Config(e.to_string());
        match self.effective_input() {
            InputSource::Trace { path, .. } => {
                if !path.is_file() {
                    return bad(format!("trace file {} does not exist", path.display()));
                }
            }
            InputSource::Rd { model } => model.validate().map_err(as_config)?,
            InputSource::Tvc {
                model,
                assignment,
                community_span,
            } => {
                model.validate().map_err(as_config)?;
                crate::mobility::assign_communities_sized(
                    model.node_count,
                    assignment,
                    &model.world,
                    community_span,
                    self.seed,
                )
                .map_err(as_config)?;
            }
        }
        Ok(())
    }
}
