//! Run configuration, read from JSON.
//!
//! Every object rejects unknown keys. Parsing is followed by [`RunConfig::validate`],
//! which builds the core types so that no task starts on a malformed input.

use std::path::{Path, PathBuf};

use mixfrac_core::{Grid, MeasureComponent, SignedMeasure};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub measure: MeasureConfig,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub sbar: f64,
    pub plus: Vec<ComponentConfig>,
    #[serde(default)]
    pub minus: Vec<ComponentConfig>,
    #[serde(default = "default_nodes_per_piece")]
    pub nodes_per_piece: usize,
}

fn default_nodes_per_piece() -> usize {
    mixfrac_core::measure::DEFAULT_NODES_PER_PIECE
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ComponentConfig {
    Atom { s: f64, weight: f64 },
    Density { lo: f64, hi: f64, coeff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Both,
    Direct,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionConfig {
    Unnormalized,
    Normalized,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Task {
    Spectrum {
        k: usize,
        #[serde(default = "default_method")]
        method: SpectrumMethod,
    },
    Maxprinciple {
        trials: usize,
        seed: u64,
    },
    Counterexample {
        alpha: f64,
        s: f64,
        #[serde(default = "default_convention")]
        convention: ConventionConfig,
        /// Interior nodes on (-1, 1); defaults to `grid.n`.
        #[serde(default)]
        n: Option<usize>,
    },
}

fn default_method() -> SpectrumMethod {
    SpectrumMethod::Both
}

fn default_convention() -> ConventionConfig {
    ConventionConfig::Unnormalized
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub emit_svg: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("mixfrac-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            emit_svg: false,
        }
    }
}

/// Core objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Validated {
    pub grid: Grid,
    pub measure: SignedMeasure,
}

impl ComponentConfig {
    fn build(self) -> mixfrac_core::Result<MeasureComponent> {
        match self {
            ComponentConfig::Atom { s, weight } => MeasureComponent::atom(s, weight),
            ComponentConfig::Density { lo, hi, coeff } => MeasureComponent::density(lo, hi, coeff),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<Validated, CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let grid = Grid::new(self.domain.a, self.domain.b, self.grid.n).map_err(|e| CliError::Config(e.to_string()))?;
        let build = |list: &[ComponentConfig]| -> Result<Vec<MeasureComponent>, CliError> {
            list.iter()
                .map(|c| c.build().map_err(|e| CliError::Config(e.to_string())))
                .collect()
        };
        if self.measure.nodes_per_piece == 0 {
            return bad("measure.nodes_per_piece must be at least 1".into());
        }
        let measure = SignedMeasure::new(build(&self.measure.plus)?, build(&self.measure.minus)?, self.measure.sbar)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.tasks.is_empty() {
            return bad("tasks: at least one task is required".into());
        }
        for (i, task) in self.tasks.iter().enumerate() {
            match *task {
                Task::Spectrum { k, .. } if k == 0 || k > grid.n() => {
                    return bad(format!("tasks[{i}].spectrum.k = {k} must lie in 1..={}", grid.n()));
                }
                Task::Maxprinciple { trials: 0, .. } => {
                    return bad(format!("tasks[{i}].maxprinciple.trials must be positive"));
                }
                Task::Counterexample { alpha, s, n, .. } => {
                    if !(alpha > 0.0 && alpha.is_finite()) {
                        return bad(format!("tasks[{i}].counterexample.alpha = {alpha} must be positive"));
                    }
                    if !(s > 0.0 && s < 1.0) {
                        return bad(format!("tasks[{i}].counterexample.s = {s} must lie in (0, 1)"));
                    }
                    if n.is_some_and(|n| n < 2) {
                        return bad(format!("tasks[{i}].counterexample.n must be at least 2"));
                    }
                }
                _ => {}
            }
        }
        Ok(Validated { grid, measure })
    }
}
