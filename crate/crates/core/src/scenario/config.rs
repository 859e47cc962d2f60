use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::econ::ModelParams;
use crate::error::{Error, Result};
use crate::term_structure::DEFAULT_REPORT_HORIZON;
use crate::timeline::{annualize, read_distribution, ArrivalDistribution, NbbSpec};
use crate::transition::SolverSettings;

/// A scenario file: `[model]`, `[timeline]`, `[solver]` and `[report]` tables.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub model: ModelParams,
    pub timeline: TimelineConfig,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub report: ReportConfig,
    /// Directory that relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Exactly one of `annual_probs` (with `p_never`), `distribution_file` or `nbb`.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineConfig {
    pub annual_probs: Option<Vec<f64>>,
    pub p_never: Option<f64>,
    pub distribution_file: Option<PathBuf>,
    pub nbb: Option<NbbSpec>,
    /// Overrides the source label written to outputs.
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub horizon: usize,
    pub lambdas: Vec<f64>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            horizon: DEFAULT_REPORT_HORIZON,
            lambdas: vec![0.0, 1.0, 2.0, 4.0],
            output_dir: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let t = &self.timeline;
        let sources = [t.annual_probs.is_some(), t.distribution_file.is_some(), t.nbb.is_some()]
            .iter()
            .filter(|s| **s)
            .count();
        if sources != 1 {
            return Err(Error::config(
                "timeline needs exactly one of annual_probs, distribution_file or nbb",
            ));
        }
        if t.p_never.is_some() != t.annual_probs.is_some() {
            return Err(Error::config("p_never goes with annual_probs and is required there"));
        }
        if let Some(file) = &t.distribution_file {
            let p = self.resolve(file);
            if !p.is_file() {
                return Err(Error::config(format!(
                    "distribution file {} does not exist",
                    p.display()
                )));
            }
        }
        if let Some(spec) = &t.nbb {
            spec.validate()?;
        }
        if self.report.lambdas.is_empty() {
            return Err(Error::config("report.lambdas must not be empty"));
        }
        for &lambda in &self.report.lambdas {
            self.model.with_lambda(lambda).validate()?;
        }
        if self.report.horizon == 0 {
            return Err(Error::config("report.horizon must be positive"));
        }
        Ok(())
    }

    /// The arrival distribution described by `[timeline]`.
    pub fn beliefs(&self) -> Result<ArrivalDistribution> {
        let t = &self.timeline;
        let dist = if let Some(probs) = &t.annual_probs {
            ArrivalDistribution::new(probs.clone(), t.p_never.unwrap_or(0.0), "inline")
        } else if let Some(file) = &t.distribution_file {
            read_distribution(self.resolve(file))
        } else if let Some(spec) = &t.nbb {
            annualize(spec)
        } else {
            Err(Error::config("no timeline source"))
        }
        .map_err(|e| match e {
            Error::Domain(m) => Error::Config(m),
            other => other,
        })?;
        Ok(match &t.label {
            Some(l) => dist.with_label(l.clone()),
            None => dist,
        })
    }
}
