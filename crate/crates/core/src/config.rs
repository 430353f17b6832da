//! Experiment configuration files.
//!
//! A config is a JSON object; relative paths inside it resolve against the
//! directory holding the config file.
//!
//! ```json
//! {
//!   "network": {"nodes": "nodes.csv", "edges": "edges.csv",
//!               "dwellings": "dwellings.csv", "facilities": "facilities.csv"},
//!   "marginals": "marginals.json",
//!   "population": 746,
//!   "scenarios": [{"name": "S1"}, {"name": "S2", "moves": {"0": 17}}],
//!   "replicates": 40,
//!   "base_seed": 20240501,
//!   "sweeps": {"x1": [1.0], "x2": [1.0], "x3": [0.3]},
//!   "engine": {"horizon_days": 56},
//!   "grid": {"cell_size": 50}
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, SimConfig};
use crate::indicators::{IndicatorConfig, IndicatorError};
use crate::network::{load_network, NetworkError, NetworkPaths, RoadNetwork};
use crate::population::{DemographicMarginals, PopulationError, StageTable};
use crate::scenarios::{Experiment, ExperimentError, ExperimentInputs, Scenario, Sweeps};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Raster cell edge in meters.
    pub cell_size: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { cell_size: 100.0 }
    }
}

fn default_replicates() -> usize {
    40
}

/// Raw contents of an experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkPaths,
    /// Demographic marginals; the built-in Premeno column when absent.
    #[serde(default)]
    pub marginals: Option<PathBuf>,
    /// Aging-stage table; the built-in table when absent.
    #[serde(default)]
    pub stages: Option<PathBuf>,
    /// Agents per replicate; the marginals' population when absent.
    #[serde(default)]
    pub population: Option<usize>,
    pub scenarios: Vec<Scenario>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub sweeps: Sweeps,
    #[serde(default)]
    pub engine: SimConfig,
    /// Indicator settings; uniform kind weights over `engine.n_facilities` when absent.
    #[serde(default)]
    pub indicators: Option<IndicatorConfig>,
    #[serde(default)]
    pub grid: GridConfig,
}

/// A validated config with every referenced input loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub net: RoadNetwork,
    pub marginals: DemographicMarginals,
    pub stages: StageTable,
    pub indicators: IndicatorConfig,
    pub experiment: Experiment,
}

fn read_text(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Loads demographic marginals from a JSON file and validates them.
pub fn load_marginals(path: &Path) -> Result<DemographicMarginals, ConfigError> {
    let m: DemographicMarginals = parse_json(path, &read_text(path)?)?;
    m.validate()?;
    Ok(m)
}

/// Loads an aging-stage table (JSON array of stage specs).
pub fn load_stages(path: &Path) -> Result<StageTable, ConfigError> {
    let t: StageTable = parse_json(path, &read_text(path)?)?;
    t.validate()?;
    Ok(t)
}

impl ExperimentConfig {
    pub fn from_json(path: &Path, text: &str) -> Result<Self, ConfigError> {
        parse_json(path, text)
    }

    /// Network tables, marginals and stage table, resolved against `base_dir`.
    pub fn input_files(&self, base_dir: &Path) -> Vec<PathBuf> {
        let mut files: Vec<PathBuf> = self
            .network
            .resolve(base_dir)
            .all()
            .iter()
            .map(|p| p.to_path_buf())
            .collect();
        files.extend(self.marginals.iter().map(|p| base_dir.join(p)));
        files.extend(self.stages.iter().map(|p| base_dir.join(p)));
        files
    }
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read_text(path)?;
        let config = ExperimentConfig::from_json(path, &text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, base_dir)
    }

    pub fn from_config(config: ExperimentConfig, base_dir: PathBuf) -> Result<Self, ConfigError> {
        config.engine.validate()?;
        let net = load_network(&config.network.resolve(&base_dir))?;
        let marginals = match &config.marginals {
            Some(p) => load_marginals(&base_dir.join(p))?,
            None => DemographicMarginals::premeno(),
        };
        let stages = match &config.stages {
            Some(p) => load_stages(&base_dir.join(p))?,
            None => StageTable::default(),
        };
        let mut indicators = config
            .indicators
            .clone()
            .unwrap_or_else(|| IndicatorConfig::uniform(config.engine.n_facilities));
        indicators.speeds = config.engine.speeds();
        indicators.validate()?;
        if let Some(f) = net
            .facilities()
            .iter()
            .find(|f| f.kind >= indicators.kinds())
        {
            return Err(ConfigError::Invalid(format!(
                "facility {} has kind {} but only {} kinds are weighted",
                f.id,
                f.kind,
                indicators.kinds()
            )));
        }
        if !(config.grid.cell_size.is_finite() && config.grid.cell_size > 0.0) {
            return Err(ConfigError::Invalid("grid.cell_size must be > 0".into()));
        }
        let scenarios: [Scenario; 2] =
            config.scenarios.clone().try_into().map_err(|v: Vec<_>| {
                ConfigError::Invalid(format!("expected exactly 2 scenarios, found {}", v.len()))
            })?;
        let experiment = Experiment {
            scenarios,
            replicates: config.replicates,
            base_seed: config.base_seed,
            sweeps: config.sweeps.clone(),
            population: config.population.unwrap_or(marginals.population as usize),
        };
        experiment.validate(&net, &config.engine)?;
        Ok(LoadedConfig {
            config,
            base_dir,
            net,
            marginals,
            stages,
            indicators,
            experiment,
        })
    }

    /// Replaces the experiment's base seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.base_seed = seed;
        self.experiment.base_seed = seed;
        self
    }

    pub fn inputs(&self) -> ExperimentInputs<'_> {
        ExperimentInputs {
            net: &self.net,
            marginals: &self.marginals,
            stages: &self.stages,
            sim: &self.config.engine,
            indicators: &self.indicators,
        }
    }

    pub fn scenario(&self, name: &str) -> Option<&Scenario> {
        self.experiment.scenarios.iter().find(|s| s.name == name)
    }

    pub fn input_files(&self) -> Vec<PathBuf> {
        self.config.input_files(&self.base_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_position() {
        let err =
            ExperimentConfig::from_json(Path::new("x.json"), "{\n  \"network\": 3\n}").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_engine_keys_are_rejected() {
        let text = r#"{"network": {"nodes": "n", "edges": "e", "dwellings": "d", "facilities": "f"},
                       "scenarios": [], "engine": {"wk_sped": 3}}"#;
        let err = ExperimentConfig::from_json(Path::new("x.json"), text).unwrap_err();
        assert!(err.to_string().contains("wk_sped"), "{err}");
    }

    #[test]
    fn defaults_fill_in() {
        let text = r#"{"network": {"nodes": "n", "edges": "e", "dwellings": "d", "facilities": "f"},
                       "scenarios": [{"name": "S1"}, {"name": "S2", "moves": {"0": 4}}]}"#;
        let cfg = ExperimentConfig::from_json(Path::new("x.json"), text).unwrap();
        assert_eq!(cfg.replicates, 40);
        assert_eq!(cfg.engine, SimConfig::default());
        assert_eq!(cfg.scenarios[1].moves[&0], 4);
        assert_eq!(
            cfg.input_files(Path::new("/base"))[0],
            PathBuf::from("/base/n")
        );
    }
}
