//! Experiment definitions, read from TOML and/or command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use hsira_core::driver::MethodSpec;
use hsira_core::extraction::RefinedApproach;
use hsira_core::governor::ToleranceMode;
use hsira_core::krylov::GmresOptions;
use hsira_core::precond::IlutOptions;
use hsira_core::{SolveConfig, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::parse_complex;

/// Environment variable naming a directory that relative matrix paths in
/// config files are resolved against.
pub const MATRIX_DIR_ENV: &str = "HSIRA_MATRIX_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Toml { path: String, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

/// Inner accuracy of one table column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Accuracy {
    Adaptive(f64),
    Exact,
    Fixed(f64),
}

impl Accuracy {
    pub fn mode(self) -> ToleranceMode {
        match self {
            Self::Adaptive(eps_tilde) => ToleranceMode::Adaptive { eps_tilde },
            Self::Exact => ToleranceMode::Exact,
            Self::Fixed(eps) => ToleranceMode::Fixed(eps),
        }
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Adaptive(e) => write!(f, "{e:e}"),
            Self::Exact => f.write_str("exact"),
            Self::Fixed(e) => write!(f, "fixed{e:e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefinedChoice {
    #[default]
    CrossProduct,
    QrSvd,
}

impl From<RefinedChoice> for RefinedApproach {
    fn from(c: RefinedChoice) -> Self {
        match c {
            RefinedChoice::CrossProduct => RefinedApproach::CrossProduct,
            RefinedChoice::QrSvd => RefinedApproach::QrSvd,
        }
    }
}

fn default_methods() -> Vec<String> {
    MethodSpec::ALL.iter().map(|m| m.name().to_ascii_lowercase()).collect()
}
fn default_m_max() -> usize {
    30
}
fn default_max_restarts() -> usize {
    500
}
fn default_drop_tol() -> f64 {
    1e-3
}
fn default_gmres_restart() -> usize {
    30
}
fn default_gmres_cap() -> usize {
    1000
}
fn default_tol_factor() -> f64 {
    1e-12
}
fn default_out() -> PathBuf {
    PathBuf::from("hsira-out")
}

/// One sweep: a matrix, a target and the (method, accuracy) cells to run.
///
/// `matrix` is a Matrix Market path, or `planted:N` / `planted-complex:N`
/// for a generated `N×N` problem with known spectrum (seeded by `seed`,
/// whose built-in target is used when `sigma` is absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub matrix: String,
    #[serde(default)]
    pub sigma: Option<String>,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default)]
    pub eps_tilde: Vec<f64>,
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub fixed_eps: Vec<f64>,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_max_restarts")]
    pub max_restarts: usize,
    #[serde(default = "default_drop_tol")]
    pub ilu_drop_tol: f64,
    #[serde(default = "default_gmres_restart")]
    pub gmres_restart: usize,
    #[serde(default = "default_gmres_cap")]
    pub gmres_cap: usize,
    #[serde(default = "default_tol_factor")]
    pub tol_factor: f64,
    #[serde(default)]
    pub refined: RefinedChoice,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for the sweep; `None` uses all cores.
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Where the matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    File(PathBuf),
    Planted { n: usize, complex: bool },
}

impl ExperimentConfig {
    /// Defaults for everything but the matrix.
    pub fn new(matrix: impl Into<String>) -> Self {
        Self {
            name: None,
            matrix: matrix.into(),
            sigma: None,
            methods: default_methods(),
            eps_tilde: Vec::new(),
            exact: false,
            fixed_eps: Vec::new(),
            m_max: default_m_max(),
            max_restarts: default_max_restarts(),
            ilu_drop_tol: default_drop_tol(),
            gmres_restart: default_gmres_restart(),
            gmres_cap: default_gmres_cap(),
            tol_factor: default_tol_factor(),
            refined: RefinedChoice::default(),
            out: default_out(),
            seed: 0,
            threads: None,
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Toml {
            path: origin.into(),
            source,
        })
    }

    /// Loads a config file; a relative matrix path is resolved against
    /// `$HSIRA_MATRIX_DIR` when set, else against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        if let MatrixSource::File(p) = cfg.matrix_source()? {
            if p.is_relative() {
                let base = match std::env::var_os(MATRIX_DIR_ENV) {
                    Some(dir) => PathBuf::from(dir),
                    None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
                };
                cfg.matrix = base.join(p).display().to_string();
            }
        }
        Ok(cfg)
    }

    pub fn matrix_source(&self) -> Result<MatrixSource, ConfigError> {
        let planted = |rest: &str, complex: bool| {
            rest.parse::<usize>()
                .ok()
                .filter(|&n| n >= 4)
                .map(|n| MatrixSource::Planted { n, complex })
                .ok_or_else(|| ConfigError::Invalid(format!("bad planted size in `{}` (need N >= 4)", self.matrix)))
        };
        if let Some(rest) = self.matrix.strip_prefix("planted-complex:") {
            planted(rest, true)
        } else if let Some(rest) = self.matrix.strip_prefix("planted:") {
            planted(rest, false)
        } else if self.matrix.is_empty() {
            Err(ConfigError::Invalid("no matrix given".into()))
        } else {
            Ok(MatrixSource::File(PathBuf::from(&self.matrix)))
        }
    }

    pub fn sigma(&self) -> Result<Option<C64>, ConfigError> {
        self.sigma
            .as_deref()
            .map(|s| parse_complex(s).map_err(|e| ConfigError::Invalid(e.to_string())))
            .transpose()
    }

    pub fn method_specs(&self) -> Result<Vec<MethodSpec>, ConfigError> {
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("no methods selected".into()));
        }
        self.methods
            .iter()
            .map(|m| m.parse::<MethodSpec>().map_err(|e| ConfigError::Invalid(e.to_string())))
            .collect()
    }

    /// Accuracy columns in table order: adaptive ε̃ values, then exact, then fixed.
    pub fn accuracies(&self) -> Result<Vec<Accuracy>, ConfigError> {
        let mut out = Vec::new();
        for &e in &self.eps_tilde {
            if !(e > 0.0 && e < 1.0) {
                return Err(ConfigError::Invalid(format!("eps_tilde {e} outside (0, 1)")));
            }
            out.push(Accuracy::Adaptive(e));
        }
        if self.exact {
            out.push(Accuracy::Exact);
        }
        for &e in &self.fixed_eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(ConfigError::Invalid(format!("fixed inner tolerance {e} must be positive")));
            }
            out.push(Accuracy::Fixed(e));
        }
        if out.is_empty() {
            return Err(ConfigError::Invalid("no accuracy selected (use eps_tilde, exact or fixed_eps)".into()));
        }
        Ok(out)
    }

    /// Solver settings shared by all cells, for target `sigma`.
    pub fn solve_config(&self, sigma: C64) -> Result<SolveConfig, ConfigError> {
        let cfg = SolveConfig {
            sigma,
            m_max: self.m_max,
            max_restarts: self.max_restarts,
            tol_factor: self.tol_factor,
            mode: ToleranceMode::Exact,
            ilu: IlutOptions::new(self.ilu_drop_tol),
            gmres: GmresOptions {
                restart: self.gmres_restart,
                max_total_iters: self.gmres_cap,
            },
            refined: self.refined.into(),
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.ilu_drop_tol >= 0.0 && self.ilu_drop_tol.is_finite()) {
            return Err(ConfigError::Invalid(format!("ilu drop tolerance {} must be nonnegative", self.ilu_drop_tol)));
        }
        Ok(cfg)
    }

    /// Checks everything that can be checked without touching the matrix.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let source = self.matrix_source()?;
        let sigma = self.sigma()?;
        if sigma.is_none() && matches!(source, MatrixSource::File(_)) {
            return Err(ConfigError::Invalid("sigma is required for a matrix file".into()));
        }
        self.method_specs()?;
        self.accuracies()?;
        self.solve_config(sigma.unwrap_or_default())?;
        if self.threads == Some(0) {
            return Err(ConfigError::Invalid("threads must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_gets_defaults() {
        let cfg = ExperimentConfig::from_toml_str("matrix = \"a.mtx\"\nsigma = \"-24\"\nexact = true\n", "t").unwrap();
        assert_eq!(cfg.m_max, 30);
        assert_eq!(cfg.gmres_restart, 30);
        assert_eq!(cfg.tol_factor, 1e-12);
        assert_eq!(cfg.method_specs().unwrap(), MethodSpec::ALL.to_vec());
        assert_eq!(cfg.accuracies().unwrap(), vec![Accuracy::Exact]);
        assert_eq!(cfg.sigma().unwrap(), Some(C64::new(-24.0, 0.0)));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(ExperimentConfig::from_toml_str("matrix = \"a\"\nsigmaa = \"1\"\n", "t").is_err());
        let mut cfg = ExperimentConfig::new("a.mtx");
        cfg.eps_tilde = vec![1e-3];
        assert!(cfg.validate().is_err(), "sigma missing");
        cfg.sigma = Some("1+".into());
        assert!(cfg.validate().is_err());
        cfg.sigma = Some("1".into());
        cfg.validate().unwrap();
        cfg.methods = vec!["foo".into()];
        assert!(cfg.validate().is_err());
        cfg.methods = vec!["rhsira".into()];
        cfg.m_max = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn accuracy_order_and_labels() {
        let mut cfg = ExperimentConfig::new("planted:10");
        cfg.eps_tilde = vec![1e-3, 1e-4];
        cfg.exact = true;
        let acc = cfg.accuracies().unwrap();
        let labels: Vec<String> = acc.iter().map(ToString::to_string).collect();
        assert_eq!(labels, ["1e-3", "1e-4", "exact"]);
        assert_eq!(cfg.matrix_source().unwrap(), MatrixSource::Planted { n: 10, complex: false });
        cfg.validate().unwrap();
    }

    #[test]
    fn shipped_fixtures_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                let cfg = ExperimentConfig::load(&path).unwrap();
                cfg.validate().unwrap();
                assert_eq!(cfg.method_specs().unwrap().len() * cfg.accuracies().unwrap().len(), 18, "{path:?}");
                seen += 1;
            }
        }
        assert!(seen >= 4);
    }
}
