//! JSON analysis configuration.
//!
//! ```json
//! {
//!   "inertia": [5.0, 4.0, 3.0],
//!   "orbit": {
//!     "omega0": 1.078e-3,
//!     "semi_major_axis": 7.0e6,
//!     "inclination_mag": 0.7853981633974483,
//!     "dipole_strength": 7.9e15
//!   },
//!   "numerics": { "rank_tol": 1e-8, "steps_per_orbit": 10000, "gramian_nodes": 4001 }
//! }
//! ```
//!
//! Every key is optional. A missing `omega0` is replaced by the Keplerian
//! rate of the semi-major axis when the file is loaded, so a loaded
//! configuration always carries every value explicitly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controllability::AnalysisSettings;
use crate::model::{
    keplerian_rate, InertiaTensor, ModelError, OrbitConfig, DEFAULT_DIPOLE_STRENGTH,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config error at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("invalid config: {0}")]
    Model(#[from] ModelError),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSection {
    #[serde(default)]
    pub omega0: Option<f64>,
    #[serde(default = "default_semi_major_axis")]
    pub semi_major_axis: f64,
    #[serde(default = "default_inclination")]
    pub inclination_mag: f64,
    #[serde(default = "default_dipole")]
    pub dipole_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default = "default_steps")]
    pub steps_per_orbit: usize,
    #[serde(default = "default_nodes")]
    pub gramian_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Principal moments `J11, J22, J33`, kg·m².
    #[serde(default = "default_inertia")]
    pub inertia: [f64; 3],
    #[serde(default)]
    pub orbit: OrbitSection,
    #[serde(default)]
    pub numerics: NumericsSection,
}

fn default_inertia() -> [f64; 3] {
    [5.0, 4.0, 3.0]
}
fn default_semi_major_axis() -> f64 {
    7.0e6
}
fn default_inclination() -> f64 {
    std::f64::consts::FRAC_PI_4
}
fn default_dipole() -> f64 {
    DEFAULT_DIPOLE_STRENGTH
}
fn default_rank_tol() -> f64 {
    crate::numerics::DEFAULT_RANK_TOL
}
fn default_steps() -> usize {
    crate::maneuver::DEFAULT_STEPS_PER_ORBIT
}
fn default_nodes() -> usize {
    crate::maneuver::DEFAULT_GRAMIAN_NODES
}

impl Default for OrbitSection {
    fn default() -> Self {
        Self {
            omega0: None,
            semi_major_axis: default_semi_major_axis(),
            inclination_mag: default_inclination(),
            dipole_strength: default_dipole(),
        }
    }
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            rank_tol: default_rank_tol(),
            steps_per_orbit: default_steps(),
            gramian_nodes: default_nodes(),
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            inertia: default_inertia(),
            orbit: OrbitSection::default(),
            numerics: NumericsSection::default(),
        }
        .materialized()
    }
}

impl AnalysisConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: AnalysisConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse {
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        let cfg = cfg.materialized();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    fn materialized(mut self) -> Self {
        if self.orbit.omega0.is_none() {
            self.orbit.omega0 = Some(keplerian_rate(self.orbit.semi_major_axis));
        }
        self
    }

    /// Checks every value; also run after command-line overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.inertia_tensor()?;
        self.orbit_config()?;
        let n = &self.numerics;
        if !(n.rank_tol > 0.0 && n.rank_tol < 1.0) {
            return Err(ConfigError::Invalid {
                field: "numerics.rank_tol",
                message: format!("must lie in (0, 1), got {}", n.rank_tol),
            });
        }
        if n.steps_per_orbit == 0 {
            return Err(ConfigError::Invalid {
                field: "numerics.steps_per_orbit",
                message: "must be at least 1".into(),
            });
        }
        if n.gramian_nodes < 3 || n.gramian_nodes.is_multiple_of(2) {
            return Err(ConfigError::Invalid {
                field: "numerics.gramian_nodes",
                message: format!("must be odd and at least 3, got {}", n.gramian_nodes),
            });
        }
        Ok(())
    }

    pub fn inertia_tensor(&self) -> Result<InertiaTensor, ConfigError> {
        let [a, b, c] = self.inertia;
        Ok(InertiaTensor::new(a, b, c)?)
    }

    pub fn orbit_config(&self) -> Result<OrbitConfig, ConfigError> {
        let o = &self.orbit;
        let omega0 = o
            .omega0
            .unwrap_or_else(|| keplerian_rate(o.semi_major_axis));
        Ok(OrbitConfig::new(
            omega0,
            o.semi_major_axis,
            o.inclination_mag,
            o.dipole_strength,
        )?)
    }

    pub fn settings(&self) -> AnalysisSettings {
        AnalysisSettings {
            rank_tol: self.numerics.rank_tol,
            gramian_nodes: self.numerics.gramian_nodes,
        }
    }
}
